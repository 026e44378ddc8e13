#pragma once

#include "autodetect/autoencoder.hpp"
#include "autodetect/image.hpp"
#include "autodetect/manifest.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace autodetect::detect {

struct Aggregator {
    enum class Kind { mean, max, percentile };
    Kind kind = Kind::mean;
    double p = 0.875;  // percentile only, in (0, 1)

    static Aggregator mean() { return {}; }
    static Aggregator max() { return {Kind::max, 0.875}; }
    static Aggregator percentile(double p) { return {Kind::percentile, p}; }

    friend bool operator==(const Aggregator&, const Aggregator&) = default;
};

/// "mean", "max" or "percentile:<p>".
std::string to_string(const Aggregator& a);
Aggregator parse_aggregator(std::string_view s);

struct SliceConfig {
    int side = 25;
    Aggregator aggregator;

    void validate() const;
};

/// Slice errors on the stride-1 grid; (H - s + 1) x (W - s + 1) values.
struct SliceErrorMap {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
    double max() const;
};

/// Gaussian fitted to every slice error of a clean validation set.
struct GaussianRef {
    double mu = 0.0;
    double sigma = 1.0;  // population standard deviation
    std::size_t n = 0;
    int slice = 0;
    Aggregator aggregator;
};

struct DetectionReport {
    std::string image;
    double q_max = 0.0;
    double cdf = 0.0;
    bool verdict = false;
    double threshold = 0.95;
    std::optional<bool> truth;
};

/// Aggregates every s x s window anchored at (i, j). The mean uses a
/// summed-area table; percentile uses the nearest-rank definition
/// (value of rank ceil(p * s * s)).
SliceErrorMap slice_errors(const ErrorMap& map, const SliceConfig& cfg);

/// Standard normal CDF via erfc; Phi(0) is exactly 0.5.
double normal_cdf(double z);

/// Mean and population standard deviation of a set of slice errors,
/// combined per block with Chan's parallel update in block order.
GaussianRef fit_gaussian(std::span<const SliceErrorMap> maps, const SliceConfig& cfg);

GaussianRef fit_reference(const ae::AEModel& model, const Manifest& val_manifest, const SliceConfig& cfg);

/// Builds the reference from precomputed error maps.
GaussianRef fit_reference_maps(std::span<const ErrorMap> maps, const SliceConfig& cfg);

struct Score {
    double q_max = 0.0;
    double cdf = 0.0;
};

Score score_error_map(const ErrorMap& map, const GaussianRef& ref, const SliceConfig& cfg);
Score score_image(const ae::AEModel& model, const GaussianRef& ref, const ImageTensor& img, const SliceConfig& cfg);

/// cdf >= t is poisoned; t must lie in [0.5, 1].
bool classify(double cdf, double t);

/// One report row per manifest record in manifest order. Images are resized
/// to the model input side.
std::vector<DetectionReport> scan(const ae::AEModel& model, const GaussianRef& ref, const Manifest& manifest,
                                  const SliceConfig& cfg, double t);

/// Re-applies a threshold to existing report rows.
std::vector<DetectionReport> reclassify(std::span<const DetectionReport> reports, double t);

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    double val_reference = 0.0;  // expected count under the fitted Gaussian
    std::size_t clean = 0;
    std::size_t poisoned = 0;
};

/// Equal-width bins spanning mu - 4 sigma up to the largest q_max. Rows
/// with truth == true count as poisoned, every other row as clean. The
/// reference column is n * (Phi(right) - Phi(left)).
std::vector<HistogramBin> histogram(const GaussianRef& ref, std::span<const DetectionReport> reports, int bins);

void write_reference(const GaussianRef& ref, const std::filesystem::path& path);
GaussianRef read_reference(const std::filesystem::path& path);

void write_reports(std::span<const DetectionReport> reports, const std::filesystem::path& path);
std::vector<DetectionReport> read_reports(const std::filesystem::path& path);

/// CSV: bin_left,bin_right,count_val_reference,count_clean_test,count_poisoned_test
void write_histogram(std::span<const HistogramBin> bins, const std::filesystem::path& path);

}  // namespace autodetect::detect
