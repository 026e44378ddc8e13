#include "autodetect/detector.hpp"

#include "autodetect/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace autodetect::detect {

using nlohmann::json;

std::string to_string(const Aggregator& a) {
    switch (a.kind) {
        case Aggregator::Kind::mean: return "mean";
        case Aggregator::Kind::max: return "max";
        case Aggregator::Kind::percentile: {
            std::ostringstream os;
            os << "percentile:" << std::setprecision(17) << a.p;
            return os.str();
        }
    }
    return "mean";
}

Aggregator parse_aggregator(std::string_view s) {
    if (s == "mean") return Aggregator::mean();
    if (s == "max") return Aggregator::max();
    constexpr std::string_view prefix = "percentile:";
    if (s.substr(0, prefix.size()) == prefix) {
        const std::string num(s.substr(prefix.size()));
        try {
            std::size_t used = 0;
            const double p = std::stod(num, &used);
            if (used == num.size() && p > 0.0 && p < 1.0) return Aggregator::percentile(p);
        } catch (const std::logic_error&) {
        }
    }
    throw Error("invalid aggregator '" + std::string(s) + "' (expected mean, max or percentile:<p> with 0<p<1)");
}

void SliceConfig::validate() const {
    if (side < 2) throw Error("slice side must be at least 2");
    if (aggregator.kind == Aggregator::Kind::percentile && !(aggregator.p > 0.0 && aggregator.p < 1.0)) {
        throw Error("percentile aggregator needs p in (0, 1)");
    }
}

double SliceErrorMap::max() const {
    if (values.empty()) throw Error("empty slice error map");
    return *std::max_element(values.begin(), values.end());
}

namespace {

SliceErrorMap pool_mean(const ErrorMap& map, int s) {
    const int h = map.height(), w = map.width();
    // Summed-area table with a zero border row/column.
    std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
    auto S = [&](int y, int x) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += map.at(y, x);
            S(y + 1, x + 1) = S(y, x + 1) + row;
        }
    }
    SliceErrorMap out{h - s + 1, w - s + 1, {}};
    out.values.resize(static_cast<std::size_t>(out.rows) * out.cols);
    const double area = static_cast<double>(s) * s;
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) {
            const double sum = S(i + s, j + s) - S(i, j + s) - S(i + s, j) + S(i, j);
            // Round-off can push a window of zeros slightly negative.
            out.values[static_cast<std::size_t>(i) * out.cols + j] = std::max(0.0, sum / area);
        }
    }
    return out;
}

SliceErrorMap pool_max(const ErrorMap& map, int s) {
    const int h = map.height(), w = map.width();
    const int cols = w - s + 1;
    std::vector<double> row_max(static_cast<std::size_t>(h) * cols);
    for (int y = 0; y < h; ++y) {
        for (int j = 0; j < cols; ++j) {
            double m = map.at(y, j);
            for (int k = 1; k < s; ++k) m = std::max(m, map.at(y, j + k));
            row_max[static_cast<std::size_t>(y) * cols + j] = m;
        }
    }
    SliceErrorMap out{h - s + 1, cols, {}};
    out.values.resize(static_cast<std::size_t>(out.rows) * cols);
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            double m = row_max[static_cast<std::size_t>(i) * cols + j];
            for (int k = 1; k < s; ++k) m = std::max(m, row_max[static_cast<std::size_t>(i + k) * cols + j]);
            out.values[static_cast<std::size_t>(i) * cols + j] = m;
        }
    }
    return out;
}

std::size_t nearest_rank(double p, std::size_t n) {
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    return std::clamp<std::size_t>(rank, 1, n);
}

SliceErrorMap pool_percentile(const ErrorMap& map, int s, double p) {
    SliceErrorMap out{map.height() - s + 1, map.width() - s + 1, {}};
    out.values.resize(static_cast<std::size_t>(out.rows) * out.cols);
    const std::size_t n = static_cast<std::size_t>(s) * s;
    const std::size_t k = nearest_rank(p, n) - 1;
    std::vector<double> window(n);
    for (int i = 0; i < out.rows; ++i) {
        for (int j = 0; j < out.cols; ++j) {
            std::size_t idx = 0;
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) window[idx++] = map.at(i + y, j + x);
            std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(k), window.end());
            out.values[static_cast<std::size_t>(i) * out.cols + j] = window[k];
        }
    }
    return out;
}

void check_ref(const GaussianRef& ref, const SliceConfig& cfg) {
    if (ref.slice != cfg.side) {
        throw Error("reference was fitted with slice " + std::to_string(ref.slice) + ", scoring uses slice " +
                    std::to_string(cfg.side));
    }
    if (!(ref.aggregator == cfg.aggregator)) {
        throw Error("reference was fitted with aggregator " + to_string(ref.aggregator) + ", scoring uses " +
                    to_string(cfg.aggregator));
    }
    if (!(ref.sigma > 0.0)) throw Error("reference sigma must be positive");
}

}  // namespace

SliceErrorMap slice_errors(const ErrorMap& map, const SliceConfig& cfg) {
    cfg.validate();
    if (cfg.side > map.height() || cfg.side > map.width()) {
        throw Error("slice side " + std::to_string(cfg.side) + " exceeds the " + std::to_string(map.height()) + "x" +
                    std::to_string(map.width()) + " error map");
    }
    switch (cfg.aggregator.kind) {
        case Aggregator::Kind::mean: return pool_mean(map, cfg.side);
        case Aggregator::Kind::max: return pool_max(map, cfg.side);
        case Aggregator::Kind::percentile: return pool_percentile(map, cfg.side, cfg.aggregator.p);
    }
    return pool_mean(map, cfg.side);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

GaussianRef fit_gaussian(std::span<const SliceErrorMap> maps, const SliceConfig& cfg) {
    // Welford within a map, Chan et al. pairwise update across maps.
    std::size_t n = 0;
    double mean = 0.0, m2 = 0.0;
    for (const auto& map : maps) {
        std::size_t nb = 0;
        double mb = 0.0, m2b = 0.0;
        for (double v : map.values) {
            ++nb;
            const double d = v - mb;
            mb += d / static_cast<double>(nb);
            m2b += d * (v - mb);
        }
        if (nb == 0) continue;
        const double total = static_cast<double>(n + nb);
        const double delta = mb - mean;
        mean += delta * static_cast<double>(nb) / total;
        m2 += m2b + delta * delta * static_cast<double>(n) * static_cast<double>(nb) / total;
        n += nb;
    }
    if (n < 2) throw Error("reference needs at least two slice errors");
    const double sigma = std::sqrt(m2 / static_cast<double>(n));
    if (!(sigma >= 1e-12)) {
        throw Error("degenerate reference: slice-error standard deviation is below 1e-12");
    }
    return {mean, sigma, n, cfg.side, cfg.aggregator};
}

GaussianRef fit_reference_maps(std::span<const ErrorMap> maps, const SliceConfig& cfg) {
    cfg.validate();
    if (maps.empty()) throw Error("validation set is empty");
    std::vector<SliceErrorMap> slices(maps.size());
    parallel_for(maps.size(), [&](std::size_t i) { slices[i] = slice_errors(maps[i], cfg); });
    return fit_gaussian(slices, cfg);
}

GaussianRef fit_reference(const ae::AEModel& model, const Manifest& val_manifest, const SliceConfig& cfg) {
    cfg.validate();
    if (val_manifest.records.empty()) throw Error("validation manifest is empty");
    std::vector<ErrorMap> maps(val_manifest.size());
    parallel_for(val_manifest.size(), [&](std::size_t i) {
        maps[i] = ae::error_map(model, ae::load_model_input(val_manifest.resolve(val_manifest.records[i]), model.arch));
    });
    return fit_reference_maps(maps, cfg);
}

Score score_error_map(const ErrorMap& map, const GaussianRef& ref, const SliceConfig& cfg) {
    check_ref(ref, cfg);
    const double q_max = slice_errors(map, cfg).max();
    return {q_max, normal_cdf((q_max - ref.mu) / ref.sigma)};
}

Score score_image(const ae::AEModel& model, const GaussianRef& ref, const ImageTensor& img, const SliceConfig& cfg) {
    check_ref(ref, cfg);
    return score_error_map(ae::error_map(model, img), ref, cfg);
}

bool classify(double cdf, double t) {
    if (!(t >= 0.5 && t <= 1.0)) throw Error("threshold t must lie in [0.5, 1]");
    return cdf >= t;
}

std::vector<DetectionReport> scan(const ae::AEModel& model, const GaussianRef& ref, const Manifest& manifest,
                                  const SliceConfig& cfg, double t) {
    classify(0.5, t);  // validates t up front
    check_ref(ref, cfg);
    std::vector<DetectionReport> out(manifest.size());
    parallel_for(manifest.size(), [&](std::size_t i) {
        const auto& rec = manifest.records[i];
        const auto img = ae::load_model_input(manifest.resolve(rec), model.arch);
        const auto s = score_image(model, ref, img, cfg);
        out[i] = {rec.image, s.q_max, s.cdf, classify(s.cdf, t), t, std::nullopt};
    });
    return out;
}

std::vector<DetectionReport> reclassify(std::span<const DetectionReport> reports, double t) {
    std::vector<DetectionReport> out(reports.begin(), reports.end());
    for (auto& r : out) {
        r.verdict = classify(r.cdf, t);
        r.threshold = t;
    }
    return out;
}

std::vector<HistogramBin> histogram(const GaussianRef& ref, std::span<const DetectionReport> reports, int bins) {
    if (bins < 1) throw Error("histogram needs at least one bin");
    double lo = ref.mu - 4.0 * ref.sigma;
    double hi = ref.mu + 4.0 * ref.sigma;
    for (const auto& r : reports) {
        lo = std::min(lo, r.q_max);
        hi = std::max(hi, r.q_max);
    }
    const double width = (hi - lo) / bins;
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        auto& bin = out[b];
        bin.left = lo + width * b;
        bin.right = b + 1 == bins ? hi : lo + width * (b + 1);
        bin.val_reference = static_cast<double>(ref.n) * (normal_cdf((bin.right - ref.mu) / ref.sigma) -
                                                          normal_cdf((bin.left - ref.mu) / ref.sigma));
    }
    for (const auto& r : reports) {
        auto b = width > 0.0 ? static_cast<int>((r.q_max - lo) / width) : 0;
        b = std::clamp(b, 0, bins - 1);
        if (r.truth.value_or(false)) {
            ++out[b].poisoned;
        } else {
            ++out[b].clean;
        }
    }
    return out;
}

void write_reference(const GaussianRef& ref, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    json j = {{"mu", ref.mu},
              {"sigma", ref.sigma},
              {"n", ref.n},
              {"slice", ref.slice},
              {"aggregator", to_string(ref.aggregator)}};
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

GaussianRef read_reference(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reference " + path.string());
    try {
        const auto j = json::parse(in);
        GaussianRef ref;
        ref.mu = j.at("mu").get<double>();
        ref.sigma = j.at("sigma").get<double>();
        ref.n = j.at("n").get<std::size_t>();
        ref.slice = j.at("slice").get<int>();
        ref.aggregator = parse_aggregator(j.value("aggregator", std::string("mean")));
        if (!(ref.sigma > 0.0)) throw Error("reference sigma must be positive");
        return ref;
    } catch (const json::exception& e) {
        throw Error("invalid reference file " + path.string() + ": " + e.what());
    }
}

void write_reports(std::span<const DetectionReport> reports, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& r : reports) {
        json j = {{"image", r.image}, {"q_max", r.q_max}, {"cdf", r.cdf}, {"verdict", r.verdict},
                  {"threshold", r.threshold}};
        if (r.truth) j["truth"] = *r.truth;
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<DetectionReport> read_reports(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report " + path.string());
    std::vector<DetectionReport> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            DetectionReport r;
            r.image = j.at("image").get<std::string>();
            r.q_max = j.at("q_max").get<double>();
            r.cdf = j.at("cdf").get<double>();
            r.verdict = j.at("verdict").get<bool>();
            r.threshold = j.value("threshold", 0.95);
            if (j.contains("truth")) r.truth = j.at("truth").get<bool>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw Error("invalid report line in " + path.string() + ": " + e.what());
        }
    }
    return out;
}

void write_histogram(std::span<const HistogramBin> bins, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "bin_left,bin_right,count_val_reference,count_clean_test,count_poisoned_test\n";
    out << std::setprecision(10);
    for (const auto& b : bins) {
        out << b.left << "," << b.right << "," << b.val_reference << "," << b.clean << "," << b.poisoned << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace autodetect::detect
