#pragma once

#include "autodetect/autoencoder.hpp"
#include "autodetect/detector.hpp"
#include "autodetect/poison.hpp"
#include "autodetect/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace autodetect::metrics {

/// Parallel scores and labels; label true marks a poisoned sample.
struct LabeledScores {
    std::vector<double> scores;
    std::vector<bool> labels;

    std::size_t positives() const;
    std::size_t negatives() const;
    void add(double score, bool label) {
        scores.push_back(score);
        labels.push_back(label);
    }
};

/// P(score_pos > score_neg) + 0.5 P(equal) from the Mann-Whitney rank sum
/// with average ranks for ties. Throws unless both classes are present.
double auroc(const LabeledScores& s);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // samples with score >= threshold are flagged
};

/// (0,0) at threshold +inf, then one point per distinct score in descending
/// order; the last point is (1,1).
std::vector<RocPoint> roc_curve(const LabeledScores& s);
double trapezoid_area(std::span<const RocPoint> curve);
void write_roc(std::span<const RocPoint> curve, const std::filesystem::path& path);

struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

struct AccuracyResult {
    double accuracy = 0.0;
    Confusion confusion;
};

/// Accuracy of the verdicts already stored in the reports.
AccuracyResult accuracy_at(std::span<const detect::DetectionReport> reports);

/// Sets `truth` on each report from the ground-truth sidecar, matching by
/// image path. Throws if a report image has no ground-truth record.
void attach_truth(std::vector<detect::DetectionReport>& reports, std::span<const poison::PoisonRecord> truth);

/// q_max scores with truth labels; every report must carry truth.
LabeledScores scores_from_reports(std::span<const detect::DetectionReport> reports);

struct SweepConfig {
    synth::PatchSpec patch;  // side is overridden per column
    std::vector<int> patch_sides{13, 26};
    std::vector<int> slice_sides{13, 26};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    double alpha = 0.8;
    poison::Placement placement;
    detect::Aggregator aggregator;
};

/// AUROC grid, rows = slice sides, columns = patch sides.
struct SweepResult {
    synth::PatchKind kind = synth::PatchKind::checkerboard;
    std::vector<int> slice_sides;
    std::vector<int> patch_sides;
    std::vector<std::vector<double>> auroc;  // [slice][patch], mean over seeds

    std::vector<double> row_means() const;
    std::vector<double> col_means() const;
    double grand_mean() const;
    double diagonal_mean() const;      // cells with slice == patch
    double off_diagonal_mean() const;  // cells with slice != patch
};

/// For every (patch side, seed) the test images are poisoned at rate 1 in
/// append mode (a balanced clean + poisoned evaluation set); for every slice
/// side the reference is fitted on the validation images and the AUROC of
/// q_max is computed. Images must already match the model input side.
SweepResult sweep_images(const ae::AEModel& model, std::span<const ImageTensor> val_images,
                         std::span<const ImageTensor> test_images, const SweepConfig& cfg);

SweepResult sweep(const ae::AEModel& model, const Manifest& val_manifest, const Manifest& test_manifest,
                  const SweepConfig& cfg);

/// Header "slice\patch,<patch sides...>,mean"; one row per slice side and a
/// trailing "mean" row.
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);

}  // namespace autodetect::metrics
