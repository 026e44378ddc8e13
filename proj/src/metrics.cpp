#include "autodetect/metrics.hpp"

#include "autodetect/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace autodetect::metrics {

using detect::DetectionReport;

std::size_t LabeledScores::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

std::size_t LabeledScores::negatives() const { return labels.size() - positives(); }

namespace {

void check_two_class(const LabeledScores& s) {
    if (s.scores.size() != s.labels.size()) throw Error("scores and labels differ in length");
    if (s.positives() == 0 || s.negatives() == 0) {
        throw Error("AUROC needs at least one poisoned and one clean sample");
    }
    for (double v : s.scores) {
        if (std::isnan(v)) throw Error("scores contain NaN");
    }
}

std::vector<std::size_t> order_by_score(const LabeledScores& s, bool descending) {
    std::vector<std::size_t> idx(s.scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return descending ? s.scores[a] > s.scores[b] : s.scores[a] < s.scores[b];
    });
    return idx;
}

}  // namespace

double auroc(const LabeledScores& s) {
    check_two_class(s);
    const auto idx = order_by_score(s, false);
    const std::size_t n = idx.size();
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && s.scores[idx[j + 1]] == s.scores[idx[i]]) ++j;
        // Ranks i+1 .. j+1 share their average.
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (s.labels[idx[k]]) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    const double n_pos = static_cast<double>(s.positives());
    const double n_neg = static_cast<double>(s.negatives());
    const double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    return u / (n_pos * n_neg);
}

std::vector<RocPoint> roc_curve(const LabeledScores& s) {
    check_two_class(s);
    const auto idx = order_by_score(s, true);
    const double n_pos = static_cast<double>(s.positives());
    const double n_neg = static_cast<double>(s.negatives());
    std::vector<RocPoint> curve{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < idx.size();) {
        const double score = s.scores[idx[i]];
        while (i < idx.size() && s.scores[idx[i]] == score) {
            if (s.labels[idx[i]]) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        curve.push_back({static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos, score});
    }
    return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    }
    return area;
}

void write_roc(std::span<const RocPoint> curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "fpr,tpr,threshold\n" << std::setprecision(17);
    for (const auto& p : curve) out << p.fpr << "," << p.tpr << "," << p.threshold << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

AccuracyResult accuracy_at(std::span<const DetectionReport> reports) {
    if (reports.empty()) throw Error("accuracy needs at least one report row");
    AccuracyResult r;
    for (const auto& row : reports) {
        if (!row.truth) throw Error("report row " + row.image + " has no ground truth");
        const bool truth = *row.truth;
        if (row.verdict && truth) ++r.confusion.tp;
        if (!row.verdict && !truth) ++r.confusion.tn;
        if (row.verdict && !truth) ++r.confusion.fp;
        if (!row.verdict && truth) ++r.confusion.fn;
    }
    r.accuracy = static_cast<double>(r.confusion.tp + r.confusion.tn) / static_cast<double>(reports.size());
    return r;
}

void attach_truth(std::vector<DetectionReport>& reports, std::span<const poison::PoisonRecord> truth) {
    std::unordered_map<std::string, bool> by_image;
    for (const auto& t : truth) by_image[t.image] = t.poisoned;
    for (auto& r : reports) {
        const auto it = by_image.find(r.image);
        if (it == by_image.end()) throw Error("no ground truth for report image " + r.image);
        r.truth = it->second;
    }
}

LabeledScores scores_from_reports(std::span<const DetectionReport> reports) {
    LabeledScores s;
    for (const auto& r : reports) {
        if (!r.truth) throw Error("report row " + r.image + " has no ground truth");
        s.add(r.q_max, *r.truth);
    }
    return s;
}

// ------------------------------------------------------------------ sweep

namespace {

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> SweepResult::row_means() const {
    std::vector<double> out;
    for (const auto& row : auroc) out.push_back(mean_of(row));
    return out;
}

std::vector<double> SweepResult::col_means() const {
    std::vector<double> out(patch_sides.size(), 0.0);
    for (std::size_t c = 0; c < patch_sides.size(); ++c) {
        std::vector<double> col;
        for (const auto& row : auroc) col.push_back(row[c]);
        out[c] = mean_of(col);
    }
    return out;
}

double SweepResult::grand_mean() const {
    std::vector<double> all;
    for (const auto& row : auroc) all.insert(all.end(), row.begin(), row.end());
    return mean_of(all);
}

double SweepResult::diagonal_mean() const {
    std::vector<double> cells;
    for (std::size_t r = 0; r < slice_sides.size(); ++r)
        for (std::size_t c = 0; c < patch_sides.size(); ++c)
            if (slice_sides[r] == patch_sides[c]) cells.push_back(auroc[r][c]);
    return mean_of(cells);
}

double SweepResult::off_diagonal_mean() const {
    std::vector<double> cells;
    for (std::size_t r = 0; r < slice_sides.size(); ++r)
        for (std::size_t c = 0; c < patch_sides.size(); ++c)
            if (slice_sides[r] != patch_sides[c]) cells.push_back(auroc[r][c]);
    return mean_of(cells);
}

SweepResult sweep_images(const ae::AEModel& model, std::span<const ImageTensor> val_images,
                         std::span<const ImageTensor> test_images, const SweepConfig& cfg) {
    if (val_images.empty() || test_images.empty()) throw Error("sweep needs validation and test images");
    if (cfg.patch_sides.empty() || cfg.slice_sides.empty() || cfg.seeds.empty()) {
        throw Error("sweep needs at least one patch side, slice side and seed");
    }

    auto maps_of = [&](std::span<const ImageTensor> images) {
        std::vector<ErrorMap> maps(images.size());
        parallel_for(images.size(), [&](std::size_t i) { maps[i] = ae::error_map(model, images[i]); });
        return maps;
    };
    const auto val_maps = maps_of(val_images);
    const auto clean_maps = maps_of(test_images);

    std::vector<detect::GaussianRef> refs;
    for (int slice : cfg.slice_sides) {
        refs.push_back(detect::fit_reference_maps(val_maps, {slice, cfg.aggregator}));
    }

    std::vector<poison::ImageDims> dims;
    for (const auto& img : test_images) dims.push_back({img.height(), img.width()});

    SweepResult result;
    result.kind = cfg.patch.kind;
    result.slice_sides = cfg.slice_sides;
    result.patch_sides = cfg.patch_sides;
    result.auroc.assign(cfg.slice_sides.size(), std::vector<double>(cfg.patch_sides.size(), 0.0));

    for (std::size_t c = 0; c < cfg.patch_sides.size(); ++c) {
        for (const auto seed : cfg.seeds) {
            synth::PatchSpec spec = cfg.patch;
            spec.side = cfg.patch_sides[c];
            spec.seed = seed;
            poison::PoisonConfig pc;
            pc.rate = 1.0;
            pc.alpha = cfg.alpha;
            pc.placement = cfg.placement;
            pc.patch = synth::gen_patch(spec);
            pc.seed = seed;
            pc.mode = poison::Mode::replace;
            const auto plan = poison::plan_poisoning(dims, pc);
            const auto poisoned = poison::apply_plan(test_images, plan, pc);
            const auto poisoned_maps = maps_of(poisoned);

            for (std::size_t r = 0; r < cfg.slice_sides.size(); ++r) {
                const detect::SliceConfig sc{cfg.slice_sides[r], cfg.aggregator};
                LabeledScores scores;
                for (const auto& m : clean_maps) scores.add(detect::score_error_map(m, refs[r], sc).q_max, false);
                for (const auto& m : poisoned_maps) scores.add(detect::score_error_map(m, refs[r], sc).q_max, true);
                result.auroc[r][c] += auroc(scores) / static_cast<double>(cfg.seeds.size());
            }
        }
    }
    return result;
}

SweepResult sweep(const ae::AEModel& model, const Manifest& val_manifest, const Manifest& test_manifest,
                  const SweepConfig& cfg) {
    auto load_all = [&](const Manifest& m) {
        std::vector<ImageTensor> images(m.size());
        parallel_for(m.size(), [&](std::size_t i) { images[i] = ae::load_model_input(m.resolve(m.records[i]), model.arch); });
        return images;
    };
    return sweep_images(model, load_all(val_manifest), load_all(test_manifest), cfg);
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(6) << std::fixed;
    out << "slice\\patch";
    for (int p : result.patch_sides) out << "," << p;
    out << ",mean\n";
    const auto row_means = result.row_means();
    for (std::size_t r = 0; r < result.slice_sides.size(); ++r) {
        out << result.slice_sides[r];
        for (double v : result.auroc[r]) out << "," << v;
        out << "," << row_means[r] << "\n";
    }
    out << "mean";
    for (double v : result.col_means()) out << "," << v;
    out << "," << result.grand_mean() << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace autodetect::metrics
