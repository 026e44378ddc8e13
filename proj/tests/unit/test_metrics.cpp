#include "autodetect/metrics.hpp"
#include "metrics_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace autodetect;
using namespace autodetect::metrics;
using autodetect::testing::TempDir;

namespace {

LabeledScores make(std::vector<double> scores, std::vector<bool> labels) { return {std::move(scores), std::move(labels)}; }

LabeledScores flipped(const LabeledScores& s) {
    LabeledScores f = s;
    for (std::size_t i = 0; i < f.labels.size(); ++i) f.labels[i] = !s.labels[i];
    return f;
}

}  // namespace

TEST_CASE("auroc examples") {
    CHECK(auroc(make({0.9, 0.8, 0.2, 0.1}, {true, true, false, false})) == 1.0);
    CHECK(auroc(make({0.5, 0.5, 0.5, 0.5}, {true, false, true, false})) == 0.5);
    // Positives {0.9, 0.4}, negatives {0.6, 0.1}: 3 of 4 pairs ordered.
    CHECK(auroc(make({0.9, 0.4, 0.6, 0.1}, {true, true, false, false})) == 0.75);
    CHECK_THROWS_AS(auroc(make({0.1, 0.2}, {true, true})), Error);
    CHECK_THROWS_AS(auroc(make({NAN, 0.2}, {true, false})), Error);
}

TEST_CASE("auroc matches the all-pairs count, flips exactly and ignores monotone transforms") {
    RngState rng{99};
    for (int k = 0; k < 1000; ++k) {
        const auto s = autodetect::testing::random_instance(rng);
        const double a = auroc(s);
        REQUIRE(std::abs(a - autodetect::testing::brute_auroc(s)) <= 1e-12);
        REQUIRE(a + auroc(flipped(s)) == 1.0);

        auto t = s;
        for (auto& v : t.scores) v = std::exp(3 * v) + 1;
        REQUIRE(auroc(t) == a);
    }
}

TEST_CASE("roc curve") {
    const auto s = make({0.9, 0.8, 0.2, 0.1}, {true, true, false, false});
    const auto roc = roc_curve(s);
    REQUIRE(roc.size() == 5);
    CHECK(roc.front().fpr == 0.0);
    CHECK(roc.front().tpr == 0.0);
    CHECK(std::isinf(roc.front().threshold));
    CHECK(roc[2].fpr == 0.0);
    CHECK(roc[2].tpr == 1.0);
    CHECK(roc.back().fpr == 1.0);
    CHECK(roc.back().tpr == 1.0);

    RngState rng{7};
    for (int k = 0; k < 200; ++k) {
        const auto inst = autodetect::testing::random_instance(rng);
        REQUIRE(std::abs(trapezoid_area(roc_curve(inst)) - auroc(inst)) <= 1e-12);
    }

    TempDir dir("roc");
    write_roc(roc, dir / "roc.csv");
    std::ifstream in(dir / "roc.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "fpr,tpr,threshold");
}

TEST_CASE("accuracy and truth attachment") {
    using detect::DetectionReport;
    std::vector<DetectionReport> r{{"a", 1, .99, true, .95, true}, {"b", 0, .1, false, .95, false}};
    CHECK(accuracy_at(r).accuracy == 1.0);
    r[0].verdict = false;
    CHECK(accuracy_at(r).accuracy == 0.5);
    CHECK(accuracy_at(r).confusion.fn == 1);
    r[1].verdict = true;
    CHECK(accuracy_at(r).accuracy == 0.0);
    r[1].truth.reset();
    CHECK_THROWS_AS(accuracy_at(r), Error);

    std::vector<poison::PoisonRecord> truth(2);
    truth[0].image = "a";
    truth[0].poisoned = true;
    truth[1].image = "b";
    attach_truth(r, truth);
    CHECK(r[0].truth == std::optional<bool>(true));
    CHECK(r[1].truth == std::optional<bool>(false));
    const auto s = scores_from_reports(r);
    CHECK(s.positives() == 1);
    CHECK(s.negatives() == 1);

    r.push_back({"c", 0, 0, false, .95, {}});
    CHECK_THROWS_AS(attach_truth(r, truth), Error);
}

TEST_CASE("sweep grid layout") {
    const ae::ArchDescriptor arch{16, 3, {2, 2, 2}};
    const auto model = ae::init_model(arch, 0);
    RngState rng{4};
    std::vector<ImageTensor> val, test;
    for (int i = 0; i < 4; ++i) val.push_back(autodetect::testing::random_image(rng, 16, 16, 3));
    for (int i = 0; i < 3; ++i) test.push_back(autodetect::testing::random_image(rng, 16, 16, 3));

    SweepConfig cfg;
    cfg.patch = {synth::PatchKind::checkerboard, 4, 0, 1, {}, {}};
    cfg.patch_sides = {4, 8};
    cfg.slice_sides = {4, 8, 6};
    cfg.seeds = {0, 1};
    const auto r = sweep_images(model, val, test, cfg);
    REQUIRE(r.auroc.size() == 3);
    for (const auto& row : r.auroc) {
        REQUIRE(row.size() == 2);
        for (double a : row) CHECK((a >= 0.0 && a <= 1.0));
    }
    CHECK(r.diagonal_mean() == doctest::Approx((r.auroc[0][0] + r.auroc[1][1]) / 2));
    CHECK(r.off_diagonal_mean() == doctest::Approx((r.auroc[0][1] + r.auroc[1][0] + r.auroc[2][0] + r.auroc[2][1]) / 4));

    TempDir dir("sweep");
    write_sweep_csv(r, dir / "s.csv");
    std::ifstream in(dir / "s.csv");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "slice\\patch,4,8,mean");
    CHECK(lines[4].rfind("mean,", 0) == 0);
}
