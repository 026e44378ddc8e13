#include "autodetect/detector.hpp"
#include "autodetect/image_io.hpp"
#include "detect_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace autodetect;
using namespace autodetect::detect;
using autodetect::testing::TempDir;

namespace {

ErrorMap random_map(RngState& rng, int h, int w, double scale = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(h) * w);
    for (auto& x : v) x = scale * rng_uniform(rng);
    return ErrorMap(h, w, std::move(v));
}

SliceConfig slice(int side, Aggregator agg = Aggregator::mean()) { return {side, agg}; }

}  // namespace

TEST_CASE("constant map gives constant slices") {
    const ErrorMap m(10, 12, std::vector<double>(120, 0.2));
    const auto s = slice_errors(m, slice(4));
    CHECK(s.rows == 7);
    CHECK(s.cols == 9);
    for (double v : s.values) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("single bright block") {
    std::vector<double> v(100, 0.0);
    for (int y = 3; y < 6; ++y)
        for (int x = 3; x < 6; ++x) v[y * 10 + x] = 9.0;
    const auto s = slice_errors(ErrorMap(10, 10, v), slice(6));
    // A 6x6 window fully covering the 3x3 block: 81 / 36.
    CHECK(s.max() == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(slice_errors(ErrorMap(10, 10, v), slice(6, Aggregator::max())).max() == 9.0);
}

TEST_CASE("slice pooling matches the naive oracle") {
    RngState rng{17};
    const Aggregator aggs[] = {Aggregator::mean(), Aggregator::max(), Aggregator::percentile(0.875),
                               Aggregator::percentile(0.5)};
    for (int trial = 0; trial < 40; ++trial) {
        const int h = 4 + static_cast<int>(rng_below(rng, 30));
        const int w = 4 + static_cast<int>(rng_below(rng, 30));
        const int s = 2 + static_cast<int>(rng_below(rng, std::min(h, w) - 1));
        const auto m = random_map(rng, h, w);
        for (const auto& a : aggs) {
            const auto got = slice_errors(m, slice(s, a));
            const auto want = autodetect::testing::naive_slices(m, s, a);
            REQUIRE(got.values.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i) REQUIRE(std::abs(got.values[i] - want[i]) <= 1e-9);
        }
    }
}

TEST_CASE("slice configuration validation") {
    const ErrorMap m(8, 8, std::vector<double>(64, 0.1));
    CHECK_THROWS_AS(slice_errors(m, slice(9)), Error);
    CHECK_THROWS_AS(slice_errors(m, slice(1)), Error);
    CHECK_THROWS_AS(slice_errors(m, slice(3, Aggregator::percentile(1.0))), Error);
    CHECK(parse_aggregator("percentile:0.875") == Aggregator::percentile(0.875));
    CHECK(to_string(Aggregator::max()) == "max");
    CHECK_THROWS_AS(parse_aggregator("median"), Error);
}

TEST_CASE("gaussian fit") {
    SliceErrorMap m{1, 3, {1.0, 2.0, 3.0}};
    const auto ref = fit_gaussian(std::span(&m, 1), slice(2));
    CHECK(ref.mu == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(ref.sigma == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(ref.n == 3);

    SliceErrorMap flat{1, 3, {0.5, 0.5, 0.5}};
    CHECK_THROWS_AS(fit_gaussian(std::span(&flat, 1), slice(2)), Error);
    CHECK_THROWS_AS(fit_gaussian({}, slice(2)), Error);
}

TEST_CASE("gaussian fit matches a two-pass computation across maps") {
    RngState rng{23};
    std::vector<SliceErrorMap> maps;
    std::vector<double> all;
    for (int i = 0; i < 7; ++i) {
        const auto s = slice_errors(random_map(rng, 20, 20, 1.0 + i), slice(5));
        all.insert(all.end(), s.values.begin(), s.values.end());
        maps.push_back(s);
    }
    double mean = 0.0;
    for (double v : all) mean += v;
    mean /= static_cast<double>(all.size());
    double var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    var /= static_cast<double>(all.size());
    const auto ref = fit_gaussian(maps, slice(5));
    CHECK(ref.n == all.size());
    CHECK(ref.mu == doctest::Approx(mean).epsilon(1e-12));
    CHECK(ref.sigma == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("normal cdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(std::abs(normal_cdf(3.0) - 0.99865) < 1e-4);
    CHECK(std::abs(normal_cdf(-2.0) - 0.02275) < 1e-4);
    for (double z = -6.0; z <= 6.0; z += 0.01) {
        REQUIRE(std::abs(normal_cdf(z) - static_cast<double>(autodetect::testing::series_cdf(z))) < 1e-7);
    }
}

TEST_CASE("scoring and classification") {
    RngState rng{5};
    const auto m = random_map(rng, 16, 16);
    const auto q = slice_errors(m, slice(4)).max();
    GaussianRef ref{q, 0.01, 10, 4, Aggregator::mean()};
    CHECK(score_error_map(m, ref, slice(4)).cdf == 0.5);
    ref.mu = q - 0.03;
    CHECK(std::abs(score_error_map(m, ref, slice(4)).cdf - 0.99865) < 1e-4);
    CHECK_THROWS_AS(score_error_map(m, ref, slice(5)), Error);
    CHECK_THROWS_AS(score_error_map(m, ref, slice(4, Aggregator::max())), Error);

    CHECK(classify(0.95, 0.95));
    CHECK_FALSE(classify(0.9499, 0.95));
    CHECK_THROWS_AS(classify(0.7, 0.4), Error);
    CHECK_THROWS_AS(classify(0.7, 1.01), Error);
}

TEST_CASE("scaling every error by a constant leaves verdicts unchanged") {
    RngState rng{31};
    std::vector<ErrorMap> val, scaled_val;
    for (int i = 0; i < 5; ++i) {
        val.push_back(random_map(rng, 20, 20));
        std::vector<double> v(val.back().data().begin(), val.back().data().end());
        for (auto& x : v) x *= 4.0;
        scaled_val.emplace_back(20, 20, v);
    }
    const auto cfg = slice(6);
    const auto ref = fit_reference_maps(val, cfg);
    const auto ref4 = fit_reference_maps(scaled_val, cfg);
    CHECK(ref4.mu == doctest::Approx(4 * ref.mu).epsilon(1e-12));
    CHECK(ref4.sigma == doctest::Approx(4 * ref.sigma).epsilon(1e-12));
    for (int i = 0; i < 20; ++i) {
        const auto q = random_map(rng, 20, 20);
        std::vector<double> v(q.data().begin(), q.data().end());
        for (auto& x : v) x *= 4.0;
        const auto a = score_error_map(q, ref, cfg);
        const auto b = score_error_map(ErrorMap(20, 20, v), ref4, cfg);
        CHECK(std::abs(a.cdf - b.cdf) < 1e-9);
        CHECK(classify(a.cdf, 0.95) == classify(b.cdf, 0.95));
    }
}

TEST_CASE("threshold monotonicity and reclassification") {
    RngState rng{2};
    std::vector<DetectionReport> reports;
    for (int i = 0; i < 500; ++i) {
        const double cdf = rng_uniform(rng);
        reports.push_back({std::to_string(i), cdf, cdf, classify(cdf, 0.5), 0.5, {}});
    }
    for (double t = 0.5; t < 1.0; t += 0.01) {
        const auto lo = reclassify(reports, t);
        const auto hi = reclassify(reports, std::min(1.0, t + 0.013));
        for (std::size_t i = 0; i < reports.size(); ++i) {
            if (hi[i].verdict) REQUIRE(lo[i].verdict);
            REQUIRE(lo[i].threshold == t);
        }
    }
}

TEST_CASE("scan, reports and histogram") {
    TempDir dir("det");
    const ae::ArchDescriptor arch{16, 3, {2, 2, 2}};
    const auto model = ae::init_model(arch, 1);
    RngState rng{3};
    Manifest m;
    m.base_dir = dir.path();
    for (int i = 0; i < 4; ++i) {
        const auto name = "i" + std::to_string(i) + ".png";
        save_image(autodetect::testing::random_grid_image(rng, 20, 20, 3), dir / name, ImageFormat::png);
        m.records.push_back({name, {}, false});
    }
    const auto cfg = slice(5);
    const auto ref = fit_reference(model, m, cfg);
    CHECK(ref.n == 4u * 12 * 12);

    Manifest empty;
    CHECK(scan(model, ref, empty, cfg, 0.95).empty());
    CHECK_THROWS_AS(fit_reference(model, empty, cfg), Error);

    auto reports = scan(model, ref, m, cfg, 0.95);
    REQUIRE(reports.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(reports[i].image == m.records[i].image);
        CHECK(reports[i].verdict == classify(reports[i].cdf, 0.95));
        CHECK_FALSE(reports[i].truth.has_value());
    }

    write_reference(ref, dir / "ref.json");
    const auto ref2 = read_reference(dir / "ref.json");
    CHECK(ref2.mu == ref.mu);
    CHECK(ref2.sigma == ref.sigma);
    CHECK(ref2.n == ref.n);
    CHECK(ref2.slice == 5);

    reports[1].truth = true;
    write_reports(reports, dir / "r.jsonl");
    const auto back = read_reports(dir / "r.jsonl");
    REQUIRE(back.size() == 4);
    CHECK(back[0].q_max == reports[0].q_max);
    CHECK(back[1].truth == std::optional<bool>(true));
    CHECK_FALSE(back[2].truth.has_value());

    const auto bins = histogram(ref, reports, 10);
    REQUIRE(bins.size() == 10);
    std::size_t clean = 0, poisoned = 0;
    double expected = 0.0;
    for (const auto& b : bins) {
        clean += b.clean;
        poisoned += b.poisoned;
        expected += b.val_reference;
        CHECK(b.left < b.right);
    }
    CHECK(clean == 3);
    CHECK(poisoned == 1);
    CHECK(expected <= static_cast<double>(ref.n));
    write_histogram(bins, dir / "h.csv");
    CHECK(std::filesystem::file_size(dir / "h.csv") > 0);
}
