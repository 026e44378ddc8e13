#include "autodetect/image_io.hpp"
#include "autodetect/synth.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <fstream>

using namespace autodetect;
using namespace autodetect::synth;
using autodetect::testing::TempDir;

TEST_CASE("clean images are deterministic and in range") {
    for (auto style : {Style::smooth, Style::shapes}) {
        const auto a = gen_clean_image(99, 32, style);
        const auto b = gen_clean_image(99, 32, style);
        CHECK(a == b);
        CHECK_FALSE(a == gen_clean_image(100, 32, style));
        for (float v : a.data()) {
            REQUIRE(v >= 0.0f);
            REQUIRE(v <= 1.0f);
        }
        CHECK(a.channels() == 3);
    }
    CHECK_THROWS_AS(gen_clean_image(1, 15, Style::smooth), Error);
}

TEST_CASE("smooth images have small horizontal gradients") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto img = gen_clean_image(seed, 64, Style::smooth);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x + 1 < 64; ++x)
                for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(double(img.at(y, x + 1, c)) - img.at(y, x, c)));
    }
    CHECK(worst < 0.2);
}

TEST_CASE("checkerboard patch starts white at the top left") {
    const auto p = gen_patch({PatchKind::checkerboard, 4, 0, 2, {}, {}});
    REQUIRE(p.side() == 4);
    auto block = [&](int y0, int x0) {
        float v = p.image.at(y0, x0, 0);
        for (int y = y0; y < y0 + 2; ++y)
            for (int x = x0; x < x0 + 2; ++x)
                for (int c = 0; c < 3; ++c) REQUIRE(p.image.at(y, x, c) == v);
        return v;
    };
    CHECK(block(0, 0) == 1.0f);
    CHECK(block(0, 2) == 0.0f);
    CHECK(block(2, 0) == 0.0f);
    CHECK(block(2, 2) == 1.0f);
}

TEST_CASE("checkerboard has half white pixels when the cell count is even") {
    for (auto [side, cell] : {std::pair{4, 2}, std::pair{26, 13}, std::pair{26, 1}, std::pair{12, 3}, std::pair{32, 4}}) {
        const auto p = gen_patch({PatchKind::checkerboard, side, 0, cell, {}, {}});
        int white = 0;
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) white += p.image.at(y, x, 0) == 1.0f;
        CHECK(white == side * side / 2);
    }
    CHECK_THROWS_AS(gen_patch({PatchKind::checkerboard, 13, 0, 2, {}, {}}), Error);
    CHECK_THROWS_AS(gen_patch({PatchKind::solid, 1, 0, 1, {}, {}}), Error);
}

TEST_CASE("solid and noise patches") {
    const auto solid = gen_patch({PatchKind::solid, 5, 0, 1, {0.5f, 0.5f, 0.5f}, {}});
    for (float v : solid.image.data()) CHECK(v == 0.5f);

    const auto n1 = gen_patch({PatchKind::noise, 8, 1234, 1, {}, {}});
    const auto n2 = gen_patch({PatchKind::noise, 8, 1234, 1, {}, {}});
    CHECK(encode_image(n1.image, ImageFormat::ppm) == encode_image(n2.image, ImageFormat::ppm));
    CHECK_FALSE(n1.image == gen_patch({PatchKind::noise, 8, 1235, 1, {}, {}}).image);
}

TEST_CASE("file patches load, resize and promote grayscale") {
    TempDir dir("patch");
    save_image(ImageTensor(6, 6, 1, 0.25f), dir / "gray.png", ImageFormat::png);
    PatchSpec spec{PatchKind::file, 4, 0, 1, {}, dir / "gray.png"};
    const auto p = gen_patch(spec);
    CHECK(p.kind == PatchKind::file);
    CHECK(p.side() == 4);
    CHECK(p.image.channels() == 3);

    save_image(ImageTensor(6, 5, 3, 0.25f), dir / "rect.png", ImageFormat::png);
    spec.file = dir / "rect.png";
    CHECK_THROWS_AS(gen_patch(spec), Error);
}

TEST_CASE("corpus manifest and byte determinism") {
    TempDir a("corpus"), b("corpus");
    const CorpusConfig cfg{3, 32, 77, Style::shapes};
    const auto m = gen_corpus(cfg, a.path());
    gen_corpus(cfg, b.path());
    CHECK(m.size() == 3);

    std::ifstream in(a / "manifest.jsonl");
    int lines = 0;
    for (std::string line; std::getline(in, line);) {
        ++lines;
        const auto rec = parse_manifest_line(line);
        CHECK_FALSE(rec.poisoned);
        CHECK(rec.objects.empty());
    }
    CHECK(lines == 3);

    CHECK(read_file_bytes(a / "manifest.jsonl") == read_file_bytes(b / "manifest.jsonl"));
    for (const auto& rec : m.records) {
        CHECK(read_file_bytes(a.path() / rec.image) == read_file_bytes(b.path() / rec.image));
    }
    CHECK_THROWS_AS(gen_corpus({0, 32, 1, Style::smooth}, a.path()), Error);
}

TEST_CASE("default-size corpus generates quickly") {
    TempDir dir("corpus");
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = gen_corpus({500, 64, 5, Style::smooth}, dir.path());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(m.size() == 500);
    CHECK(secs < 60.0);
}
