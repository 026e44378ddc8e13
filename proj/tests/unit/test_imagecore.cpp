#include "autodetect/image.hpp"
#include "autodetect/image_io.hpp"
#include "autodetect/rng.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace autodetect;
using autodetect::testing::TempDir;

namespace {

// Straight transcription of Vigna's splitmix64.c reference.
std::uint64_t reference_splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
    z = (z ^ (z >> 27)) * 0x94d049bb133111eb;
    return z ^ (z >> 31);
}

ImageTensor image_from(int h, int w, int c, std::vector<float> v) { return ImageTensor(h, w, c, std::move(v)); }

}  // namespace

TEST_CASE("splitmix64 matches the reference algorithm") {
    RngState rng{0};
    CHECK(rng_next(rng) == 0xE220A8397B1DCDAFULL);

    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL}) {
        RngState a{seed};
        std::uint64_t ref = seed;
        for (int i = 0; i < 10000; ++i) REQUIRE(rng_next(a) == reference_splitmix64(ref));
    }
}

TEST_CASE("rng streams are deterministic and seed-dependent") {
    RngState a{7}, b{7};
    for (int i = 0; i < 10000; ++i) REQUIRE(rng_next(a) == rng_next(b));

    RngState s0{0}, s1{1};
    CHECK(rng_next(s0) != rng_next(s1));
}

TEST_CASE("uniform doubles come from the top 53 bits") {
    RngState a{3}, b{3};
    for (int i = 0; i < 1000; ++i) {
        const double u = rng_uniform(a);
        const std::uint64_t raw = rng_next(b);
        REQUIRE(u == static_cast<double>(raw >> 11) / 9007199254740992.0);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    RngState c{5};
    for (int i = 0; i < 1000; ++i) REQUIRE(rng_below(c, 7) < 7);
}

TEST_CASE("image tensor clamps into the unit range") {
    const auto img = image_from(1, 2, 1, {-0.5f, 1.5f});
    CHECK(img.at(0, 0, 0) == 0.0f);
    CHECK(img.at(0, 1, 0) == 1.0f);
    CHECK_THROWS_AS(ImageTensor(0, 1, 3), Error);
    CHECK_THROWS_AS(ImageTensor(1, 1, 2), Error);
    CHECK_THROWS_AS(image_from(1, 1, 3, {0.0f}), Error);
}

TEST_CASE("P6 decode of a single red pixel") {
    TempDir dir("img");
    const std::string header = "P6\n1 1\n255\n";
    std::ofstream(dir / "red.ppm", std::ios::binary) << header << '\xFF' << '\x00' << '\x00';
    const auto img = load_image(dir / "red.ppm");
    REQUIRE(img.height() == 1);
    REQUIRE(img.width() == 1);
    REQUIRE(img.channels() == 3);
    CHECK(img.at(0, 0, 0) == 1.0f);
    CHECK(img.at(0, 0, 1) == 0.0f);
    CHECK(img.at(0, 0, 2) == 0.0f);
}

TEST_CASE("P6 encode is bit exact") {
    const auto bytes = encode_image(image_from(1, 1, 3, {1.0f, 0.0f, 0.0f}), ImageFormat::ppm);
    const std::vector<std::uint8_t> expected{'P', '6', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', 0xFF, 0x00, 0x00};
    CHECK(bytes == expected);

    // Half rounds up.
    const auto half = encode_image(image_from(1, 1, 1, {0.5f}), ImageFormat::ppm);
    CHECK(half.back() == 128);
}

TEST_CASE("saving twice gives identical bytes") {
    TempDir dir("img");
    RngState rng{11};
    const auto img = autodetect::testing::random_image(rng, 9, 7, 3);
    for (auto fmt : {ImageFormat::png, ImageFormat::ppm}) {
        save_image(img, dir / "a.bin", fmt);
        save_image(img, dir / "b.bin", fmt);
        CHECK(read_file_bytes(dir / "a.bin") == read_file_bytes(dir / "b.bin"));
    }
}

TEST_CASE("save then load stays within 8-bit quantization") {
    TempDir dir("img");
    RngState rng{12};
    for (int channels : {1, 3}) {
        const auto img = autodetect::testing::random_image(rng, 13, 17, channels);
        for (auto [fmt, name] : {std::pair{ImageFormat::png, "x.png"}, std::pair{ImageFormat::ppm, "x.ppm"}}) {
            save_image(img, dir / name, fmt);
            const auto back = load_image(dir / name);
            REQUIRE(back.height() == img.height());
            REQUIRE(back.width() == img.width());
            REQUIRE(back.channels() == channels);
            for (std::size_t i = 0; i < img.size(); ++i) {
                REQUIRE(std::abs(back.data()[i] - img.data()[i]) <= 0.5 / 255.0 + 1e-7);
            }
        }
    }
}

TEST_CASE("PPM round trip is lossless on the 8-bit grid") {
    TempDir dir("img");
    RngState rng{13};
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = autodetect::testing::random_grid_image(rng, 1 + trial, 2 + trial, 3);
        save_image(img, dir / "g.ppm", ImageFormat::ppm);
        REQUIRE(load_image(dir / "g.ppm") == img);
        save_image(img, dir / "g.png", ImageFormat::png);
        REQUIRE(load_image(dir / "g.png") == img);
    }
}

TEST_CASE("image decode errors are distinct") {
    TempDir dir("img");
    auto kind_of = [](const std::filesystem::path& p) {
        try {
            load_image(p);
        } catch (const ImageIoError& e) {
            return e.kind();
        }
        FAIL("expected an ImageIoError");
        return ImageIoError::Kind::io;
    };

    CHECK(kind_of(dir / "missing.ppm") == ImageIoError::Kind::io);

    std::ofstream(dir / "junk.bin", std::ios::binary) << "GIF89a....";
    CHECK(kind_of(dir / "junk.bin") == ImageIoError::Kind::unsupported_format);

    std::ofstream(dir / "head.ppm", std::ios::binary) << "P6\n4 ";
    CHECK(kind_of(dir / "head.ppm") == ImageIoError::Kind::corrupt);

    std::ofstream(dir / "short.ppm", std::ios::binary) << "P6\n2 2\n255\n" << std::string(5, 'x');
    CHECK(kind_of(dir / "short.ppm") == ImageIoError::Kind::corrupt);

    RngState rng{1};
    auto png = encode_image(autodetect::testing::random_image(rng, 16, 16, 3), ImageFormat::png);
    png.resize(png.size() / 2);
    write_file_bytes(dir / "cut.png", png);
    CHECK(kind_of(dir / "cut.png") == ImageIoError::Kind::corrupt);
}

TEST_CASE("resize at equal size is an exact copy") {
    RngState rng{21};
    const auto img = autodetect::testing::random_image(rng, 10, 12, 3);
    CHECK(resize_bilinear(img, 10, 12) == img);
}

TEST_CASE("resize keeps constants constant") {
    const ImageTensor img(7, 5, 3, 0.3f);
    for (auto [h, w] : {std::pair{1, 1}, std::pair{3, 9}, std::pair{14, 10}, std::pair{64, 64}}) {
        const auto out = resize_bilinear(img, h, w);
        for (float v : out.data()) REQUIRE(v == doctest::Approx(0.3f).epsilon(1e-6));
    }
}

TEST_CASE("2x2 to 4x4 upscale matches hand-evaluated half-pixel weights") {
    // Source coordinate (d + 0.5) * 2/4 - 0.5 for d = 0..3 is -0.25, 0.25,
    // 0.75, 1.25; clamped to [0, 1] the weight on the second pixel is
    // 0, 0.25, 0.75, 1.
    const double frac[4] = {0.0, 0.25, 0.75, 1.0};
    const double src[2][2] = {{0.0, 1.0}, {0.5, 0.25}};
    const auto img = image_from(2, 2, 1, {0.0f, 1.0f, 0.5f, 0.25f});
    const auto out = resize_bilinear(img, 4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            const double top = (1 - frac[x]) * src[0][0] + frac[x] * src[0][1];
            const double bot = (1 - frac[x]) * src[1][0] + frac[x] * src[1][1];
            const double expected = (1 - frac[y]) * top + frac[y] * bot;
            CHECK(out.at(y, x, 0) == doctest::Approx(expected).epsilon(1e-7));
        }
    }
    CHECK_THROWS_AS(resize_bilinear(img, 0, 3), Error);
}

TEST_CASE("quantize8 snaps onto the byte grid") {
    const auto q = quantize8(image_from(1, 3, 1, {0.5f, 0.001f, 0.999f}));
    CHECK(q.at(0, 0, 0) == static_cast<float>(128 / 255.0));
    CHECK(q.at(0, 1, 0) == 0.0f);
    CHECK(q.at(0, 2, 0) == 1.0f);
}
