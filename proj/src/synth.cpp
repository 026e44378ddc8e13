#include "autodetect/synth.hpp"

#include "autodetect/image_io.hpp"
#include "autodetect/parallel.hpp"
#include "autodetect/rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

namespace autodetect::synth {

std::string_view to_string(Style s) { return s == Style::smooth ? "smooth" : "shapes"; }

std::string_view to_string(PatchKind k) {
    switch (k) {
        case PatchKind::checkerboard: return "checkerboard";
        case PatchKind::solid: return "solid";
        case PatchKind::noise: return "noise";
        case PatchKind::file: return "file";
    }
    return "?";
}

Style parse_style(std::string_view s) {
    if (s == "smooth") return Style::smooth;
    if (s == "shapes") return Style::shapes;
    throw Error("unknown corpus style '" + std::string(s) + "'");
}

PatchKind parse_patch_kind(std::string_view s) {
    for (auto k : {PatchKind::checkerboard, PatchKind::solid, PatchKind::noise, PatchKind::file}) {
        if (s == to_string(k)) return k;
    }
    throw Error("unknown patch kind '" + std::string(s) + "'");
}

namespace {

constexpr int kWaves = 4;
constexpr double kMaxCycles = 3.0;

struct Wave {
    double amp, fx, fy, phase;
};

void paint_smooth(std::vector<float>& data, int size, RngState& rng) {
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> plane(static_cast<std::size_t>(size) * size);
    for (int c = 0; c < 3; ++c) {
        std::array<Wave, kWaves> waves{};
        double amp_sum = 0.0;
        for (auto& w : waves) {
            w.amp = rng_uniform(rng, 0.5, 1.0);
            w.fx = rng_uniform(rng, -kMaxCycles, kMaxCycles);
            w.fy = rng_uniform(rng, -kMaxCycles, kMaxCycles);
            w.phase = rng_uniform(rng, 0.0, two_pi);
            amp_sum += w.amp;
        }
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                double v = 0.0;
                for (const auto& w : waves) {
                    v += w.amp * std::sin(two_pi * (w.fx * x + w.fy * y) / size + w.phase);
                }
                data[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
                    static_cast<float>(0.5 + v / (2.0 * amp_sum));
            }
        }
    }
}

void paint_shapes(std::vector<float>& data, int size, RngState& rng) {
    const int count = 1 + static_cast<int>(rng_below(rng, 5));
    for (int s = 0; s < count; ++s) {
        const bool disc = rng_below(rng, 2) == 1;
        const std::array<float, 3> color{static_cast<float>(rng_uniform(rng)), static_cast<float>(rng_uniform(rng)),
                                         static_cast<float>(rng_uniform(rng))};
        const double cx = rng_uniform(rng, 0.0, size);
        const double cy = rng_uniform(rng, 0.0, size);
        const double a = rng_uniform(rng, size / 16.0, size / 6.0);
        const double b = disc ? a : rng_uniform(rng, size / 16.0, size / 6.0);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double dx = x + 0.5 - cx;
                const double dy = y + 0.5 - cy;
                const bool inside = disc ? dx * dx + dy * dy <= a * a : std::abs(dx) <= a && std::abs(dy) <= b;
                if (!inside) continue;
                for (int c = 0; c < 3; ++c) data[(static_cast<std::size_t>(y) * size + x) * 3 + c] = color[c];
            }
        }
    }
}

}  // namespace

ImageTensor gen_clean_image(std::uint64_t seed, int size, Style style) {
    if (size < 16) throw Error("synthetic image size must be at least 16");
    RngState rng{seed};
    std::vector<float> data(static_cast<std::size_t>(size) * size * 3);
    paint_smooth(data, size, rng);
    if (style == Style::shapes) paint_shapes(data, size, rng);
    return ImageTensor(size, size, 3, std::move(data));
}

Patch gen_patch(const PatchSpec& spec) {
    if (spec.kind == PatchKind::file) {
        ImageTensor img = load_image(spec.file);
        if (img.height() != img.width()) throw Error("patch file " + spec.file.string() + " is not square");
        if (spec.side >= 2 && spec.side != img.height()) img = resize_bilinear(img, spec.side, spec.side);
        if (img.height() < 2) throw Error("patch side must be at least 2");
        if (img.channels() == 1) {
            std::vector<float> rgb;
            rgb.reserve(img.size() * 3);
            for (float v : img.data()) rgb.insert(rgb.end(), {v, v, v});
            img = ImageTensor(img.height(), img.width(), 3, std::move(rgb));
        }
        return {std::move(img), PatchKind::file};
    }

    const int side = spec.side;
    if (side < 2) throw Error("patch side must be at least 2");
    ImageTensor img(side, side, 3);
    switch (spec.kind) {
        case PatchKind::checkerboard: {
            if (spec.cell < 1 || side % spec.cell != 0) {
                throw Error("checkerboard cell " + std::to_string(spec.cell) + " does not divide side " +
                            std::to_string(side));
            }
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    const float v = ((y / spec.cell + x / spec.cell) % 2 == 0) ? 1.0f : 0.0f;
                    for (int c = 0; c < 3; ++c) img.set(y, x, c, v);
                }
            }
            break;
        }
        case PatchKind::solid:
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x)
                    for (int c = 0; c < 3; ++c) img.set(y, x, c, spec.color[c]);
            break;
        case PatchKind::noise: {
            RngState rng{spec.seed};
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x)
                    for (int c = 0; c < 3; ++c) img.set(y, x, c, static_cast<float>(rng_uniform(rng)));
            break;
        }
        case PatchKind::file: break;
    }
    return {std::move(img), spec.kind};
}

Manifest gen_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir) {
    if (config.count < 1) throw Error("corpus count must be at least 1");
    if (config.size < 16) throw Error("corpus image size must be at least 16");

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

    RngState master{config.seed};
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(config.count));
    for (auto& s : seeds) s = rng_next(master);

    Manifest manifest;
    manifest.base_dir = out_dir;
    manifest.records.resize(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "images/img_%05zu.png", i);
        manifest.records[i].image = name;
    }

    parallel_for(seeds.size(), [&](std::size_t i) {
        const auto img = gen_clean_image(seeds[i], config.size, config.style);
        save_image(img, manifest.resolve(manifest.records[i]), ImageFormat::png);
    });

    write_manifest(manifest, out_dir / "manifest.jsonl");
    return manifest;
}

}  // namespace autodetect::synth
