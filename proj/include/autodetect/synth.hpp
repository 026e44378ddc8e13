#pragma once

#include "autodetect/image.hpp"
#include "autodetect/manifest.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

namespace autodetect::synth {

enum class Style { smooth, shapes };
enum class PatchKind { checkerboard, solid, noise, file };

std::string_view to_string(Style s);
std::string_view to_string(PatchKind k);
Style parse_style(std::string_view s);
PatchKind parse_patch_kind(std::string_view s);

/// Square adversarial patch.
struct Patch {
    ImageTensor image;
    PatchKind kind = PatchKind::solid;

    int side() const { return image.height(); }
};

struct PatchSpec {
    PatchKind kind = PatchKind::checkerboard;
    int side = 25;
    std::uint64_t seed = 0;
    int cell = 1;
    std::array<float, 3> color{1.0f, 1.0f, 1.0f};
    std::filesystem::path file;  // kind == file only
};

struct CorpusConfig {
    int count = 500;
    int size = 64;
    std::uint64_t seed = 0;
    Style style = Style::smooth;
};

/// Deterministic synthetic RGB image of size x size.
///
/// smooth: each channel is the sum of four random plane waves with at most
/// three cycles per image along either axis, mapped linearly into [0, 1] by
/// the sum of their amplitudes. Horizontally adjacent pixels therefore differ
/// by at most 3*pi/size.
/// shapes: a smooth background with one to five filled axis-aligned
/// rectangles or discs in random colors.
ImageTensor gen_clean_image(std::uint64_t seed, int size, Style style);

/// Builds a checkerboard (white cell at the top-left), solid, or uniform
/// noise patch. The file kind loads spec.file, resizes it to spec.side when
/// needed and promotes grayscale to RGB.
Patch gen_patch(const PatchSpec& spec);

/// Writes `count` PNG images to out_dir/images and a JSONL manifest to
/// out_dir/manifest.jsonl, returning the manifest. Output bytes are a pure
/// function of the config.
Manifest gen_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir);

}  // namespace autodetect::synth
