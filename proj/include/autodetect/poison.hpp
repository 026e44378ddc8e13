#pragma once

#include "autodetect/image.hpp"
#include "autodetect/manifest.hpp"
#include "autodetect/rng.hpp"
#include "autodetect/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace autodetect::poison {

struct Position {
    int x = 0;
    int y = 0;

    friend bool operator==(const Position&, const Position&) = default;
};

struct Placement {
    enum class Kind { random, top_left, fixed };
    Kind kind = Kind::random;
    Position fixed;  // used when kind == fixed

    static Placement random() { return {}; }
    static Placement top_left() { return {Kind::top_left, {}}; }
    static Placement at(int x, int y) { return {Kind::fixed, {x, y}}; }
};

/// replace: selected records are overwritten by their poisoned version.
/// append: every clean record is kept and the poisoned copies follow them.
enum class Mode { replace, append };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);
Placement parse_placement(std::string_view s);  // "random", "top_left" or "x,y"

struct PoisonConfig {
    double rate = 0.0;
    double alpha = 0.8;
    int target_class = 0;
    Placement placement;
    synth::Patch patch;
    std::uint64_t seed = 0;
    Mode mode = Mode::replace;
};

struct PoisonRecord {
    std::string image;
    bool poisoned = false;
    std::optional<Position> position;
    std::vector<int> original_classes;
    std::vector<int> rewritten_classes;
};

struct PoisonResult {
    Manifest manifest;
    std::vector<PoisonRecord> records;  // parallel to manifest.records
};

/// Which images get a patch and where.
struct PoisonPlan {
    std::vector<std::size_t> selected;  // ascending manifest indices
    std::vector<Position> positions;    // parallel to selected
};

struct ImageDims {
    int height = 0;
    int width = 0;
};

/// Linear blend (1 - alpha) * region + alpha * patch over the square at pos;
/// every pixel outside the square is copied unchanged.
ImageTensor blend_patch(const ImageTensor& img, const synth::Patch& patch, Position pos, double alpha);

Position sample_position(RngState& rng, ImageDims dims, int patch_side, const Placement& placement);

/// Number of images to poison: round(rate * n), halves rounding up.
std::size_t poison_count(double rate, std::size_t n);

/// Draws round(rate * N) distinct images with a partial Fisher-Yates shuffle
/// and then one position per selected image, in ascending index order, all
/// from a single stream seeded by config.seed.
PoisonPlan plan_poisoning(std::span<const ImageDims> dims, const PoisonConfig& config);

/// Applies `plan` in memory. Each poisoned image is quantized to 8 bits so
/// the result matches what poison_dataset writes to disk. Returned images
/// follow the manifest layout of `config.mode`.
std::vector<ImageTensor> apply_plan(std::span<const ImageTensor> images, const PoisonPlan& plan,
                                    const PoisonConfig& config);

/// Poisons a manifest into out_dir: copies clean images under their original
/// relative paths, writes poisoned images as PNG under out_dir/poisoned, and
/// writes out_dir/manifest.jsonl plus the ground-truth sidecar
/// out_dir/truth.jsonl.
PoisonResult poison_dataset(const Manifest& manifest, const PoisonConfig& config,
                            const std::filesystem::path& out_dir);

void write_truth(std::span<const PoisonRecord> records, const std::filesystem::path& path);
std::vector<PoisonRecord> read_truth(const std::filesystem::path& path);

}  // namespace autodetect::poison
