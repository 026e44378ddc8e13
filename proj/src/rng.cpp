#include "autodetect/rng.hpp"

#include <cmath>

namespace autodetect {

std::uint64_t rng_next(RngState& rng) {
    rng.state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = rng.state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double rng_uniform(RngState& rng) {
    return static_cast<double>(rng_next(rng) >> 11) * 0x1.0p-53;
}

double rng_uniform(RngState& rng, double lo, double hi) {
    return lo + (hi - lo) * rng_uniform(rng);
}

std::uint64_t rng_below(RngState& rng, std::uint64_t n) {
    // Multiply-shift on the top 53 bits; the bias is below 2^-53 * n and the
    // mapping is trivially portable.
    auto v = static_cast<std::uint64_t>(std::floor(rng_uniform(rng) * static_cast<double>(n)));
    return v < n ? v : n - 1;
}

RngState rng_split(RngState& parent) {
    return RngState{rng_next(parent)};
}

}  // namespace autodetect
