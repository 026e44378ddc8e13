#pragma once

#include <cstdint>

namespace autodetect {

/// splitmix64 generator state. A stream is fully determined by its seed, so
/// every poisoned dataset and weight initialization can be reproduced from
/// the seed alone.
struct RngState {
    std::uint64_t state = 0;
};

/// Advances the state by the golden-ratio increment and returns the mixed
/// output.
std::uint64_t rng_next(RngState& rng);

/// Uniform double in [0, 1) built from the top 53 bits of the next output.
double rng_uniform(RngState& rng);

/// Uniform double in [lo, hi).
double rng_uniform(RngState& rng, double lo, double hi);

/// Uniform integer in {0, ..., n-1}; n must be positive.
std::uint64_t rng_below(RngState& rng, std::uint64_t n);

/// Independent child stream seeded from the parent's next output.
RngState rng_split(RngState& parent);

}  // namespace autodetect
