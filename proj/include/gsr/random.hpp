#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace gsr {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream id and a counter into an independent seed
/// (splitmix64 finalizer), so every consumer gets its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0);

/// Uniform integer in [0, n) by rejection; n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(Rng& rng, std::size_t n);

// Stream ids used with derive_seed.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kData = 3;
inline constexpr std::uint64_t kSplit = 4;
}  // namespace streams

}  // namespace gsr
