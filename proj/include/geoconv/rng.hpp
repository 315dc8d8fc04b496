#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace geoconv {

/// Engine used everywhere. Distributions are implemented here rather than
/// via <random> so that streams are bit-identical across standard libraries.
using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

/// Uniform on [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Uniform on [low, high).
double uniform(Rng& rng, double low, double high);

/// Uniform integer on [0, n), unbiased. n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform integer on [low, high] inclusive.
std::int64_t uniform_int(Rng& rng, std::int64_t low, std::int64_t high);

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace geoconv
