#include "geoconv/rng.hpp"

namespace geoconv {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double low, double high) {
  const double u = low + (high - low) * uniform01(rng);
  return u < high ? u : low;  // guard the rounding edge
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::int64_t uniform_int(Rng& rng, std::int64_t low, std::int64_t high) {
  return low + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(high - low) + 1));
}

}  // namespace geoconv
