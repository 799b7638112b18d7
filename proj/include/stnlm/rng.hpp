#ifndef STNLM_RNG_HPP
#define STNLM_RNG_HPP

#include <cstdint>
#include <random>
#include <span>

namespace stnlm {

// All randomness in the library goes through std::mt19937_64, whose output
// sequence is pinned by the C++ standard, so fixtures reproduce across
// platforms and standard libraries.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for work unit `index` of a run seeded with `seed`. Parallel loops use
// one stream per unit so results do not depend on scheduling.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 1));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw over `weights` walked in index order. `total` is the
// caller-computed sum; entries must be non-negative.
inline int sample_index(std::span<const double> weights, double total, Rng& rng) {
  const double u = uniform01(rng) * total;
  double cum = 0.0;
  int last_nonzero = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_nonzero = static_cast<int>(i);
    cum += weights[i];
    if (u < cum) return static_cast<int>(i);
  }
  return last_nonzero;  // rounding tail
}

}  // namespace stnlm

#endif
