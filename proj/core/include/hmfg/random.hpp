#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace hmfg {

using Engine = std::mt19937_64;

// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a base seed with stream identifiers into an independent child seed.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id));
  return h;
}

/// Inverse-CDF draw from a probability vector. Falls back to the last
/// positive entry if rounding leaves u above the cumulative sum.
inline int sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    acc += probs[k];
    last_positive = static_cast<int>(k);
    if (u < acc) return static_cast<int>(k);
  }
  return last_positive;
}

}  // namespace hmfg
