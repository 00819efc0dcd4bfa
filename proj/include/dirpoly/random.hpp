#pragma once

#include <cstdint>
#include <random>

namespace dirpoly {

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace dirpoly
