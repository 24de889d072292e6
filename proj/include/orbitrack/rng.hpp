#ifndef ORBITRACK_RNG_HPP
#define ORBITRACK_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace orbitrack {

/// Standard normal via Box-Muller on the raw engine. Exactly two engine
/// draws per call, independent of the platform's distribution internals, so
/// streams stay aligned and runs reproduce bit-for-bit.
inline double std_normal(std::mt19937_64& rng) {
  // (0,1] to keep the log finite
  double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Per-path stream: master seed plus path index.
inline std::mt19937_64 path_rng(std::uint64_t master_seed, std::uint64_t path_index) {
  return std::mt19937_64(master_seed + path_index);
}

}  // namespace orbitrack

#endif  // ORBITRACK_RNG_HPP
