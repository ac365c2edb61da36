#pragma once

#include <cmath>
#include <cstdint>

namespace rsonc {

// Counter-based Gaussian generator. Every draw is a pure function of
// (seed, path, step), so panels are reproducible bit-exactly regardless of
// generation order or worker count.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform in [0, 1) from a 64-bit word (53 mantissa bits).
inline double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Standard normal draw keyed by (seed, path, step); Box-Muller.
inline double standard_normal(std::uint64_t seed, std::uint64_t path,
                              std::uint64_t step) {
  std::uint64_t counter = (path << 20) ^ step;
  std::uint64_t a = splitmix64(counter ^ splitmix64(seed));
  std::uint64_t b = splitmix64(a);
  double u1 = to_unit(a);
  double u2 = to_unit(b);
  // 1 - u1 > 0, so the log is finite.
  double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng
}  // namespace rsonc
