#pragma once

#include <cmath>
#include <cstdint>

#include "graspkit/geometry.hpp"

namespace graspkit {

/// Splittable counter-friendly PRNG (splitmix64 core).
///
/// Every stochastic operation in the library takes one of these, seeded from a
/// mandatory master seed. Parallel work derives one independent stream per
/// work item from (master, counter), so results do not depend on the worker
/// count or on scheduling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound == 0 ? 0 : (~0ULL) - (~0ULL) % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal deviate (Box-Muller, no caching so streams stay aligned).
  double next_gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  /// Derive an independent stream seed for work item `counter`.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t counter) {
    SplitMix64 g(master ^ (0xD1342543DE82EF95ULL * (counter + 1)));
    g.next_u64();
    return g.next_u64();
  }

  /// Random unit vector, uniform on the sphere.
  Vec3 next_unit_vector() {
    const double z = next_in(-1.0, 1.0);
    const double phi = next_in(-kPi, kPi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  /// Random rotation: uniform axis, uniform angle in [0, 2*pi).
  Mat3 next_rotation() {
    return rotation_about_axis(next_unit_vector(), next_in(0.0, 2.0 * kPi));
  }

 private:
  std::uint64_t state_;
};

}  // namespace graspkit
