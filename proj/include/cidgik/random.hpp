#pragma once

#include <cstdint>
#include <numbers>

namespace cidgik {

/// SplitMix64: a counter-based 64-bit generator. The n-th output depends only
/// on seed + n * 0x9E3779B97F4A7C15, so streams reproduce across platforms and
/// languages bit for bit.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform angle in (-pi, pi].
  double angle() { return std::numbers::pi - 2.0 * std::numbers::pi * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace cidgik
