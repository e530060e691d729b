#pragma once

#include <cmath>
#include <cstdint>

namespace pilqr {

/// SplitMix64: a tiny, platform-independent, seedable 64-bit generator.
/// Used everywhere randomness must be reproducible across runs and
/// platforms. Streams are split by sample index via mix_key.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Derives an independent stream key for (seed, index).
  static uint64_t mix_key(uint64_t seed, uint64_t index) {
    SplitMix64 g(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
    return g.next();
  }

 private:
  uint64_t state_;
};

}  // namespace pilqr
