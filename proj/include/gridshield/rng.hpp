#pragma once

#include <cstdint>

namespace gridshield {

/// SplitMix64 generator. Used everywhere instead of <random> so that results
/// are bit-identical across standard library implementations; reproducibility
/// of shield files and experiment CSVs depends on it.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint32_t uniform_int(std::uint32_t n) {
    return static_cast<std::uint32_t>(next() % n);
  }

 private:
  std::uint64_t state_;
};

/// Combines stream identifiers into an independent seed, so parallel work
/// items (cell/action pairs, episodes) get schedule-independent streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c = 0) {
  SplitMix64 g(a ^ (b * 0x9e3779b97f4a7c15ULL) ^ (c * 0xd1b54a32d192ed03ULL));
  g.next();
  return g.next();
}

}  // namespace gridshield
