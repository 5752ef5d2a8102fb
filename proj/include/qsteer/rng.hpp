#pragma once

#include <cstdint>

namespace qsteer {

/// SplitMix64 (Steele, Lea, Vigna). Counter-based seeding gives independent
/// substreams: trial i of a simulation draws from SplitMix64(seed ^ i), so
/// per-trial results do not depend on the total trial count or scheduling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace qsteer
