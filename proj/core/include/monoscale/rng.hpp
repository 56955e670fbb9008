#pragma once

#include <cstdint>

namespace monoscale {

/// Counter-based splittable generator (SplitMix64 core). Streams derived from
/// a single run seed are independent and the draw sequence is identical on
/// every platform, which the byte-identical-output guarantee relies on.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  /// Child stream for an independent sampling purpose.
  Rng split(uint64_t stream_id) const { return Rng(mix(state_ ^ mix(stream_id + 0x632be59bd9b4e019ull))); }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on a dyadic grid (multiples of 2^-20 of the range). Lattice-shift
  /// periodicity tests need sample points that survive +1.0 exactly.
  double uniform_dyadic(double lo, double hi) {
    const double steps = 1048576.0;  // 2^20
    double t = static_cast<double>(next_u64() % 1048576ull) / steps;
    return lo + (hi - lo) * t;
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  uint64_t state_;
};

}  // namespace monoscale
