#pragma once

#include <cstdint>
#include <cmath>

namespace adt {

// Counter-based 64-bit generator (splitmix64 applied to key ^ counter).
// Part of the on-disk data contract: sequences generated from the same
// seed are bit-identical on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : key_(seed), counter_(0) {}

  uint64_t next_u64() {
    uint64_t z = key_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    // modulo bias is negligible for the small n used here
    return next_u64() % n;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Box-Muller, one value per call (second value discarded for simplicity).
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586 * u2);
  }

  // Derive an independent stream, e.g. one per sequence index.
  Rng fork(uint64_t stream) const {
    Rng r(key_ ^ (0xd1342543de82ef95ULL * (stream + 1)));
    return r;
  }

 private:
  uint64_t key_;
  uint64_t counter_;
};

}  // namespace adt
