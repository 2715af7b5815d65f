#pragma once

#include <cmath>
#include <cstdint>

#include "rispls/common.hpp"

namespace rispls {

// Splittable counter-based generator. A stream is (key, counter); the i-th
// output is a hash of key + i, so streams can be split without sharing
// state and draws are reproducible regardless of evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  // Derives an independent child stream. Distinct tags give distinct
  // streams; splitting does not advance this stream's counter.
  Rng split(std::uint64_t tag) const {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(tag + 0x632be59bd9b4e019ull));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1) — safe as a log/Box-Muller input.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes two uniforms per call so the
  // stream position is a pure function of the call count.
  double normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rispls
