#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tw {

// Seeded RNG wrapper. The engine is std::mt19937_64 (its output sequence is
// fixed by the standard); the variate transforms are implemented here instead
// of <random> distributions so that identical seeds give identical streams on
// every platform.
class Rng {
public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; two uniforms per pair, second cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // u1 == 0 would take log(0); nudge onto (0,1].
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Number of Bernoulli(p) failures before the first success, p in (0, 1).
  /// Lets a thinned pulse train be sampled in O(successes).
  uint64_t geometric_failures(double p) {
    double u = uniform(); // [0, 1)
    // floor(log(1-u) / log(1-p)); u = 0 -> 0 failures.
    double g = std::floor(std::log1p(-u) / std::log1p(-p));
    if (g < 0) g = 0;
    return static_cast<uint64_t>(g);
  }

private:
  std::mt19937_64 eng_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

} // namespace tw
