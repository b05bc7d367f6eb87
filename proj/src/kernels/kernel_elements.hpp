#pragma once

// Per-element arithmetic shared by the scalar reference kernels and the
// remainder loops of the SIMD variants. Every operation here has an exact
// vector counterpart; do not reorder or algebraically simplify.

#include <bit>
#include <cmath>
#include <cstdint>

#include "timewalk/kernels.hpp"

namespace tw::kernels::detail {

// 2^52 + 2^51. Adding it to |x| < 2^51 rounds x to the nearest integer
// (ties to even) and pins the result's exponent so the mantissa bits are the
// integer itself.
inline constexpr double kRoundMagic = 6755399441055744.0;
inline const int64_t kRoundMagicBits = std::bit_cast<int64_t>(kRoundMagic);

/// Round-half-even double -> int64 for |d| < 2^51.
inline int64_t round_to_i64(double d) {
  return std::bit_cast<int64_t>(d + kRoundMagic) - kRoundMagicBits;
}

struct LutView {
  const double* nodes;
  double origin;
  double inv_step;
  double last_node;  // double(n - 1)
  double last_seg;   // double(n - 2)

  explicit LutView(const DelayLut& lut)
      : nodes(lut.delay_ps.data()),
        origin(lut.origin_ps),
        inv_step(1.0 / lut.step_ps),
        last_node(static_cast<double>(lut.delay_ps.size() - 1)),
        last_seg(static_cast<double>(lut.delay_ps.size() - 2)) {}
};

/// Clamped linear interpolation at dt picoseconds (dt passed as double).
inline double lut_eval(const LutView& lv, double dt) {
  double u = (dt - lv.origin) * lv.inv_step;
  double uc = std::min(std::max(u, 0.0), lv.last_node);
  double i0 = std::min(std::floor(uc), lv.last_seg);
  double frac = uc - i0;
  auto k = static_cast<int32_t>(i0);
  double v0 = lv.nodes[k];
  double v1 = lv.nodes[k + 1];
  return v0 + frac * (v1 - v0);
}

inline int64_t correct_element(int64_t t, int64_t prev_t, const LutView& lv) {
  double dt = static_cast<double>(t - prev_t);
  return t - round_to_i64(lut_eval(lv, dt));
}

inline void residual_element(int64_t t, double phase, double inv_period,
                             double period, int64_t* tick, double* resid) {
  double td = static_cast<double>(t);
  double x = (td - phase) * inv_period;
  // Nearest grid point with the half-open window (-T/2, +T/2].
  double nd = std::ceil(x - 0.5);
  double pred = phase + nd * period;
  *resid = td - pred;
  *tick = static_cast<int64_t>(nd);
}

inline int32_t bin_index_element(double x, double origin, double inv_width,
                                 double nb1) {
  double u = (x - origin) * inv_width;
  double c = std::min(std::max(std::floor(u), 0.0), nb1);
  return static_cast<int32_t>(c);
}

} // namespace tw::kernels::detail
