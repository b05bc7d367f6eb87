#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "timewalk/errors.hpp"

namespace tw::kernels {

// Data-parallel inner loops of the pipeline: applying the delay correction to
// a tag block, converting tags to clock residuals, and histogram binning.
// Each kernel has a scalar reference implementation and an AVX2 variant; the
// dispatched entry points pick one at runtime. Scalar and SIMD variants are
// bit-identical by construction (same per-element operation order, no FMA
// contraction), which the test suite asserts on random inputs.
//
// Preconditions common to all kernels: |time values| < 2^51 ps (~26 days),
// so they are exactly representable through the double-precision paths.

enum class Backend {
  Auto,   // pick the best supported variant
  Scalar,
  Avx2,
};

/// Variant the dispatched entry points currently resolve to.
Backend active_backend();

/// Force a backend (tests, benchmarking). Backend::Auto restores detection.
/// Throws ConfigError if the requested backend is not supported on this CPU.
void set_backend(Backend b);

const char* backend_name(Backend b);

/// Parse "auto" | "scalar" | "avx2" (for CLI flags / TW_KERNEL env var).
Backend parse_backend(const std::string& name);

/// Uniform-grid delay lookup: node k sits at origin_ps + k*step_ps. Queries
/// are clamped to the first/last node, linear in between.
struct DelayLut {
  double origin_ps = 0.0;
  double step_ps = 1.0;
  std::vector<double> delay_ps; // >= 2 nodes

  bool valid() const { return step_ps > 0 && delay_ps.size() >= 2; }
};

// out[i] = t[i] - round(D(t[i] - t[i-1])) for i >= 1, out[0] = t[0].
// D is the clamped linear interpolation over `lut`; rounding is to the
// nearest integer picosecond, ties to even. `t` must be non-decreasing.
void correct_tags(const int64_t* t, size_t n, const DelayLut& lut, int64_t* out);

/// Single-element version with semantics identical to correct_tags; used by
/// the generic multi-channel path.
int64_t correct_one(int64_t t, int64_t prev_t, const DelayLut& lut);

// Residual of each tag against the clock grid phase_ps + k*period_ps.
// tick[i] = index of the nearest grid point (window (-T/2, +T/2]),
// resid[i] = t[i] - (phase_ps + tick[i]*period_ps).
void clock_residuals(const int64_t* t, size_t n, double phase_ps,
                     double period_ps, int64_t* tick, double* resid);

// idx[i] = clamp(floor((x[i] - origin) / width), 0, nbins - 1).
void bin_indices(const double* x, size_t n, double origin, double width,
                 int32_t nbins, int32_t* idx);

// Per-variant entry points (avx2 ones exist only when compiled in; the
// dispatcher and the equivalence tests are their only intended callers).
namespace detail {
void correct_tags_scalar(const int64_t* t, size_t n, const DelayLut& lut, int64_t* out);
void clock_residuals_scalar(const int64_t* t, size_t n, double phase_ps,
                            double period_ps, int64_t* tick, double* resid);
void bin_indices_scalar(const double* x, size_t n, double origin, double width,
                        int32_t nbins, int32_t* idx);
#if defined(TW_HAVE_AVX2)
void correct_tags_avx2(const int64_t* t, size_t n, const DelayLut& lut, int64_t* out);
void clock_residuals_avx2(const int64_t* t, size_t n, double phase_ps,
                          double period_ps, int64_t* tick, double* resid);
void bin_indices_avx2(const double* x, size_t n, double origin, double width,
                      int32_t nbins, int32_t* idx);
#endif
} // namespace detail

} // namespace tw::kernels
