#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "timewalk/clock.hpp"
#include "timewalk/types.hpp"

namespace tw::calib {

/// Adjacent detection pair: the second event's residual delay, keyed by the
/// whole number of laser periods separating the pair.
struct PairRecord {
  int64_t n = 0;          // >= 1
  double t_prime_ps = 0.0; // n * laser period
  double d_ps = 0.0;       // residual of the second event
};

struct PairExtraction {
  std::vector<PairRecord> pairs;
  uint64_t dropped_same_tick = 0;
};

/// Walks adjacent tag pairs, emitting (n, n*T, d) with n taken from the clock
/// model's tick indices. Pairs landing on the same tick are dropped and
/// counted.
PairExtraction extract_pairs(const TagStream& tags,
                             const clock::ClockModel& model);

struct CurveConfig {
  double bin_width_ps = 1.0;
  uint64_t min_samples = 100;
  double baseline_tprime_ps = 500000.0; // bins past this set the zero level
  double max_tprime_ps = 2.0e6;         // ignore rarer, longer separations
};

struct CurveBuild {
  CalibrationCurve curve;
  std::vector<std::string> warnings;
};

/// Groups pairs by n, builds a delay histogram per retained group (>=
/// min_samples, t' <= max_tprime), takes median and FWHM, and subtracts the
/// mean median of the baseline region so the curve tends to zero at large t'.
///
/// Throws StatsError when no group reaches min_samples (reporting the best
/// populated one) or when no retained bin lies in the baseline region. Emits
/// a wrap-risk warning when any group has > 1% of its mass in the outermost
/// 5% of the residual window.
CurveBuild build_curve(std::span<const PairRecord> pairs,
                       double laser_period_ps, const CurveConfig& cfg = {});

/// Curve file: JSON {version, laser_period_ps, baseline_ps, min_samples,
/// bins:[{t_prime_ps, d_med_ps, d_fwhm_ps, n_samples}]}, bins ascending.
CalibrationCurve load_curve(const std::filesystem::path& path);
void save_curve(const CalibrationCurve& curve,
                const std::filesystem::path& path);

} // namespace tw::calib
