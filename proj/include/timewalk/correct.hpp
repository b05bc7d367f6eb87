#pragma once

#include <cstdint>

#include "timewalk/kernels.hpp"
#include "timewalk/types.hpp"

namespace tw::correct {

/// Piecewise-linear interpolation of the calibration curve's median delay at
/// separation dt_ps. Clamped to the first/last bin value outside the
/// calibrated range; continuous everywhere. Needs >= 2 bins; dt_ps must be
/// positive.
double interpolate_delay(const CalibrationCurve& curve, double dt_ps);

/// Resamples the curve onto the uniform grid n * laser_period_ps. Curve knots
/// always sit on that grid, so the table reproduces interpolate_delay exactly
/// (up to last-ulp rounding) while giving the kernels O(1) indexed lookups.
kernels::DelayLut build_lut(const CalibrationCurve& curve);

struct CorrectResult {
  TagStream stream;
  /// Adjacent inversions found (and fixed by re-sorting) after correction.
  uint64_t resort_count = 0;
};

/// Streaming correction pass: per channel, each tag is shifted by the
/// interpolated delay for its gap to the *raw* predecessor on the same
/// channel, rounded to integer picoseconds. The first tag of each channel
/// passes through unshifted; shifted tags get the corrected flag. Output is
/// re-sorted if the shifts introduced inversions (counted in the result).
CorrectResult correct_stream(const TagStream& tags,
                             const CalibrationCurve& curve);

/// Non-paralyzable software dead time: per channel, a tag survives iff its
/// gap to the previous *kept* tag is >= deadtime_ps; the first tag of each
/// channel is always kept.
TagStream deadtime_filter(const TagStream& tags, int64_t deadtime_ps);

} // namespace tw::correct
