#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "timewalk/types.hpp"

namespace tw::clock {

/// Recovered laser clock: a tick index and residual delay for every tag, plus
/// the final period/phase estimate. Residuals live in (-period/2, +period/2].
struct ClockModel {
  double nominal_period_ps = 0.0;
  double period_ps = 0.0; // final locked estimate
  double phase_ps = 0.0;  // model time of the last tag's tick
  std::vector<int64_t> tick;
  std::vector<double> residual_ps;

  size_t size() const { return tick.size(); }
};

struct PllGains {
  double kp = 0.01;  // phase gain, fraction of the residual
  double ki = 1e-4;  // period gain, fraction of residual per elapsed tick
};

/// Proportional-integral clock recovery over an ordered tag stream.
///
/// For each tag the nearest model tick and residual e are found; the period
/// is nudged by ki*e/ticks_elapsed and the phase by kp*e. Reported residuals
/// are measured against the post-update model. The nominal period must be
/// within ~100 ppm of the true period. Throws IntegrityError("unlocked...")
/// if the residual median of any 10^4-tag window drifts beyond period/4.
ClockModel pll_recover(const TagStream& tags, double nominal_period_ps,
                       PllGains gains = {});

/// Fixed-grid bypass for data whose clock is known exactly (simulations).
ClockModel ideal_clock(const TagStream& tags, double period_ps,
                       double phase_ps);

/// How a pipeline stage should obtain a clock for a stream.
struct ClockSpec {
  double nominal_period_ps = 0.0;
  PllGains gains;
  std::optional<double> ideal_phase_ps; // set -> use ideal_clock
};

ClockModel recover(const TagStream& tags, const ClockSpec& spec);

struct TagResidual {
  size_t index = 0;
  int64_t tick = 0;
  double d_ps = 0.0;
};

/// Zips tags with their model residuals; throws IntegrityError if the model
/// was not built from a stream of the same length.
std::vector<TagResidual> residuals(const TagStream& tags,
                                   const ClockModel& model);

} // namespace tw::clock
