#include "timewalk/clock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "timewalk/kernels.hpp"

namespace tw::clock {

namespace {

constexpr size_t kUnlockWindow = 10000;

double window_median(std::vector<double>& buf) {
  size_t mid = buf.size() / 2;
  std::nth_element(buf.begin(), buf.begin() + static_cast<ptrdiff_t>(mid), buf.end());
  return buf[mid];
}

} // namespace

ClockModel pll_recover(const TagStream& tags, double nominal_period_ps,
                       PllGains gains) {
  if (!(nominal_period_ps > 0))
    throw ConfigError("nominal period must be > 0");
  ClockModel model;
  model.nominal_period_ps = nominal_period_ps;
  model.period_ps = nominal_period_ps;
  model.phase_ps = 0.0;
  if (tags.tags.empty()) return model;

  const size_t n = tags.tags.size();
  model.tick.resize(n);
  model.residual_ps.resize(n);

  double period = nominal_period_ps;
  double phase = static_cast<double>(tags.tags[0].time_ps);
  int64_t tick = 0;

  std::vector<double> window;
  window.reserve(std::min(n, kUnlockWindow));
  size_t window_index = 0;

  for (size_t k = 0; k < n; ++k) {
    double t = static_cast<double>(tags.tags[k].time_ps);
    if (k > 0) {
      double x = (t - phase) / period;
      double dn = std::ceil(x - 0.5); // window (-T/2, +T/2]
      if (dn < 0) dn = 0;
      double pred = phase + dn * period;
      double e = t - pred;
      if (dn > 0) period += gains.ki * e / dn;
      phase = pred + gains.kp * e;
      tick += static_cast<int64_t>(dn);
    }
    model.tick[k] = tick;
    double d = t - phase;
    model.residual_ps[k] = d;

    window.push_back(d);
    if (window.size() == kUnlockWindow) {
      if (std::abs(window_median(window)) > period / 4.0) {
        throw IntegrityError("pll unlocked: residual median beyond period/4 "
                             "in window " + std::to_string(window_index));
      }
      window.clear();
      ++window_index;
    }
  }

  model.period_ps = period;
  model.phase_ps = phase;
  return model;
}

ClockModel ideal_clock(const TagStream& tags, double period_ps,
                       double phase_ps) {
  if (!(period_ps > 0)) throw ConfigError("clock period must be > 0");
  ClockModel model;
  model.nominal_period_ps = period_ps;
  model.period_ps = period_ps;
  model.phase_ps = phase_ps;
  const size_t n = tags.tags.size();
  if (n == 0) return model;

  std::vector<int64_t> times(n);
  for (size_t i = 0; i < n; ++i) times[i] = tags.tags[i].time_ps;
  model.tick.resize(n);
  model.residual_ps.resize(n);
  kernels::clock_residuals(times.data(), n, phase_ps, period_ps,
                           model.tick.data(), model.residual_ps.data());
  return model;
}

ClockModel recover(const TagStream& tags, const ClockSpec& spec) {
  if (spec.ideal_phase_ps)
    return ideal_clock(tags, spec.nominal_period_ps, *spec.ideal_phase_ps);
  return pll_recover(tags, spec.nominal_period_ps, spec.gains);
}

std::vector<TagResidual> residuals(const TagStream& tags,
                                   const ClockModel& model) {
  if (tags.tags.size() != model.size()) {
    throw IntegrityError("clock model covers " + std::to_string(model.size()) +
                         " tags but stream has " +
                         std::to_string(tags.tags.size()));
  }
  std::vector<TagResidual> out;
  out.reserve(model.size());
  for (size_t i = 0; i < model.size(); ++i)
    out.push_back({i, model.tick[i], model.residual_ps[i]});
  return out;
}

} // namespace tw::clock
