#include "timewalk/correct.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tw::correct {

double interpolate_delay(const CalibrationCurve& curve, double dt_ps) {
  if (curve.bins.size() < 2)
    throw ConfigError("interpolate_delay: curve needs >= 2 bins");
  if (!(dt_ps > 0))
    throw ConfigError("interpolate_delay: dt must be positive");
  const auto& bins = curve.bins;
  if (dt_ps <= bins.front().t_prime_ps) return bins.front().d_med_ps;
  if (dt_ps >= bins.back().t_prime_ps) return bins.back().d_med_ps;
  auto hi = std::lower_bound(
      bins.begin(), bins.end(), dt_ps,
      [](const CalibrationBin& b, double v) { return b.t_prime_ps < v; });
  auto lo = hi - 1;
  double f = (dt_ps - lo->t_prime_ps) / (hi->t_prime_ps - lo->t_prime_ps);
  return lo->d_med_ps + f * (hi->d_med_ps - lo->d_med_ps);
}

kernels::DelayLut build_lut(const CalibrationCurve& curve) {
  if (curve.bins.size() < 2)
    throw ConfigError("build_lut: curve needs >= 2 bins");
  const double period = curve.laser_period_ps;
  auto n_first = static_cast<int64_t>(
      std::llround(curve.bins.front().t_prime_ps / period));
  auto n_last = static_cast<int64_t>(
      std::llround(curve.bins.back().t_prime_ps / period));

  kernels::DelayLut lut;
  lut.origin_ps = curve.bins.front().t_prime_ps;
  lut.step_ps = period;
  lut.delay_ps.reserve(static_cast<size_t>(n_last - n_first) + 1);
  for (int64_t n = n_first; n <= n_last; ++n) {
    double t = static_cast<double>(n) * period;
    // Clamp against fp wobble right at the ends.
    t = std::min(std::max(t, curve.bins.front().t_prime_ps),
                 curve.bins.back().t_prime_ps);
    lut.delay_ps.push_back(interpolate_delay(curve, t));
  }
  return lut;
}

namespace {

bool curve_on_period_grid(const CalibrationCurve& curve) {
  for (const auto& b : curve.bins) {
    double n = b.t_prime_ps / curve.laser_period_ps;
    if (std::abs(n - std::round(n)) > 1e-6) return false;
  }
  return true;
}

constexpr size_t kMaxLutNodes = size_t{1} << 24;

} // namespace

CorrectResult correct_stream(const TagStream& tags,
                             const CalibrationCurve& curve) {
  if (curve.bins.size() < 2)
    throw ConfigError("correct_stream: curve has no usable bins");
  validate_stream(tags);

  CorrectResult res;
  res.stream.channel_count = tags.channel_count;
  res.stream.tags = tags.tags;
  auto& out = res.stream.tags;
  const size_t n = out.size();
  if (n == 0) return res;

  const double period = curve.laser_period_ps;
  const auto span_nodes = static_cast<size_t>(
      (curve.bins.back().t_prime_ps - curve.bins.front().t_prime_ps) / period) + 1;
  const bool lut_ok = curve_on_period_grid(curve) && span_nodes <= kMaxLutNodes;

  bool single_channel = true;
  for (const auto& tag : out) {
    if (tag.channel != out[0].channel) { single_channel = false; break; }
  }

  if (lut_ok) {
    kernels::DelayLut lut = build_lut(curve);
    if (single_channel) {
      // Hot path: contiguous times through the SIMD kernel.
      std::vector<int64_t> t(n), corrected(n);
      for (size_t i = 0; i < n; ++i) t[i] = out[i].time_ps;
      kernels::correct_tags(t.data(), n, lut, corrected.data());
      out[0].time_ps = corrected[0];
      for (size_t i = 1; i < n; ++i) {
        out[i].time_ps = corrected[i];
        out[i].flags |= TimeTag::kFlagCorrected;
      }
    } else {
      std::vector<int64_t> prev(tags.channel_count, -1);
      std::vector<bool> seen(tags.channel_count, false);
      for (auto& tag : out) {
        if (seen[tag.channel]) {
          int64_t raw = tag.time_ps;
          tag.time_ps = kernels::correct_one(raw, prev[tag.channel], lut);
          tag.flags |= TimeTag::kFlagCorrected;
          prev[tag.channel] = raw;
        } else {
          seen[tag.channel] = true;
          prev[tag.channel] = tag.time_ps;
        }
      }
    }
  } else {
    // Irregular curve grid: exact piecewise-linear per tag.
    std::vector<int64_t> prev(tags.channel_count, -1);
    std::vector<bool> seen(tags.channel_count, false);
    for (auto& tag : out) {
      if (seen[tag.channel]) {
        int64_t raw = tag.time_ps;
        double gap = static_cast<double>(raw - prev[tag.channel]);
        double d = gap > 0 ? interpolate_delay(curve, gap)
                           : curve.bins.front().d_med_ps;
        tag.time_ps = raw - std::llround(d);
        tag.flags |= TimeTag::kFlagCorrected;
        prev[tag.channel] = raw;
      } else {
        seen[tag.channel] = true;
        prev[tag.channel] = tag.time_ps;
      }
    }
  }

  for (size_t i = 1; i < n; ++i) {
    if (tag_less(out[i], out[i - 1])) ++res.resort_count;
  }
  if (res.resort_count > 0)
    std::stable_sort(out.begin(), out.end(), tag_less);
  return res;
}

TagStream deadtime_filter(const TagStream& tags, int64_t deadtime_ps) {
  if (deadtime_ps < 0) throw ConfigError("dead time must be >= 0");
  validate_stream(tags);
  TagStream out;
  out.channel_count = tags.channel_count;
  out.tags.reserve(tags.tags.size());
  std::vector<int64_t> last_kept(tags.channel_count, 0);
  std::vector<bool> seen(tags.channel_count, false);
  for (const auto& tag : tags.tags) {
    if (!seen[tag.channel] ||
        tag.time_ps - last_kept[tag.channel] >= deadtime_ps) {
      out.tags.push_back(tag);
      seen[tag.channel] = true;
      last_kept[tag.channel] = tag.time_ps;
    }
  }
  return out;
}

} // namespace tw::correct
