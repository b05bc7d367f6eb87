#include "timewalk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include "timewalk/kernels.hpp"

namespace tw::metrics {

DelayHistogram build_irf(const TagStream& tags, const clock::ClockModel& model,
                         double bin_width_ps) {
  if (tags.tags.size() != model.size())
    throw IntegrityError("build_irf: clock model does not match stream");
  const double period = model.period_ps;
  if (!(bin_width_ps > 0) || bin_width_ps >= period)
    throw ConfigError("build_irf: bin width must be in (0, period)");
  const auto nbins = static_cast<size_t>(std::ceil(period / bin_width_ps));
  DelayHistogram hist(bin_width_ps, -period / 2.0, nbins);
  const size_t n = model.size();
  if (n == 0) return hist;

  std::vector<int32_t> idx(n);
  kernels::bin_indices(model.residual_ps.data(), n, hist.origin_ps,
                       hist.bin_width_ps, static_cast<int32_t>(nbins),
                       idx.data());
  for (size_t i = 0; i < n; ++i) ++hist.counts[static_cast<size_t>(idx[i])];
  return hist;
}

namespace {

std::vector<double> smoothed_counts(const DelayHistogram& hist, bool smooth3) {
  const auto& c = hist.counts;
  std::vector<double> v(c.size());
  if (!smooth3) {
    for (size_t i = 0; i < c.size(); ++i) v[i] = static_cast<double>(c[i]);
    return v;
  }
  for (size_t i = 0; i < c.size(); ++i) {
    double sum = static_cast<double>(c[i]);
    if (i > 0) sum += static_cast<double>(c[i - 1]);
    if (i + 1 < c.size()) sum += static_cast<double>(c[i + 1]);
    v[i] = sum / 3.0; // zero-padded edges keep the scale uniform
  }
  return v;
}

} // namespace

double width_at_fraction(const DelayHistogram& hist, double fraction,
                         bool smooth3) {
  if (!(fraction > 0 && fraction < 1))
    throw ConfigError("width fraction must be in (0, 1)");
  if (hist.total() == 0) throw StatsError("width of empty histogram");

  std::vector<double> v = smoothed_counts(hist, smooth3);
  double vmax = -std::numeric_limits<double>::infinity();
  double vmin = std::numeric_limits<double>::infinity();
  for (double x : v) {
    vmax = std::max(vmax, x);
    vmin = std::min(vmin, x);
  }
  if (vmax == vmin)
    throw StatsError("degenerate histogram: no peak to measure");

  const double thr = fraction * vmax;
  size_t left = 0;
  while (v[left] < thr) ++left;
  size_t right = v.size() - 1;
  while (v[right] < thr) --right;

  double xl = hist.bin_center(left);
  if (left > 0) {
    double f = (thr - v[left - 1]) / (v[left] - v[left - 1]);
    xl = hist.bin_center(left - 1) + f * hist.bin_width_ps;
  }
  double xr = hist.bin_center(right);
  if (right + 1 < v.size()) {
    double f = (thr - v[right + 1]) / (v[right] - v[right + 1]);
    xr = hist.bin_center(right + 1) - f * hist.bin_width_ps;
  }
  return xr - xl;
}

WidthMetrics width_metrics(const DelayHistogram& hist) {
  WidthMetrics m;
  m.total_counts = hist.total();
  m.fwhm_ps = width_at_fraction(hist, 0.5);
  m.fw10m_ps = width_at_fraction(hist, 0.1);
  m.fw1m_ps = width_at_fraction(hist, 0.01, /*smooth3=*/true);

  size_t peak = 0;
  for (size_t i = 1; i < hist.counts.size(); ++i)
    if (hist.counts[i] > hist.counts[peak]) peak = i;
  m.peak_position_ps = hist.bin_center(peak);
  return m;
}

double count_rate_cps(const TagStream& tags) {
  if (tags.tags.size() < 2)
    throw StatsError("count rate undefined for fewer than 2 tags");
  auto span = tags.tags.back().time_ps - tags.tags.front().time_ps;
  if (span <= 0) throw StatsError("count rate undefined over zero time span");
  return static_cast<double>(tags.tags.size() - 1) * 1e12 /
         static_cast<double>(span);
}

CompareReport compare_widths(const TagStream& before, const TagStream& after,
                             const clock::ClockSpec& spec,
                             double bin_width_ps) {
  CompareReport r;
  r.before.count_rate_cps = count_rate_cps(before);
  r.after.count_rate_cps = count_rate_cps(after);
  r.before.widths =
      width_metrics(build_irf(before, clock::recover(before, spec), bin_width_ps));
  r.after.widths =
      width_metrics(build_irf(after, clock::recover(after, spec), bin_width_ps));
  r.fwhm_ratio = r.after.widths.fwhm_ps / r.before.widths.fwhm_ps;
  r.fw10m_ratio = r.after.widths.fw10m_ps / r.before.widths.fw10m_ps;
  r.fw1m_ratio = r.after.widths.fw1m_ps / r.before.widths.fw1m_ps;
  return r;
}

void save_histogram_csv(const DelayHistogram& hist,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "bin_start_ps,count\n";
  char buf[64];
  for (size_t i = 0; i < hist.counts.size(); ++i) {
    snprintf(buf, sizeof(buf), "%.6g,%llu\n", hist.bin_start(i),
             static_cast<unsigned long long>(hist.counts[i]));
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

} // namespace tw::metrics
