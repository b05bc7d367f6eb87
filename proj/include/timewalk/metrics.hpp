#pragma once

#include <filesystem>

#include "timewalk/clock.hpp"
#include "timewalk/types.hpp"

namespace tw::metrics {

/// Instrument response function: histogram of every tag's clock residual over
/// (-T/2, +T/2]. Empty stream gives an empty (all-zero) histogram.
DelayHistogram build_irf(const TagStream& tags, const clock::ClockModel& model,
                         double bin_width_ps = 1.0);

/// Full width of the histogram at fraction * peak. Peak and crossings are
/// evaluated on bin centers; the outermost crossings on each side are taken
/// (linear interpolation between neighbouring centers), which counts the full
/// tail extent. Optional 3-bin moving-average smoothing tames shot noise near
/// low fractions. Throws StatsError for an empty or peakless (all bins equal)
/// histogram.
double width_at_fraction(const DelayHistogram& hist, double fraction,
                         bool smooth3 = false);

/// FWHM / FW10%M / FW1%M summary. The 1% width uses 3-bin smoothing, the
/// others do not.
WidthMetrics width_metrics(const DelayHistogram& hist);

/// (N - 1) / (t_last - t_first) in counts per second; needs >= 2 tags.
double count_rate_cps(const TagStream& tags);

struct StreamReport {
  double count_rate_cps = 0.0;
  WidthMetrics widths;
};

struct CompareReport {
  StreamReport before;
  StreamReport after;
  double fwhm_ratio = 0.0;
  double fw10m_ratio = 0.0;
  double fw1m_ratio = 0.0;
};

/// Builds both IRFs with the same clock recipe and reports widths and
/// after/before ratios.
CompareReport compare_widths(const TagStream& before, const TagStream& after,
                             const clock::ClockSpec& spec,
                             double bin_width_ps = 1.0);

/// CSV with header "bin_start_ps,count", one row per bin.
void save_histogram_csv(const DelayHistogram& hist,
                        const std::filesystem::path& path);

} // namespace tw::metrics
