#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "timewalk/errors.hpp"

namespace tw {

/// One detection event. Times are integer picoseconds since the stream epoch.
struct TimeTag {
  int64_t time_ps = 0;
  uint16_t channel = 0;
  uint16_t flags = 0;

  static constexpr uint16_t kFlagCorrected = 1u << 0;
  static constexpr uint16_t kFlagSynthetic = 1u << 1;

  bool operator==(const TimeTag&) const = default;
};

/// Sort order: time, ties broken by ascending channel.
inline bool tag_less(const TimeTag& a, const TimeTag& b) {
  if (a.time_ps != b.time_ps) return a.time_ps < b.time_ps;
  return a.channel < b.channel;
}

/// Ordered sequence of tags plus the stream header fields.
struct TagStream {
  uint16_t channel_count = 1;
  std::vector<TimeTag> tags;

  bool operator==(const TagStream&) const = default;
};

/// Index of the first tag violating the (time, channel) ordering, if any.
std::optional<size_t> first_order_violation(const TagStream& s);

/// Throws IntegrityError on ordering violations or out-of-range channels.
void validate_stream(const TagStream& s);

/// Pulsed-laser source parameters.
struct LaserConfig {
  double period_ps = 1860.465; // 537.5 MHz pulse train
  double mean_photon_number = 0.002;
  int64_t duration_ps = 100'000'000'000; // 0.1 s
  double phase_ps = 0.0;

  void validate() const;
};

/// Detector + readout chain parameters.
///
/// The comparator triggers at threshold_mv on a pulse that rises linearly
/// over rise_time_ps to an amplitude set by the recovered bias fraction, then
/// decays with tau_rf_ps. highpass_cuton_hz > 0 enables the amplifier
/// undershoot model.
struct DetectorConfig {
  double tau_bias_ps = 40000.0;
  double tau_rf_ps = 5000.0;
  double rise_time_ps = 300.0;
  double pulse_height_mv = 125.0;
  double threshold_mv = 50.0;
  double highpass_cuton_hz = 80.0e6;
  double intrinsic_jitter_sigma_ps = 21.0;
  double efficiency_max = 0.8;
  double efficiency_exponent = 4.0;
  bool holdoff_enabled = true;

  void validate() const;
};

/// Fixed-bin counts histogram. Bin i spans
/// [origin_ps + i*bin_width_ps, origin_ps + (i+1)*bin_width_ps); values on
/// the outer edges are clamped into the first/last bin so a window of
/// (origin, origin + n*width] loses nothing at the right edge.
struct DelayHistogram {
  double bin_width_ps = 1.0;
  double origin_ps = 0.0;
  std::vector<uint64_t> counts;

  DelayHistogram() = default;
  DelayHistogram(double bin_width, double origin, size_t nbins)
      : bin_width_ps(bin_width), origin_ps(origin), counts(nbins, 0) {
    if (bin_width <= 0) throw ConfigError("histogram bin width must be > 0");
    if (nbins == 0) throw ConfigError("histogram needs at least one bin");
  }

  size_t bin_of(double v) const;
  void add(double v) { ++counts[bin_of(v)]; }
  uint64_t total() const;

  double bin_start(size_t i) const { return origin_ps + bin_width_ps * static_cast<double>(i); }
  double bin_center(size_t i) const { return origin_ps + bin_width_ps * (static_cast<double>(i) + 0.5); }

  /// Commutative merge of congruent histograms (same geometry).
  void merge(const DelayHistogram& other);

  /// Histogram median with linear interpolation inside the median bin.
  double median() const;
};

/// Width-at-fraction summary of an instrument response function.
struct WidthMetrics {
  double fwhm_ps = 0.0;
  double fw10m_ps = 0.0;
  double fw1m_ps = 0.0;
  double peak_position_ps = 0.0;
  uint64_t total_counts = 0;
};

struct CalibrationBin {
  double t_prime_ps = 0.0;  // pair separation, whole laser periods
  double d_med_ps = 0.0;    // median delay, baseline-subtracted
  double d_fwhm_ps = 0.0;   // FWHM of the delay distribution
  uint64_t n_samples = 0;
};

/// Median-delay-vs-separation lookup table, the product of calibration.
struct CalibrationCurve {
  double laser_period_ps = 0.0;
  double baseline_ps = 0.0; // asymptotic latency removed from every bin
  uint64_t min_samples = 0;
  std::vector<CalibrationBin> bins;

  /// Throws IntegrityError unless bins are strictly ascending in t_prime_ps
  /// and every bin satisfies n_samples >= min_samples.
  void validate() const;
};

} // namespace tw
