#include "timewalk/types.hpp"

#include <cmath>
#include <string>

namespace tw {

std::optional<size_t> first_order_violation(const TagStream& s) {
  for (size_t i = 1; i < s.tags.size(); ++i) {
    if (tag_less(s.tags[i], s.tags[i - 1])) return i;
  }
  return std::nullopt;
}

void validate_stream(const TagStream& s) {
  if (auto bad = first_order_violation(s)) {
    throw IntegrityError("tag stream out of order at record " +
                         std::to_string(*bad));
  }
  for (size_t i = 0; i < s.tags.size(); ++i) {
    if (s.tags[i].channel >= s.channel_count) {
      throw IntegrityError("record " + std::to_string(i) + ": channel " +
                           std::to_string(s.tags[i].channel) +
                           " >= channel count " +
                           std::to_string(s.channel_count));
    }
  }
}

void LaserConfig::validate() const {
  if (!(period_ps > 0)) throw ConfigError("laser.period_ps must be > 0");
  if (!(mean_photon_number > 0 && mean_photon_number < 1))
    throw ConfigError("laser.mean_photon_number must be in (0, 1)");
  if (duration_ps <= 0) throw ConfigError("laser.duration_ps must be > 0");
  if (phase_ps < 0) throw ConfigError("laser.phase_ps must be >= 0");
}

void DetectorConfig::validate() const {
  if (!(tau_bias_ps > 0)) throw ConfigError("detector.tau_bias_ps must be > 0");
  if (!(tau_rf_ps > 0)) throw ConfigError("detector.tau_rf_ps must be > 0");
  if (!(rise_time_ps > 0)) throw ConfigError("detector.rise_time_ps must be > 0");
  if (!(pulse_height_mv > 0))
    throw ConfigError("detector.pulse_height_mv must be > 0");
  if (!(threshold_mv > 0)) throw ConfigError("detector.threshold_mv must be > 0");
  if (threshold_mv >= pulse_height_mv)
    throw ConfigError("detector.threshold_mv must be below pulse_height_mv, "
                      "otherwise no full-reset pulse can trigger");
  if (highpass_cuton_hz < 0)
    throw ConfigError("detector.highpass_cuton_hz must be >= 0");
  if (intrinsic_jitter_sigma_ps < 0)
    throw ConfigError("detector.intrinsic_jitter_sigma_ps must be >= 0");
  if (!(efficiency_max > 0 && efficiency_max <= 1))
    throw ConfigError("detector.efficiency_max must be in (0, 1]");
  if (!(efficiency_exponent > 0))
    throw ConfigError("detector.efficiency_exponent must be > 0");
}

size_t DelayHistogram::bin_of(double v) const {
  // Same arithmetic as kernels::bin_indices so the two paths agree bin-for-bin.
  double u = (v - origin_ps) * (1.0 / bin_width_ps);
  double c = std::min(std::max(std::floor(u), 0.0),
                      static_cast<double>(counts.size() - 1));
  return static_cast<size_t>(c);
}

uint64_t DelayHistogram::total() const {
  uint64_t n = 0;
  for (uint64_t c : counts) n += c;
  return n;
}

void DelayHistogram::merge(const DelayHistogram& other) {
  if (other.counts.size() != counts.size() ||
      other.bin_width_ps != bin_width_ps || other.origin_ps != origin_ps) {
    throw IntegrityError("histogram merge: incompatible geometry");
  }
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

double DelayHistogram::median() const {
  uint64_t n = total();
  if (n == 0) throw StatsError("median of empty histogram");
  double target = 0.5 * static_cast<double>(n);
  uint64_t cum = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    double next = static_cast<double>(cum + counts[i]);
    if (next >= target) {
      double inside = (target - static_cast<double>(cum)) /
                      static_cast<double>(counts[i]);
      return bin_start(i) + bin_width_ps * inside;
    }
    cum += counts[i];
  }
  return bin_center(counts.size() - 1); // unreachable for consistent counts
}

void CalibrationCurve::validate() const {
  if (!(laser_period_ps > 0))
    throw IntegrityError("curve: laser_period_ps must be > 0");
  for (size_t i = 0; i < bins.size(); ++i) {
    const auto& b = bins[i];
    std::string at = "curve: bins[" + std::to_string(i) + "]";
    if (!(b.t_prime_ps > 0)) throw IntegrityError(at + ".t_prime_ps must be > 0");
    if (b.d_fwhm_ps < 0) throw IntegrityError(at + ".d_fwhm_ps must be >= 0");
    if (b.n_samples < min_samples)
      throw IntegrityError(at + ".n_samples below min_samples");
    if (i > 0 && !(b.t_prime_ps > bins[i - 1].t_prime_ps))
      throw IntegrityError(at + ".t_prime_ps not strictly ascending");
  }
}

} // namespace tw
