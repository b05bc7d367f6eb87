#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "timewalk/types.hpp"

namespace tw::sim {

/// Photon arrival times on the rounded pulse grid phase + k*period, at most
/// one photon per laser pulse.
struct PhotonTimes {
  LaserConfig laser;
  std::vector<int64_t> times_ps;
};

/// Thins the pulse train: pulse k carries a photon with independent
/// probability p = 1 - exp(-mean_photon_number). Deterministic per seed.
PhotonTimes generate_photons(const LaserConfig& laser, uint64_t seed);

/// Bias recovery fraction r(dt) = 1 - exp(-dt / tau_bias), in [0, 1).
double recovered_fraction(double dt_ps, const DetectorConfig& det);

/// Comparator latency of a fully recovered pulse: rise_time * V_th / A_max.
double full_reset_latency_ps(const DetectorConfig& det);

/// Extra comparator latency for a pulse following a detection dt_ps earlier,
/// relative to a fully reset pulse. With A(dt) = A_max * r(dt):
///   walk(dt) = rise_time * V_th * (1/A(dt) - 1/A_max)   if A(dt) > V_th,
/// and no value ("no trigger") otherwise. Strictly decreasing, -> 0 as
/// dt -> infinity. The closed form is the oracle the calibration pipeline is
/// tested against.
std::optional<double> analytic_walk(double dt_ps, const DetectorConfig& det);

/// Smallest gap that still triggers: A(dt) > V_th, i.e.
/// dt > -tau_bias * ln(1 - V_th / A_max).
double min_trigger_gap_ps(const DetectorConfig& det);

/// Voltage of a single pulse (amplitude_mv, linear rise, exponential decay)
/// t_since_start_ps after its onset, after the readout high-pass at
/// highpass_cuton_hz. With highpass_cuton_hz == 0 this is the raw pulse.
double filtered_pulse_mv(double t_since_start_ps, double amplitude_mv,
                         const DetectorConfig& det);

/// Latency shift caused by starting the comparator edge on the previous
/// pulse's high-pass tail: -rise_time * u / A(dt) where u is the tail voltage
/// dt_ps after a pulse of prev_amplitude_mv. Zero when highpass_cuton_hz == 0.
double undershoot_shift_ps(double dt_ps, double prev_amplitude_mv,
                           const DetectorConfig& det);

/// One absorbed photon and the RF pulse it produced.
struct Pulse {
  int64_t time_ps = 0;
  double amplitude_mv = 0.0;
};

struct DetectStats {
  uint64_t photons = 0;
  uint64_t held_off = 0;     // ignored: comparator still above threshold
  uint64_t not_absorbed = 0; // efficiency draw failed
  uint64_t sub_threshold = 0;// absorbed but pulse too small to trigger
  uint64_t emitted = 0;
};

struct DetectResult {
  TagStream tags;
  DetectStats stats;
  std::vector<Pulse> pulses; // filled only when record_pulses is set
};

/// Full detector + readout chain pass over a photon sequence.
///
/// Sequential state is the last *absorbed* photon (bias reset source and
/// undershoot tail source) and the comparator hold-off deadline from the last
/// emitted pulse. Absorbed photons whose pulse stays at or below threshold
/// are dropped but still reset the recovery clock. Emitted tag times are
/// photon time + rise_time*(V_th - u)/A + N(0, sigma), rounded to integer
/// picoseconds; output is sorted and flagged synthetic.
DetectResult detect_detailed(const PhotonTimes& photons,
                             const DetectorConfig& det, uint64_t seed,
                             bool record_pulses = false);

TagStream detect(const PhotonTimes& photons, const DetectorConfig& det,
                 uint64_t seed);

struct WaveformTrace {
  double sample_period_ps = 0.0;
  int64_t epoch_ps = 0;
  std::vector<double> samples_mv;
};

/// Superposition of per-pulse filtered waveforms sampled over
/// [t0_ps, t1_ps) every sample_period_ps. Empty span gives an empty trace.
WaveformTrace waveform_trace(std::span<const Pulse> pulses,
                             const DetectorConfig& det, int64_t t0_ps,
                             int64_t t1_ps, double sample_period_ps);

struct RatePoint {
  double incident_cps = 0.0;
  double detected_cps = 0.0;
  double normalized_efficiency = 0.0;
};

struct McrResult {
  std::vector<RatePoint> points;
  /// Detected rate where normalized efficiency crosses 0.5 (linear
  /// interpolation between sweep points); NaN if the sweep never crosses.
  double three_db_detected_cps = 0.0;
  bool crossed_3db = false;
};

/// Runs detect at each incident photon rate (ascending, >= 2 entries);
/// normalized efficiency is detected/incident scaled so the lowest-rate point
/// is 1. Rates run in parallel with per-rate seeds derived from `seed`.
McrResult mcr_sweep(const LaserConfig& base, const DetectorConfig& det,
                    std::span<const double> incident_rates_cps, uint64_t seed);

/// Mean photon number that makes the pulse train deliver the requested
/// incident photon rate: p = rate * period, mu = -ln(1 - p).
double mu_for_incident_rate(double rate_cps, double period_ps);

struct SimConfig {
  LaserConfig laser;
  DetectorConfig detector;
};

/// JSON config with "laser" and "detector" objects mirroring the config
/// fields; unknown keys are rejected.
SimConfig load_sim_config(const std::filesystem::path& path);
void save_sim_config(const SimConfig& cfg, const std::filesystem::path& path);

} // namespace tw::sim
