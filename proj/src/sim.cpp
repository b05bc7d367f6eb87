#include "timewalk/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>

#include <json.hpp>

#include "timewalk/rng.hpp"

namespace tw::sim {

using nlohmann::json;

PhotonTimes generate_photons(const LaserConfig& laser, uint64_t seed) {
  laser.validate();
  PhotonTimes out;
  out.laser = laser;

  const double p = 1.0 - std::exp(-laser.mean_photon_number);
  const double period = laser.period_ps;
  const double duration = static_cast<double>(laser.duration_ps);

  Rng rng(seed);
  // Geometric gaps between occupied pulses: O(photons), exact Bernoulli
  // thinning of the pulse train.
  uint64_t k = rng.geometric_failures(p);
  for (;;) {
    double t = laser.phase_ps + static_cast<double>(k) * period;
    if (t >= duration) break;
    out.times_ps.push_back(std::llround(t));
    k += 1 + rng.geometric_failures(p);
  }
  return out;
}

double recovered_fraction(double dt_ps, const DetectorConfig& det) {
  if (!(dt_ps > 0)) return 0.0;
  return 1.0 - std::exp(-dt_ps / det.tau_bias_ps);
}

double full_reset_latency_ps(const DetectorConfig& det) {
  return det.rise_time_ps * det.threshold_mv / det.pulse_height_mv;
}

std::optional<double> analytic_walk(double dt_ps, const DetectorConfig& det) {
  double amp = det.pulse_height_mv * recovered_fraction(dt_ps, det);
  if (amp <= det.threshold_mv) return std::nullopt;
  return det.rise_time_ps * det.threshold_mv *
         (1.0 / amp - 1.0 / det.pulse_height_mv);
}

double min_trigger_gap_ps(const DetectorConfig& det) {
  return -det.tau_bias_ps *
         std::log(1.0 - det.threshold_mv / det.pulse_height_mv);
}

double filtered_pulse_mv(double t_since_start_ps, double amplitude_mv,
                         const DetectorConfig& det) {
  const double t = t_since_start_ps;
  if (t <= 0 || amplitude_mv == 0) return 0.0;
  const double rise = det.rise_time_ps;
  const double tau = det.tau_rf_ps;

  if (det.highpass_cuton_hz <= 0) {
    if (t <= rise) return amplitude_mv * t / rise;
    return amplitude_mv * std::exp(-(t - rise) / tau);
  }

  // Single-pole high-pass: y = v - w, w' = (v - w) * a, a = 2*pi*f_c.
  const double a = 2.0 * M_PI * det.highpass_cuton_hz * 1e-12; // per ps
  const double slope = amplitude_mv / rise;
  if (t <= rise) {
    return slope / a * (1.0 - std::exp(-a * t));
  }
  const double y_rise = slope / a * (1.0 - std::exp(-a * rise));
  const double w_rise = amplitude_mv - y_rise;
  const double u = t - rise;
  const double b = 1.0 / tau;
  if (std::abs(a - b) > 1e-12 * a) {
    return -amplitude_mv * b / (a - b) * std::exp(-b * u) +
           (a * amplitude_mv / (a - b) - w_rise) * std::exp(-a * u);
  }
  // Degenerate pole (f_c == 1 / (2*pi*tau_rf)).
  return (amplitude_mv - w_rise - a * amplitude_mv * u) * std::exp(-a * u);
}

double undershoot_shift_ps(double dt_ps, double prev_amplitude_mv,
                           const DetectorConfig& det) {
  if (det.highpass_cuton_hz <= 0 || !(dt_ps > 0)) return 0.0;
  double amp = det.pulse_height_mv * recovered_fraction(dt_ps, det);
  if (amp <= 0) return 0.0;
  double tail = filtered_pulse_mv(dt_ps, prev_amplitude_mv, det);
  return -det.rise_time_ps * tail / amp;
}

DetectResult detect_detailed(const PhotonTimes& photons,
                             const DetectorConfig& det, uint64_t seed,
                             bool record_pulses) {
  det.validate();
  DetectResult res;
  res.tags.channel_count = 1;
  res.stats.photons = photons.times_ps.size();

  Rng rng(seed);
  const double a_max = det.pulse_height_mv;
  const double v_th = det.threshold_mv;
  const double rise = det.rise_time_ps;
  const double sigma = det.intrinsic_jitter_sigma_ps;
  const bool use_tail = det.highpass_cuton_hz > 0;

  bool have_prev = false;
  double t_prev = 0.0;      // time of last absorbed photon
  double amp_prev = 0.0;    // its pulse amplitude
  double holdoff_end = -std::numeric_limits<double>::infinity();

  std::vector<int64_t> times;
  times.reserve(photons.times_ps.size() / 4 + 16);

  for (int64_t tp : photons.times_ps) {
    double t = static_cast<double>(tp);
    if (det.holdoff_enabled && t < holdoff_end) {
      ++res.stats.held_off; // comparator still busy; leaves no trace
      continue;
    }

    double r = have_prev ? recovered_fraction(t - t_prev, det) : 1.0;
    double eta = det.efficiency_max * std::pow(r, det.efficiency_exponent);
    if (rng.uniform() >= eta) {
      ++res.stats.not_absorbed;
      continue;
    }

    // Absorption: the nanowire fires and the recovery clock restarts whether
    // or not the comparator sees the pulse.
    double amp = a_max * r;
    double tail = (use_tail && have_prev)
                      ? filtered_pulse_mv(t - t_prev, amp_prev, det)
                      : 0.0;
    t_prev = t;
    amp_prev = amp;
    have_prev = true;
    if (record_pulses) res.pulses.push_back({tp, amp});

    if (amp <= v_th - tail) {
      ++res.stats.sub_threshold;
      continue;
    }

    double latency = rise * (v_th - tail) / amp;
    double emit = t + latency;
    if (sigma > 0) emit += sigma * rng.normal();
    times.push_back(std::llround(emit));
    ++res.stats.emitted;
    holdoff_end = t + rise + det.tau_rf_ps * std::log(amp / v_th);
  }

  std::sort(times.begin(), times.end());
  res.tags.tags.reserve(times.size());
  for (int64_t t : times) {
    if (t < 0) continue; // noise pushed a tag before the epoch; discard
    res.tags.tags.push_back({t, 0, TimeTag::kFlagSynthetic});
  }
  res.stats.emitted = res.tags.tags.size();
  return res;
}

TagStream detect(const PhotonTimes& photons, const DetectorConfig& det,
                 uint64_t seed) {
  return detect_detailed(photons, det, seed).tags;
}

WaveformTrace waveform_trace(std::span<const Pulse> pulses,
                             const DetectorConfig& det, int64_t t0_ps,
                             int64_t t1_ps, double sample_period_ps) {
  det.validate();
  if (!(sample_period_ps > 0))
    throw ConfigError("waveform sample period must be > 0");
  WaveformTrace trace;
  trace.sample_period_ps = sample_period_ps;
  trace.epoch_ps = t0_ps;
  if (t1_ps <= t0_ps) return trace;

  for (size_t i = 1; i < pulses.size(); ++i) {
    if (pulses[i].time_ps < pulses[i - 1].time_ps)
      throw IntegrityError("waveform_trace: pulses out of order");
  }

  // Contributions die off a few time constants past the rise; cap the lookback.
  double a = 2.0 * M_PI * det.highpass_cuton_hz * 1e-12;
  double horizon = det.rise_time_ps +
                   40.0 * std::max(det.tau_rf_ps, a > 0 ? 1.0 / a : 0.0);

  size_t n = static_cast<size_t>(
      std::ceil(static_cast<double>(t1_ps - t0_ps) / sample_period_ps));
  trace.samples_mv.assign(n, 0.0);

  size_t lo = 0;
  for (size_t s = 0; s < n; ++s) {
    double ts = static_cast<double>(t0_ps) + sample_period_ps * static_cast<double>(s);
    while (lo < pulses.size() &&
           static_cast<double>(pulses[lo].time_ps) < ts - horizon)
      ++lo;
    double v = 0.0;
    for (size_t i = lo; i < pulses.size(); ++i) {
      double dt = ts - static_cast<double>(pulses[i].time_ps);
      if (dt <= 0) break;
      v += filtered_pulse_mv(dt, pulses[i].amplitude_mv, det);
    }
    trace.samples_mv[s] = v;
  }
  return trace;
}

double mu_for_incident_rate(double rate_cps, double period_ps) {
  if (!(rate_cps > 0)) throw ConfigError("incident rate must be > 0");
  double p = rate_cps * period_ps * 1e-12; // photons per pulse
  if (p >= 1.0 - std::exp(-1.0) + 1e-12) {
    // mu would reach 1; the at-most-one-photon-per-pulse source can't go higher.
    throw ConfigError("incident rate " + std::to_string(rate_cps) +
                      " cps exceeds the pulse train capacity");
  }
  return -std::log1p(-p);
}

McrResult mcr_sweep(const LaserConfig& base, const DetectorConfig& det,
                    std::span<const double> incident_rates_cps, uint64_t seed) {
  if (incident_rates_cps.size() < 2)
    throw ConfigError("mcr_sweep needs at least 2 rates");
  for (size_t i = 0; i < incident_rates_cps.size(); ++i) {
    if (!(incident_rates_cps[i] > 0))
      throw ConfigError("mcr_sweep: rates must be positive");
    if (i > 0 && incident_rates_cps[i] <= incident_rates_cps[i - 1])
      throw ConfigError("mcr_sweep: rates must be ascending");
  }
  det.validate();

  auto run_one = [&](size_t i) {
    LaserConfig laser = base;
    laser.mean_photon_number =
        mu_for_incident_rate(incident_rates_cps[i], base.period_ps);
    PhotonTimes ph = generate_photons(laser, seed + i);
    TagStream tags = detect(ph, det, seed * 7919 + i);
    double dur_s = static_cast<double>(laser.duration_ps) * 1e-12;
    RatePoint pt;
    pt.incident_cps = static_cast<double>(ph.times_ps.size()) / dur_s;
    pt.detected_cps = static_cast<double>(tags.tags.size()) / dur_s;
    return pt;
  };

  // Rates are independent given their seeds; farm them out.
  std::vector<std::future<RatePoint>> futs;
  futs.reserve(incident_rates_cps.size());
  for (size_t i = 0; i < incident_rates_cps.size(); ++i)
    futs.push_back(std::async(std::launch::async, run_one, i));

  McrResult res;
  res.points.reserve(futs.size());
  for (auto& f : futs) res.points.push_back(f.get());

  double eff0 = res.points[0].detected_cps / res.points[0].incident_cps;
  for (auto& pt : res.points)
    pt.normalized_efficiency = (pt.detected_cps / pt.incident_cps) / eff0;

  res.three_db_detected_cps = std::numeric_limits<double>::quiet_NaN();
  for (size_t i = 1; i < res.points.size(); ++i) {
    if (res.points[i].normalized_efficiency <= 0.5) {
      const auto& a2 = res.points[i - 1];
      const auto& b2 = res.points[i];
      double f = (0.5 - a2.normalized_efficiency) /
                 (b2.normalized_efficiency - a2.normalized_efficiency);
      res.three_db_detected_cps =
          a2.detected_cps + f * (b2.detected_cps - a2.detected_cps);
      res.crossed_3db = true;
      break;
    }
  }
  return res;
}

namespace {

double need_number(const json& j, const std::string& ctx, const char* key) {
  if (!j.contains(key))
    throw FormatError("config: missing " + ctx + "." + key);
  const auto& v = j.at(key);
  if (!v.is_number())
    throw FormatError("config: " + ctx + "." + key + " must be a number");
  return v.get<double>();
}

void reject_unknown(const json& j, const std::string& ctx,
                    std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) { ok = true; break; }
    if (!ok) throw FormatError("config: unknown key " + ctx + "." + it.key());
  }
}

} // namespace

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("config: " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("config: top level must be an object");
  reject_unknown(j, "", {"laser", "detector"});
  if (!j.contains("laser") || !j.contains("detector"))
    throw FormatError("config: needs 'laser' and 'detector' objects");

  const json& jl = j.at("laser");
  reject_unknown(jl, "laser",
                 {"period_ps", "mean_photon_number", "duration_ps", "phase_ps"});
  SimConfig cfg;
  cfg.laser.period_ps = need_number(jl, "laser", "period_ps");
  cfg.laser.mean_photon_number = need_number(jl, "laser", "mean_photon_number");
  cfg.laser.duration_ps = static_cast<int64_t>(need_number(jl, "laser", "duration_ps"));
  cfg.laser.phase_ps = jl.contains("phase_ps") ? need_number(jl, "laser", "phase_ps") : 0.0;

  const json& jd = j.at("detector");
  reject_unknown(jd, "detector",
                 {"tau_bias_ps", "tau_rf_ps", "rise_time_ps", "pulse_height_mv",
                  "threshold_mv", "highpass_cuton_hz",
                  "intrinsic_jitter_sigma_ps", "efficiency_max",
                  "efficiency_exponent", "holdoff_enabled"});
  cfg.detector.tau_bias_ps = need_number(jd, "detector", "tau_bias_ps");
  cfg.detector.tau_rf_ps = need_number(jd, "detector", "tau_rf_ps");
  cfg.detector.rise_time_ps = need_number(jd, "detector", "rise_time_ps");
  cfg.detector.pulse_height_mv = need_number(jd, "detector", "pulse_height_mv");
  cfg.detector.threshold_mv = need_number(jd, "detector", "threshold_mv");
  cfg.detector.highpass_cuton_hz = need_number(jd, "detector", "highpass_cuton_hz");
  cfg.detector.intrinsic_jitter_sigma_ps =
      need_number(jd, "detector", "intrinsic_jitter_sigma_ps");
  cfg.detector.efficiency_max = need_number(jd, "detector", "efficiency_max");
  cfg.detector.efficiency_exponent =
      need_number(jd, "detector", "efficiency_exponent");
  if (jd.contains("holdoff_enabled")) {
    if (!jd.at("holdoff_enabled").is_boolean())
      throw FormatError("config: detector.holdoff_enabled must be a boolean");
    cfg.detector.holdoff_enabled = jd.at("holdoff_enabled").get<bool>();
  }

  cfg.laser.validate();
  cfg.detector.validate();
  return cfg;
}

void save_sim_config(const SimConfig& cfg, const std::filesystem::path& path) {
  json j;
  j["laser"] = {{"period_ps", cfg.laser.period_ps},
                {"mean_photon_number", cfg.laser.mean_photon_number},
                {"duration_ps", cfg.laser.duration_ps},
                {"phase_ps", cfg.laser.phase_ps}};
  j["detector"] = {{"tau_bias_ps", cfg.detector.tau_bias_ps},
                   {"tau_rf_ps", cfg.detector.tau_rf_ps},
                   {"rise_time_ps", cfg.detector.rise_time_ps},
                   {"pulse_height_mv", cfg.detector.pulse_height_mv},
                   {"threshold_mv", cfg.detector.threshold_mv},
                   {"highpass_cuton_hz", cfg.detector.highpass_cuton_hz},
                   {"intrinsic_jitter_sigma_ps", cfg.detector.intrinsic_jitter_sigma_ps},
                   {"efficiency_max", cfg.detector.efficiency_max},
                   {"efficiency_exponent", cfg.detector.efficiency_exponent},
                   {"holdoff_enabled", cfg.detector.holdoff_enabled}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

} // namespace tw::sim
