// timewalk: simulate, calibrate, correct, filter, analyze, sweep.
//
// Exit codes: 0 ok, 1 I/O or file format, 2 configuration, 3 insufficient
// statistics, 4 data integrity.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <cmath>
#include <json.hpp>

#include "timewalk/calib.hpp"
#include "timewalk/clock.hpp"
#include "timewalk/correct.hpp"
#include "timewalk/errors.hpp"
#include "timewalk/kernels.hpp"
#include "timewalk/metrics.hpp"
#include "timewalk/sim.hpp"
#include "timewalk/tagfile.hpp"

namespace {

using nlohmann::json;

struct ClockFlags {
  double nominal_period_ps = 0.0;
  double pll_kp = 0.01;
  double pll_ki = 1e-4;
  std::optional<double> ideal_clock_phase_ps;

  void add_to(CLI::App* cmd, bool period_required = true) {
    auto* p = cmd->add_option("--nominal-period-ps", nominal_period_ps,
                              "Nominal laser period [ps]");
    if (period_required) p->required();
    cmd->add_option("--pll-kp", pll_kp, "PLL phase gain");
    cmd->add_option("--pll-ki", pll_ki, "PLL period gain");
    cmd->add_option("--ideal-clock-phase-ps", ideal_clock_phase_ps,
                    "Bypass the PLL with a fixed clock at this phase [ps]");
  }

  tw::clock::ClockSpec spec() const {
    tw::clock::ClockSpec s;
    s.nominal_period_ps = nominal_period_ps;
    s.gains = {pll_kp, pll_ki};
    s.ideal_phase_ps = ideal_clock_phase_ps;
    return s;
  }
};

void write_and_verify_tags(const tw::TagStream& stream,
                           const std::filesystem::path& path) {
  tw::write_tags(stream, path);
  tw::TagStream back = tw::read_tags(path); // self round-trip check
  if (!(back == stream))
    throw tw::IoError("round-trip verification failed for " + path.string());
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 uint64_t seed, std::optional<double> photon_rate,
                 std::optional<double> duration_ps) {
  tw::sim::SimConfig cfg = tw::sim::load_sim_config(config_path);
  if (photon_rate) {
    cfg.laser.mean_photon_number =
        tw::sim::mu_for_incident_rate(*photon_rate, cfg.laser.period_ps);
  }
  if (duration_ps) cfg.laser.duration_ps = static_cast<int64_t>(*duration_ps);
  cfg.laser.validate();

  tw::sim::PhotonTimes photons = tw::sim::generate_photons(cfg.laser, seed);
  tw::sim::DetectResult det = tw::sim::detect_detailed(photons, cfg.detector, seed ^ 0x9e3779b97f4a7c15ull);
  write_and_verify_tags(det.tags, out_path);

  double dur_s = static_cast<double>(cfg.laser.duration_ps) * 1e-12;
  std::printf("photons generated: %zu\n", photons.times_ps.size());
  std::printf("tags emitted:      %zu\n", det.tags.tags.size());
  std::printf("held off: %llu  not absorbed: %llu  sub-threshold: %llu\n",
              static_cast<unsigned long long>(det.stats.held_off),
              static_cast<unsigned long long>(det.stats.not_absorbed),
              static_cast<unsigned long long>(det.stats.sub_threshold));
  std::printf("detected rate:     %.6g cps\n",
              static_cast<double>(det.tags.tags.size()) / dur_s);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int run_calibrate(const std::string& tags_path, const std::string& out_path,
                  const ClockFlags& clk, tw::calib::CurveConfig ccfg) {
  tw::TagStream tags = tw::read_tags(tags_path);
  tw::clock::ClockModel model = tw::clock::recover(tags, clk.spec());
  tw::calib::PairExtraction pairs = tw::calib::extract_pairs(tags, model);
  tw::calib::CurveBuild build =
      tw::calib::build_curve(pairs.pairs, model.period_ps, ccfg);

  tw::calib::save_curve(build.curve, out_path);
  tw::CalibrationCurve back = tw::calib::load_curve(out_path);
  if (back.bins.size() != build.curve.bins.size())
    throw tw::IoError("round-trip verification failed for " + out_path);

  std::printf("tags: %zu  pairs: %zu (dropped same-tick: %llu)\n",
              tags.tags.size(), pairs.pairs.size(),
              static_cast<unsigned long long>(pairs.dropped_same_tick));
  std::printf("locked period: %.6f ps\n", model.period_ps);
  std::printf("curve bins: %zu  baseline: %.3f ps\n", build.curve.bins.size(),
              build.curve.baseline_ps);
  for (const auto& w : build.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int run_correct(const std::string& tags_path, const std::string& curve_path,
                const std::string& out_path) {
  tw::TagStream tags = tw::read_tags(tags_path);
  tw::CalibrationCurve curve = tw::calib::load_curve(curve_path);
  tw::correct::CorrectResult res = tw::correct::correct_stream(tags, curve);
  write_and_verify_tags(res.stream, out_path);
  std::printf("corrected %zu tags\n", res.stream.tags.size());
  if (res.resort_count > 0)
    std::fprintf(stderr, "warning: %llu ordering inversions re-sorted\n",
                 static_cast<unsigned long long>(res.resort_count));
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int run_filter(const std::string& tags_path, int64_t deadtime_ps,
               const std::string& out_path) {
  tw::TagStream tags = tw::read_tags(tags_path);
  tw::TagStream kept = tw::correct::deadtime_filter(tags, deadtime_ps);
  write_and_verify_tags(kept, out_path);
  std::printf("kept %zu of %zu tags (dead time %lld ps)\n", kept.tags.size(),
              tags.tags.size(), static_cast<long long>(deadtime_ps));
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

json stream_report_json(const tw::metrics::StreamReport& r) {
  return {{"count_rate_cps", r.count_rate_cps},
          {"fwhm_ps", r.widths.fwhm_ps},
          {"fw10m_ps", r.widths.fw10m_ps},
          {"fw1m_ps", r.widths.fw1m_ps}};
}

int run_analyze(const std::string& before_path,
                const std::optional<std::string>& after_path,
                const ClockFlags& clk, double bin_width_ps,
                const std::string& out_prefix) {
  tw::TagStream before = tw::read_tags(before_path);
  tw::clock::ClockSpec spec = clk.spec();

  json report;
  {
    tw::clock::ClockModel model = tw::clock::recover(before, spec);
    tw::DelayHistogram h = tw::metrics::build_irf(before, model, bin_width_ps);
    tw::metrics::save_histogram_csv(h, out_prefix + "_before.csv");
    tw::metrics::StreamReport r{tw::metrics::count_rate_cps(before),
                                tw::metrics::width_metrics(h)};
    report["before"] = stream_report_json(r);
    std::printf("before: rate %.6g cps  fwhm %.2f ps  fw10m %.2f ps  fw1m %.2f ps\n",
                r.count_rate_cps, r.widths.fwhm_ps, r.widths.fw10m_ps,
                r.widths.fw1m_ps);
  }
  if (after_path) {
    tw::TagStream after = tw::read_tags(*after_path);
    tw::metrics::CompareReport cmp =
        tw::metrics::compare_widths(before, after, spec, bin_width_ps);
    tw::clock::ClockModel model = tw::clock::recover(after, spec);
    tw::DelayHistogram h = tw::metrics::build_irf(after, model, bin_width_ps);
    tw::metrics::save_histogram_csv(h, out_prefix + "_after.csv");
    report["after"] = stream_report_json(cmp.after);
    report["ratio"] = {{"fwhm", cmp.fwhm_ratio},
                       {"fw10m", cmp.fw10m_ratio},
                       {"fw1m", cmp.fw1m_ratio}};
    std::printf("after:  rate %.6g cps  fwhm %.2f ps  fw10m %.2f ps  fw1m %.2f ps\n",
                cmp.after.count_rate_cps, cmp.after.widths.fwhm_ps,
                cmp.after.widths.fw10m_ps, cmp.after.widths.fw1m_ps);
    std::printf("ratios: fwhm %.3f  fw10m %.3f  fw1m %.3f\n", cmp.fwhm_ratio,
                cmp.fw10m_ratio, cmp.fw1m_ratio);
  }

  std::string report_path = out_prefix + "_report.json";
  std::ofstream out(report_path);
  if (!out) throw tw::IoError("cannot open for writing: " + report_path);
  out << report.dump(2) << "\n";
  std::printf("wrote %s\n", report_path.c_str());
  return 0;
}

int run_sweep(const std::string& config_path, std::vector<double> rates,
              double rate_min, double rate_max, unsigned rate_points,
              int64_t deadtime_ps, uint64_t seed, const std::string& out_path) {
  tw::sim::SimConfig cfg = tw::sim::load_sim_config(config_path);
  if (rates.empty()) {
    if (!(rate_min > 0) || !(rate_max > rate_min) || rate_points < 2)
      throw tw::ConfigError("sweep needs --rates or a valid "
                            "--rate-min/--rate-max/--rate-points grid");
    for (unsigned i = 0; i < rate_points; ++i) {
      double f = static_cast<double>(i) / (rate_points - 1);
      rates.push_back(rate_min * std::pow(rate_max / rate_min, f));
    }
  }

  tw::sim::McrResult mcr =
      tw::sim::mcr_sweep(cfg.laser, cfg.detector, rates, seed);

  // Usable rate: re-run each point and apply the software dead time.
  std::ofstream out(out_path);
  if (!out) throw tw::IoError("cannot open for writing: " + out_path);
  out << "incident_rate_cps,detected_rate_cps,usable_rate_cps,normalized_efficiency\n";
  double dur_s = static_cast<double>(cfg.laser.duration_ps) * 1e-12;
  for (size_t i = 0; i < rates.size(); ++i) {
    tw::LaserConfig laser = cfg.laser;
    laser.mean_photon_number =
        tw::sim::mu_for_incident_rate(rates[i], laser.period_ps);
    tw::sim::PhotonTimes ph = tw::sim::generate_photons(laser, seed + i);
    tw::TagStream tags = tw::sim::detect(ph, cfg.detector, seed * 7919 + i);
    tw::TagStream kept = tw::correct::deadtime_filter(tags, deadtime_ps);
    double usable = static_cast<double>(kept.tags.size()) / dur_s;
    char line[160];
    snprintf(line, sizeof(line), "%.8g,%.8g,%.8g,%.8g\n",
             mcr.points[i].incident_cps, mcr.points[i].detected_cps, usable,
             mcr.points[i].normalized_efficiency);
    out << line;
  }
  if (!out) throw tw::IoError("write failed: " + out_path);

  if (mcr.crossed_3db)
    std::printf("3 dB point: %.6g cps detected\n", mcr.three_db_detected_cps);
  else
    std::printf("3 dB point not reached within the swept rates\n");
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-tag toolkit: detector simulation, time-walk calibration "
               "and streaming correction"};
  app.require_subcommand(1);

  std::string kernel_backend = "auto";
  app.add_option("--kernel", kernel_backend,
                 "Force kernel backend: auto|scalar|avx2");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic tag file");
  std::string sim_config, sim_out;
  uint64_t sim_seed = 0;
  std::optional<double> sim_rate, sim_duration;
  sim_cmd->add_option("config", sim_config, "Simulator config (JSON)")->required();
  sim_cmd->add_option("--out", sim_out, "Output tag file")->required();
  sim_cmd->add_option("--seed", sim_seed, "RNG seed (required; no hidden entropy)")
      ->required();
  sim_cmd->add_option("--photon-rate", sim_rate,
                      "Override incident photon rate [cps]");
  sim_cmd->add_option("--duration-ps", sim_duration, "Override duration [ps]");

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Build a delay curve from a tag file");
  std::string cal_tags, cal_out;
  ClockFlags cal_clk;
  tw::calib::CurveConfig ccfg;
  cal_cmd->add_option("--tags", cal_tags, "Input tag file")->required();
  cal_cmd->add_option("--out", cal_out, "Output curve file (JSON)")->required();
  cal_clk.add_to(cal_cmd);
  cal_cmd->add_option("--bin-width-ps", ccfg.bin_width_ps, "Delay histogram bin width");
  cal_cmd->add_option("--min-samples", ccfg.min_samples, "Bin admission threshold");
  cal_cmd->add_option("--baseline-tprime-ps", ccfg.baseline_tprime_ps,
                      "Start of the zero-reference region");
  cal_cmd->add_option("--max-tprime-ps", ccfg.max_tprime_ps,
                      "Longest separation to calibrate");

  // correct
  auto* cor_cmd = app.add_subcommand("correct", "Apply a delay curve to a tag file");
  std::string cor_tags, cor_curve, cor_out;
  cor_cmd->add_option("--tags", cor_tags, "Input tag file")->required();
  cor_cmd->add_option("--curve", cor_curve, "Calibration curve file")->required();
  cor_cmd->add_option("--out", cor_out, "Output tag file")->required();

  // filter
  auto* fil_cmd = app.add_subcommand("filter", "Software dead-time filter");
  std::string fil_tags, fil_out;
  int64_t fil_deadtime = 0;
  fil_cmd->add_option("--tags", fil_tags, "Input tag file")->required();
  fil_cmd->add_option("--deadtime-ps", fil_deadtime, "Dead time [ps]")->required();
  fil_cmd->add_option("--out", fil_out, "Output tag file")->required();

  // analyze
  auto* ana_cmd = app.add_subcommand("analyze", "IRF histograms and width report");
  std::string ana_before, ana_prefix;
  std::optional<std::string> ana_after;
  ClockFlags ana_clk;
  double ana_bin_width = 1.0;
  ana_cmd->add_option("--before", ana_before, "Tag file (uncorrected)")->required();
  ana_cmd->add_option("--after", ana_after, "Tag file (corrected)");
  ana_cmd->add_option("--out-prefix", ana_prefix, "Output path prefix")->required();
  ana_clk.add_to(ana_cmd);
  ana_cmd->add_option("--bin-width-ps", ana_bin_width, "IRF bin width");

  // sweep
  auto* swp_cmd = app.add_subcommand("sweep", "Rate sweep: MCR and usable-rate curves");
  std::string swp_config, swp_out;
  std::vector<double> swp_rates;
  double swp_min = 0, swp_max = 0;
  unsigned swp_points = 0;
  int64_t swp_deadtime = 100000;
  uint64_t swp_seed = 0;
  swp_cmd->add_option("--config", swp_config, "Simulator config (JSON)")->required();
  swp_cmd->add_option("--rates", swp_rates, "Incident rates [cps], ascending")
      ->delimiter(',');
  swp_cmd->add_option("--rate-min", swp_min, "Log-grid start [cps]");
  swp_cmd->add_option("--rate-max", swp_max, "Log-grid end [cps]");
  swp_cmd->add_option("--rate-points", swp_points, "Log-grid size");
  swp_cmd->add_option("--deadtime-ps", swp_deadtime, "Dead time for the usable-rate column");
  swp_cmd->add_option("--seed", swp_seed, "RNG seed")->required();
  swp_cmd->add_option("--out", swp_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2; // bad flags are configuration errors
  }

  try {
    tw::kernels::set_backend(tw::kernels::parse_backend(kernel_backend));
    if (sim_cmd->parsed())
      return run_simulate(sim_config, sim_out, sim_seed, sim_rate, sim_duration);
    if (cal_cmd->parsed()) return run_calibrate(cal_tags, cal_out, cal_clk, ccfg);
    if (cor_cmd->parsed()) return run_correct(cor_tags, cor_curve, cor_out);
    if (fil_cmd->parsed()) return run_filter(fil_tags, fil_deadtime, fil_out);
    if (ana_cmd->parsed())
      return run_analyze(ana_before, ana_after, ana_clk, ana_bin_width, ana_prefix);
    if (swp_cmd->parsed())
      return run_sweep(swp_config, swp_rates, swp_min, swp_max, swp_points,
                       swp_deadtime, swp_seed, swp_out);
  } catch (const tw::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const tw::StatsError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const tw::IntegrityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const tw::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
