#include "timewalk/calib.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "timewalk/metrics.hpp"

namespace tw::calib {

using nlohmann::json;

PairExtraction extract_pairs(const TagStream& tags,
                             const clock::ClockModel& model) {
  if (tags.tags.size() != model.size())
    throw IntegrityError("extract_pairs: clock model does not match stream");
  PairExtraction out;
  if (model.size() < 2) return out;
  out.pairs.reserve(model.size() - 1);
  const double period = model.period_ps;
  for (size_t k = 1; k < model.size(); ++k) {
    int64_t n = model.tick[k] - model.tick[k - 1];
    if (n == 0) {
      ++out.dropped_same_tick;
      continue;
    }
    out.pairs.push_back(
        {n, static_cast<double>(n) * period, model.residual_ps[k]});
  }
  return out;
}

CurveBuild build_curve(std::span<const PairRecord> pairs,
                       double laser_period_ps, const CurveConfig& cfg) {
  if (!(laser_period_ps > 0))
    throw ConfigError("build_curve: laser period must be > 0");
  if (!(cfg.bin_width_ps > 0) || cfg.bin_width_ps >= laser_period_ps)
    throw ConfigError("build_curve: bin width must be in (0, period)");
  if (cfg.min_samples == 0)
    throw ConfigError("build_curve: min_samples must be >= 1");
  if (pairs.empty()) throw StatsError("build_curve: no pairs");

  const double period = laser_period_ps;
  const auto max_n = static_cast<int64_t>(cfg.max_tprime_ps / period);

  // Pass 1: population per separation.
  std::map<int64_t, uint64_t> counts;
  for (const auto& p : pairs) {
    if (p.n >= 1 && p.n <= max_n) ++counts[p.n];
  }
  int64_t best_n = 0;
  uint64_t best_count = 0;
  std::map<int64_t, DelayHistogram> hists;
  for (const auto& [n, c] : counts) {
    if (c > best_count) { best_count = c; best_n = n; }
    if (c >= cfg.min_samples) hists.emplace(n, DelayHistogram());
  }
  if (hists.empty()) {
    throw StatsError("insufficient statistics: best populated separation n=" +
                     std::to_string(best_n) + " has " +
                     std::to_string(best_count) + " samples, need " +
                     std::to_string(cfg.min_samples));
  }

  // Pass 2: per-separation delay histograms over (-T/2, +T/2].
  const double origin = -period / 2.0;
  const auto nbins =
      static_cast<size_t>(std::ceil(period / cfg.bin_width_ps));
  for (auto& [n, h] : hists) h = DelayHistogram(cfg.bin_width_ps, origin, nbins);
  for (const auto& p : pairs) {
    auto it = hists.find(p.n);
    if (it != hists.end()) it->second.add(p.d_ps);
  }

  CurveBuild out;
  out.curve.laser_period_ps = period;
  out.curve.min_samples = cfg.min_samples;

  const size_t edge = static_cast<size_t>(0.05 * static_cast<double>(nbins));
  bool wrap_risk = false;
  for (const auto& [n, h] : hists) {
    CalibrationBin bin;
    bin.t_prime_ps = static_cast<double>(n) * period;
    bin.d_med_ps = h.median();
    bin.d_fwhm_ps = metrics::width_at_fraction(h, 0.5);
    bin.n_samples = h.total();
    out.curve.bins.push_back(bin);

    if (edge > 0 && !wrap_risk) {
      uint64_t outer = 0;
      for (size_t i = 0; i < edge; ++i)
        outer += h.counts[i] + h.counts[nbins - 1 - i];
      if (static_cast<double>(outer) > 0.01 * static_cast<double>(h.total())) {
        wrap_risk = true;
        out.warnings.push_back(
            "wrap risk: separation n=" + std::to_string(n) + " has >1% of its "
            "delay mass in the outermost 5% of the (-T/2, T/2] window");
      }
    }
  }

  // Zero reference: bins far out on the t' axis, where the detector has fully
  // recovered, define the constant latency to subtract.
  double baseline_sum = 0.0;
  size_t baseline_count = 0;
  for (const auto& b : out.curve.bins) {
    if (b.t_prime_ps >= cfg.baseline_tprime_ps) {
      baseline_sum += b.d_med_ps;
      ++baseline_count;
    }
  }
  if (baseline_count == 0) {
    throw StatsError("no baseline region: no retained bin has t' >= " +
                     std::to_string(cfg.baseline_tprime_ps) + " ps");
  }
  out.curve.baseline_ps = baseline_sum / static_cast<double>(baseline_count);
  for (auto& b : out.curve.bins) b.d_med_ps -= out.curve.baseline_ps;

  out.curve.validate();
  return out;
}

CalibrationCurve load_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open curve file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("curve: " + path.string() + ": " + e.what());
  }

  auto need = [&](const json& obj, const char* key, const std::string& at) -> const json& {
    if (!obj.contains(key)) throw FormatError("curve: missing " + at + key);
    return obj.at(key);
  };
  auto need_num = [&](const json& obj, const char* key, const std::string& at) {
    const json& v = need(obj, key, at);
    if (!v.is_number()) throw FormatError("curve: " + at + key + " must be a number");
    return v.get<double>();
  };

  if (!j.is_object()) throw FormatError("curve: top level must be an object");
  double version = need_num(j, "version", "");
  if (version != 1) throw FormatError("curve: unsupported version");

  CalibrationCurve curve;
  curve.laser_period_ps = need_num(j, "laser_period_ps", "");
  curve.baseline_ps = need_num(j, "baseline_ps", "");
  curve.min_samples = static_cast<uint64_t>(need_num(j, "min_samples", ""));
  const json& bins = need(j, "bins", "");
  if (!bins.is_array()) throw FormatError("curve: bins must be an array");
  for (size_t i = 0; i < bins.size(); ++i) {
    std::string at = "bins[" + std::to_string(i) + "].";
    const json& b = bins.at(i);
    CalibrationBin bin;
    bin.t_prime_ps = need_num(b, "t_prime_ps", at);
    bin.d_med_ps = need_num(b, "d_med_ps", at);
    bin.d_fwhm_ps = need_num(b, "d_fwhm_ps", at);
    bin.n_samples = static_cast<uint64_t>(need_num(b, "n_samples", at));
    curve.bins.push_back(bin);
  }
  try {
    curve.validate();
  } catch (const IntegrityError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return curve;
}

void save_curve(const CalibrationCurve& curve,
                const std::filesystem::path& path) {
  curve.validate();
  json j;
  j["version"] = 1;
  j["laser_period_ps"] = curve.laser_period_ps;
  j["baseline_ps"] = curve.baseline_ps;
  j["min_samples"] = curve.min_samples;
  json bins = json::array();
  for (const auto& b : curve.bins) {
    bins.push_back({{"t_prime_ps", b.t_prime_ps},
                    {"d_med_ps", b.d_med_ps},
                    {"d_fwhm_ps", b.d_fwhm_ps},
                    {"n_samples", b.n_samples}});
  }
  j["bins"] = std::move(bins);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

} // namespace tw::calib
