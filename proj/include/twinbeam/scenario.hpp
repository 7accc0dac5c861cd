// scenario.hpp — named experiment scenarios, parameter sweeps and CSV/JSON output.

#pragma once

#include "twinbeam/config.hpp"
#include "twinbeam/coupled_twin_beams.hpp"
#include "twinbeam/detection.hpp"
#include "twinbeam/fwm_source.hpp"
#include "twinbeam/noise_budget.hpp"
#include "twinbeam/spatial_coupling.hpp"
#include "twinbeam/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twinbeam {

/// Bad scenario name, parameter path or similar caller mistakes.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"snl",          "before_fiber",  "after_fiber_loss_only",
                                              "after_fiber_thermal", "budget_sweep", "roundtrip"};
  return names;
}

struct TraceSummary {
  std::string label;
  double band_average_db = 0.0;
};

struct ScenarioResult {
  std::string scenario;
  std::vector<NoiseTrace> traces;
  std::vector<TraceSummary> summary;  // one entry per trace, same order
  ExperimentConfig config;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  detail::OrderedJson extra = detail::OrderedJson::object();
};

struct SweepResult {
  std::string scenario;
  std::string param_path;
  std::vector<double> values;
  std::vector<ScenarioResult> points;
  std::string trend;  // of the first trace's band average across the sweep
};

// Photon energy at the configured wavelength.
inline double photon_flux_per_s(double power_uw, double wavelength_nm) {
  constexpr double h = 6.62607015e-34, c = 299792458.0;
  return power_uw * 1e-6 / (h * c / (wavelength_nm * 1e-9));
}

namespace detail {

inline std::vector<double> analysis_grid(const ExperimentConfig& c) {
  const double df = c.dsp.sample_rate_hz / static_cast<double>(c.dsp.segment_length);
  return uniform_grid(df, c.dsp.segment_length / 2);
}

inline double source_gain(const ExperimentConfig& c) { return gain_from_pump(c.pump_power_mw, c.gain_map); }

inline NoiseTrace source_trace(const ExperimentConfig& c) {
  const auto grid = analysis_grid(c);
  auto t = squeezing_spectrum(source_gain(c), grid, c.bandwidth_mhz * 1e6);
  t.label = "before_fiber";
  return t;
}

inline CouplingBudget budget_for(const ExperimentConfig& c, double epsilon) {
  return {c.eta_probe, c.eta_conj, epsilon, c.n_th.value_or(2.0 * source_gain(c) - 1.0)};
}

/// Applies the coupling budget bin by bin. Equal efficiencies use the closed
/// form; unequal ones go through the covariance-level loss channels.
inline NoiseTrace apply_budget(const NoiseTrace& source, const CouplingBudget& budget, std::string label) {
  NoiseTrace out{source.freqs_hz, {}, std::move(label)};
  out.noise_db.reserve(source.size());
  for (double db : source.noise_db) {
    const auto s0 = SqueezingLevel::from_db(db);
    out.noise_db.push_back(budget.is_symmetric() ? expected_squeezing(s0, budget).db()
                                                 : covariance_squeezing(s0, budget).db());
  }
  return out;
}

inline NoiseTrace analytic_trace(const ExperimentConfig& c, const std::string& name) {
  if (name == "before_fiber") return source_trace(c);
  if (name == "after_fiber_loss_only") return apply_budget(source_trace(c), budget_for(c, 0.0), name);
  if (name == "after_fiber_thermal") return apply_budget(source_trace(c), budget_for(c, c.epsilon), name);
  throw UsageError("no analytic trace named '" + name + "'");
}

inline std::string trend_of(const std::vector<double>& v) {
  if (v.size() < 2) return "n/a";
  bool up = true, down = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1]) up = false;
    if (v[i] > v[i - 1]) down = false;
  }
  if (up && down) return "constant";
  if (up) return "non-decreasing";
  if (down) return "non-increasing";
  return "non-monotonic";
}

inline std::string short_number(double v) { return format_double(v); }

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string trace_csv(const NoiseTrace& t) {
  std::string s = "freq_hz,noise_db\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    s += format_double(t.freqs_hz[i]);
    s += ',';
    s += format_double(t.noise_db[i]);
    s += '\n';
  }
  return s;
}

inline ScenarioResult roundtrip(const ExperimentConfig& c) {
  const auto band = c.analysis_band();
  const double gain = source_gain(c);
  auto target = analytic_trace(c, c.dsp.roundtrip_target);
  target.label = "roundtrip_target";

  // Photocurrents are synthesized at the detected flux; the SNL is calibrated
  // with the optical flux through the same detector.
  const double optical_flux = photon_flux_per_s(c.bright_power_uw, c.wavelength_nm);
  const double detected = c.detector.quantum_efficiency * optical_flux;
  if (!(detected > 0.0)) throw std::invalid_argument("roundtrip: detector efficiency must be > 0");
  const auto n = sample_count(c.dsp.sample_rate_hz, c.dsp.duration_s);

  WithElectronicNoise<PhotocurrentSynthesizer> source(
      PhotocurrentSynthesizer(target, to_db(2.0 * gain - 1.0), detected, detected, c.dsp.sample_rate_hz, c.rng_seed,
                              c.dsp.filter_taps),
      c.detector, 2.0 * detected, c.rng_seed);
  const auto signal_psd = difference_psd(source, n, c.dsp.welch());
  const auto snl_psd = calibrate_snl(2.0 * optical_flux, c.detector, c.dsp.sample_rate_hz, c.dsp.snl_duration_s,
                                     ~c.rng_seed, {0.0, c.dsp.welch()});
  auto report = squeezing_report(signal_psd, snl_psd, band, "roundtrip_recovered");

  const auto target_in_band = target.restricted(band);
  double worst = 0.0;
  for (std::size_t i = 0; i < report.trace.size(); ++i) {
    worst = std::max(worst, std::abs(report.trace.noise_db[i] - target.value_db_at(report.trace.freqs_hz[i])));
  }

  ScenarioResult r;
  r.traces = {target, report.trace};
  r.extra["target"] = c.dsp.roundtrip_target;
  r.extra["samples"] = n;
  r.extra["welch_segments"] = signal_psd.segments;
  r.extra["max_abs_bin_error_db"] = worst;
  r.extra["band_average_error_db"] = report.band_average_db - target_in_band.band_average_db(band);
  r.extra["snl_psd_band_mean"] = snl_psd.band_mean(band);
  r.extra["snl_psd_expected"] = shot_noise_psd(c.detector.quantum_efficiency * 2.0 * optical_flux);
  return r;
}

inline ScenarioResult budget_sweep(const ExperimentConfig& c) {
  const auto source = source_trace(c);
  const auto band = c.analysis_band();
  ScenarioResult r;
  OrderedJson grid = OrderedJson::array();
  bool monotone_eta = true, monotone_eps = true;
  std::vector<std::vector<double>> table;
  for (double eps : c.budget_grid.epsilon_values) {
    std::vector<double> row;
    for (double eta : c.budget_grid.eta_values) {
      CouplingBudget b{eta, eta, eps, c.n_th.value_or(2.0 * source_gain(c) - 1.0)};
      auto t = apply_budget(source, b, "budget_eta_" + short_number(eta) + "_eps_" + short_number(eps));
      const double avg = t.band_average_db(band);
      row.push_back(avg);
      grid.push_back({{"eta", eta}, {"epsilon", eps}, {"band_average_db", avg}});
      r.traces.push_back(std::move(t));
    }
    table.push_back(std::move(row));
  }
  // S' must not improve when eta drops or epsilon grows.
  const auto& etas = c.budget_grid.eta_values;
  const auto& epss = c.budget_grid.epsilon_values;
  for (std::size_t i = 0; i < epss.size(); ++i) {
    for (std::size_t j = 0; j < etas.size(); ++j) {
      for (std::size_t k = 0; k < etas.size(); ++k) {
        if (etas[k] < etas[j] && table[i][k] < table[i][j] - 1e-12) monotone_eta = false;
      }
      for (std::size_t k = 0; k < epss.size(); ++k) {
        if (epss[k] > epss[i] && table[k][j] < table[i][j] - 1e-12) monotone_eps = false;
      }
    }
  }
  r.extra["grid"] = std::move(grid);
  r.extra["non_increasing_in_eta"] = monotone_eta;
  r.extra["non_decreasing_in_epsilon"] = monotone_eps;
  return r;
}

}  // namespace detail

inline ScenarioResult run_scenario(const ExperimentConfig& config, const std::string& scenario) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), scenario) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown scenario '" + scenario + "'; valid scenarios: " + list);
  }
  ScenarioResult r;
  if (scenario == "snl") {
    r.traces = {flat_trace(detail::analysis_grid(config), 0.0, "snl")};
  } else if (scenario == "budget_sweep") {
    r = detail::budget_sweep(config);
  } else if (scenario == "roundtrip") {
    r = detail::roundtrip(config);
  } else {
    r.traces = {detail::analytic_trace(config, scenario)};
  }
  r.scenario = scenario;
  r.config = config;
  r.seed = config.rng_seed;
  r.version = kVersion;
  const auto band = config.analysis_band();
  for (const auto& t : r.traces) r.summary.push_back({t.label, t.band_average_db(band)});

  const auto geom = config.geometry();
  const double gain = detail::source_gain(config);
  r.extra["gain"] = gain;
  r.extra["ideal_squeezing_db"] = to_db(ideal_squeezing(gain));
  r.extra["coherence_area_mm"] = {{"probe", coherence_area_diameter(geom, Arm::probe)},
                                  {"conjugate", coherence_area_diameter(geom, Arm::conjugate)}};
  return r;
}

namespace detail {

inline OrderedJson& parameter_node(OrderedJson& root, const std::string& path, const std::string& shown) {
  OrderedJson* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw UsageError("unknown parameter path '" + shown + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!node->is_number() && !node->is_null()) throw UsageError("parameter '" + shown + "' is not a numeric field");
  return *node;
}

inline std::vector<std::string> parameter_targets(const std::string& param_path) {
  if (param_path == "eta") return {"eta_probe", "eta_conj"};
  return {param_path};
}

}  // namespace detail

/// Sets a numeric config field addressed by a dotted path ("eta" sets both
/// efficiencies) and revalidates.
inline ExperimentConfig with_parameter(const ExperimentConfig& config, const std::string& param_path, double value) {
  auto j = config_to_json(config);
  for (const auto& target : detail::parameter_targets(param_path)) {
    auto& node = detail::parameter_node(j, target, param_path);
    if (node.is_number_integer() || node.is_number_unsigned()) {
      if (value < 0.0 || value != std::floor(value)) {
        throw UsageError("parameter '" + param_path + "' takes a non-negative integer");
      }
      node = static_cast<std::uint64_t>(value);
    } else {
      node = value;
    }
  }
  return parse_config(j.dump(), "sweep(" + param_path + "=" + detail::format_double(value) + ")");
}

/// One scenario run per value, everything else frozen; point i uses seed base + i.
inline SweepResult run_sweep(const ExperimentConfig& config, const std::string& param_path,
                             const std::vector<double>& values, const std::string& scenario) {
  {
    auto j = config_to_json(config);
    for (const auto& target : detail::parameter_targets(param_path)) detail::parameter_node(j, target, param_path);
  }
  SweepResult sweep{scenario, param_path, values, {}, "n/a"};
  std::vector<double> averages;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto point = with_parameter(config, param_path, values[i]);
    if (param_path != "rng_seed") point.rng_seed = config.rng_seed + i;
    auto r = run_scenario(point, scenario);
    averages.push_back(r.summary.front().band_average_db);
    sweep.points.push_back(std::move(r));
  }
  sweep.trend = detail::trend_of(averages);
  return sweep;
}

struct OutputFormats {
  bool csv = true;
  bool json = true;
};

inline detail::OrderedJson result_to_json(const ScenarioResult& r, bool with_files) {
  detail::OrderedJson j;
  j["scenario"] = r.scenario;
  j["version"] = r.version;
  j["seed"] = r.seed;
  j["analysis_band_hz"] = {r.config.analysis_band().low_hz, r.config.analysis_band().high_hz};
  auto traces = detail::OrderedJson::array();
  for (std::size_t i = 0; i < r.traces.size(); ++i) {
    detail::OrderedJson t;
    t["label"] = r.summary[i].label;
    t["band_average_db"] = r.summary[i].band_average_db;
    t["bins"] = r.traces[i].size();
    if (with_files) t["file"] = r.traces[i].label + ".csv";
    traces.push_back(std::move(t));
  }
  j["traces"] = std::move(traces);
  j["summary"] = r.extra;
  j["config"] = config_to_json(r.config);
  return j;
}

/// Writes one CSV per trace and one JSON summary; returns the paths written.
inline std::vector<std::filesystem::path> emit(const ScenarioResult& result, const std::filesystem::path& out_dir,
                                               const OutputFormats& formats = {}) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory '" + out_dir.string() + "'");
  }
  std::vector<std::filesystem::path> written;
  if (formats.csv) {
    for (const auto& t : result.traces) {
      const auto path = out_dir / (t.label + ".csv");
      detail::write_text(path, detail::trace_csv(t));
      written.push_back(path);
    }
  }
  if (formats.json) {
    const auto path = out_dir / (result.scenario + ".json");
    detail::write_text(path, result_to_json(result, formats.csv).dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

inline std::vector<std::filesystem::path> emit(const SweepResult& sweep, const std::filesystem::path& out_dir,
                                               const OutputFormats& formats = {}) {
  std::vector<std::filesystem::path> written;
  detail::OrderedJson j;
  j["scenario"] = sweep.scenario;
  j["param"] = sweep.param_path;
  j["values"] = sweep.values;
  j["trend"] = sweep.trend;
  auto points = detail::OrderedJson::array();
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "point_%03zu", i);
    auto files = emit(sweep.points[i], out_dir / name, formats);
    written.insert(written.end(), files.begin(), files.end());
    points.push_back({{"value", sweep.values[i]},
                      {"dir", name},
                      {"seed", sweep.points[i].seed},
                      {"band_average_db", sweep.points[i].summary.front().band_average_db}});
  }
  j["points"] = std::move(points);
  if (formats.json) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");
    const auto path = out_dir / "sweep.json";
    detail::write_text(path, j.dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace twinbeam
