// config.hpp — experiment configuration: JSON loading with defaults, strict
// key checking, validation and echo.

#pragma once

#include "twinbeam/detection.hpp"
#include "twinbeam/fwm_source.hpp"
#include "twinbeam/noise_trace.hpp"
#include "twinbeam/spatial_coupling.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinbeam {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& roundtrip_targets() {
  static const std::vector<std::string> names{"before_fiber", "after_fiber_loss_only", "after_fiber_thermal"};
  return names;
}

struct DspConfig {
  double sample_rate_hz = 4e6;
  double duration_s = 60.0;
  double snl_duration_s = 60.0;
  std::size_t segment_length = 4096;
  double overlap_fraction = 0.5;
  std::size_t filter_taps = 4096;
  std::string roundtrip_target = "before_fiber";

  WelchOptions welch() const { return {segment_length, overlap_fraction}; }
  double nyquist_hz() const { return 0.5 * sample_rate_hz; }
};

struct BudgetGrid {
  std::vector<double> eta_values{1.0, 0.9, 0.8};
  std::vector<double> epsilon_values{0.0, 0.5, 1.0};
};

/// Defaults reproduce the reference apparatus: 135 mW pump, 0.6 mm beams,
/// 12 mm cell at 99 C, 0.4 deg crossing, 3.04 GHz seed downshift, ~200 uW per
/// output beam and 90 % fiber coupling.
struct ExperimentConfig {
  double pump_power_mw = 135.0;
  double pump_waist_mm = 0.6;
  double seed_waist_mm = 0.6;
  double cell_length_mm = 12.0;
  double cell_temp_c = 99.0;
  double intersection_angle_deg = 0.4;
  double probe_detuning_ghz = 3.04;
  double wavelength_nm = 795.0;
  double lens_focal_mm_probe = 100.0;
  double lens_focal_mm_conj = 125.0;
  double bright_power_uw = 200.0;
  double eta_probe = 0.9;
  double eta_conj = 0.9;
  double epsilon = 0.215;  // fitted to the -4.4 dB after-fiber measurement
  std::optional<double> n_th;  // empty: 1/S0 of the source
  double bandwidth_mhz = 15.0;
  std::array<double, 2> analysis_band_mhz{0.3, 1.0};
  PumpGainMap gain_map;
  DetectorSpec detector;
  DspConfig dsp;
  BudgetGrid budget_grid;
  std::uint64_t rng_seed = 1;

  FrequencyBand analysis_band() const { return {analysis_band_mhz[0] * 1e6, analysis_band_mhz[1] * 1e6}; }

  BeamGeometry geometry() const {
    return {wavelength_nm, pump_waist_mm, seed_waist_mm, cell_length_mm, intersection_angle_deg,
            lens_focal_mm_probe, lens_focal_mm_conj};
  }
};

namespace detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Reads one JSON object tree into a config, remembering where each key sits
/// in the source text so that errors can name a line.
class ConfigReader {
 public:
  ConfigReader(std::string source_name, const std::string& text) : source_(std::move(source_name)), text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& reason) const {
    std::string where = source_;
    const std::string leaf = field.substr(field.rfind('.') == std::string::npos ? 0 : field.rfind('.') + 1);
    const auto pos = text_.find('"' + leaf + '"');
    if (pos != std::string::npos) where += ":" + std::to_string(line_of_offset(text_, pos));
    throw ConfigError(where + ": field '" + field + "': " + reason);
  }

  void check_keys(const Json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(prefix.empty() ? "<root>" : prefix, "expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
      if (!known) fail(join(prefix, it.key()), "unknown key");
    }
  }

  void number(const Json& obj, const std::string& prefix, const char* key, double& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(join(prefix, key), "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(join(prefix, key), "must be finite");
  }

  void optional_number(const Json& obj, const std::string& prefix, const char* key, std::optional<double>& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    double d = 0.0;
    number(obj, prefix, key, d);
    out = d;
  }

  void integer(const Json& obj, const std::string& prefix, const char* key, std::size_t& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(join(prefix, key), "expected a non-negative integer");
    }
    out = v.get<std::size_t>();
  }

  void seed(const Json& obj, const char* key, std::uint64_t& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(key, "expected a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void text(const Json& obj, const std::string& prefix, const char* key, std::string& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(join(prefix, key), "expected a string");
    out = v.get<std::string>();
  }

  void numbers(const Json& obj, const std::string& prefix, const char* key, std::vector<double>& out) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array()) fail(join(prefix, key), "expected an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) fail(join(prefix, key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }

  static std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

 private:
  std::string source_;
  const std::string& text_;
};

inline void validate_config(const ExperimentConfig& c, const ConfigReader& r) {
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0)) r.fail(name, "must be > 0");
  };
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) r.fail(name, "must lie in [0, 1]");
  };
  if (!(c.pump_power_mw >= 0.0)) r.fail("pump_power_mw", "must be >= 0");
  positive(c.pump_waist_mm, "pump_waist_mm");
  positive(c.seed_waist_mm, "seed_waist_mm");
  positive(c.cell_length_mm, "cell_length_mm");
  positive(c.intersection_angle_deg, "intersection_angle_deg");
  if (!(c.intersection_angle_deg < 5.0)) r.fail("intersection_angle_deg", "must be < 5 degrees");
  positive(c.probe_detuning_ghz, "probe_detuning_ghz");
  positive(c.wavelength_nm, "wavelength_nm");
  positive(c.lens_focal_mm_probe, "lens_focal_mm_probe");
  positive(c.lens_focal_mm_conj, "lens_focal_mm_conj");
  positive(c.bright_power_uw, "bright_power_uw");
  unit(c.eta_probe, "eta_probe");
  unit(c.eta_conj, "eta_conj");
  unit(c.epsilon, "epsilon");
  if (c.n_th && !(*c.n_th >= 1.0)) r.fail("n_th", "must be >= 1 (thermal variance cannot be below vacuum)");
  positive(c.bandwidth_mhz, "bandwidth_mhz");
  if (!(c.analysis_band_mhz[0] > 0.0) || !(c.analysis_band_mhz[1] > c.analysis_band_mhz[0])) {
    r.fail("analysis_band_mhz", "must be [low, high] with 0 < low < high");
  }
  positive(c.gain_map.p_opt_mw, "gain_map.p_opt_mw");
  if (!(c.gain_map.g_at_popt >= 1.0)) r.fail("gain_map.g_at_popt", "must be >= 1");
  positive(c.gain_map.exponent, "gain_map.exponent");
  unit(c.detector.quantum_efficiency, "detector.quantum_efficiency");
  positive(c.dsp.sample_rate_hz, "dsp.sample_rate_hz");
  positive(c.dsp.duration_s, "dsp.duration_s");
  positive(c.dsp.snl_duration_s, "dsp.snl_duration_s");
  if (c.dsp.segment_length < 8 || !std::has_single_bit(c.dsp.segment_length)) {
    r.fail("dsp.segment_length", "must be a power of two >= 8");
  }
  if (!(c.dsp.overlap_fraction >= 0.0 && c.dsp.overlap_fraction < 1.0)) r.fail("dsp.overlap_fraction", "must lie in [0, 1)");
  if (c.dsp.filter_taps < 8 || !std::has_single_bit(c.dsp.filter_taps)) {
    r.fail("dsp.filter_taps", "must be a power of two >= 8");
  }
  const auto& targets = roundtrip_targets();
  if (std::find(targets.begin(), targets.end(), c.dsp.roundtrip_target) == targets.end()) {
    r.fail("dsp.roundtrip_target", "must be one of before_fiber, after_fiber_loss_only, after_fiber_thermal");
  }
  if (c.analysis_band_mhz[1] * 1e6 > c.dsp.nyquist_hz()) {
    r.fail("analysis_band_mhz", "upper edge exceeds the Nyquist frequency of dsp.sample_rate_hz");
  }
  if (c.dsp.duration_s * c.dsp.sample_rate_hz < 2.0 * static_cast<double>(c.dsp.segment_length)) {
    r.fail("dsp.duration_s", "record shorter than two Welch segments");
  }
  for (double v : c.budget_grid.eta_values) unit(v, "budget_grid.eta_values");
  for (double v : c.budget_grid.epsilon_values) unit(v, "budget_grid.epsilon_values");
}

}  // namespace detail

/// Parses and validates a config document; name is used in error messages.
inline ExperimentConfig parse_config(const std::string& text, const std::string& name = "<config>") {
  using detail::Json;
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(name + ":" + std::to_string(detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                      ": parse error: " + e.what());
  }
  const detail::ConfigReader r(name, text);
  r.check_keys(root, "",
               {"pump_power_mw", "pump_waist_mm", "seed_waist_mm", "cell_length_mm", "cell_temp_c",
                "intersection_angle_deg", "probe_detuning_ghz", "wavelength_nm", "lens_focal_mm_probe",
                "lens_focal_mm_conj", "bright_power_uw", "eta_probe", "eta_conj", "epsilon", "n_th", "bandwidth_mhz",
                "analysis_band_mhz", "gain_map", "detector", "dsp", "budget_grid", "rng_seed"});
  ExperimentConfig c;
  r.number(root, "", "pump_power_mw", c.pump_power_mw);
  r.number(root, "", "pump_waist_mm", c.pump_waist_mm);
  r.number(root, "", "seed_waist_mm", c.seed_waist_mm);
  r.number(root, "", "cell_length_mm", c.cell_length_mm);
  r.number(root, "", "cell_temp_c", c.cell_temp_c);
  r.number(root, "", "intersection_angle_deg", c.intersection_angle_deg);
  r.number(root, "", "probe_detuning_ghz", c.probe_detuning_ghz);
  r.number(root, "", "wavelength_nm", c.wavelength_nm);
  r.number(root, "", "lens_focal_mm_probe", c.lens_focal_mm_probe);
  r.number(root, "", "lens_focal_mm_conj", c.lens_focal_mm_conj);
  r.number(root, "", "bright_power_uw", c.bright_power_uw);
  r.number(root, "", "eta_probe", c.eta_probe);
  r.number(root, "", "eta_conj", c.eta_conj);
  r.number(root, "", "epsilon", c.epsilon);
  r.optional_number(root, "", "n_th", c.n_th);
  r.number(root, "", "bandwidth_mhz", c.bandwidth_mhz);
  if (root.contains("analysis_band_mhz")) {
    std::vector<double> band;
    r.numbers(root, "", "analysis_band_mhz", band);
    if (band.size() != 2) r.fail("analysis_band_mhz", "expected [low, high]");
    c.analysis_band_mhz = {band[0], band[1]};
  }
  if (root.contains("gain_map")) {
    const auto& g = root.at("gain_map");
    r.check_keys(g, "gain_map", {"p_opt_mw", "g_at_popt", "exponent"});
    r.number(g, "gain_map", "p_opt_mw", c.gain_map.p_opt_mw);
    r.number(g, "gain_map", "g_at_popt", c.gain_map.g_at_popt);
    r.number(g, "gain_map", "exponent", c.gain_map.exponent);
  }
  if (root.contains("detector")) {
    const auto& d = root.at("detector");
    r.check_keys(d, "detector", {"quantum_efficiency", "electronic_noise_db_below_snl"});
    r.number(d, "detector", "quantum_efficiency", c.detector.quantum_efficiency);
    r.optional_number(d, "detector", "electronic_noise_db_below_snl", c.detector.electronic_noise_db_below_snl);
  }
  if (root.contains("dsp")) {
    const auto& d = root.at("dsp");
    r.check_keys(d, "dsp", {"sample_rate_hz", "duration_s", "snl_duration_s", "segment_length", "overlap_fraction",
                            "filter_taps", "roundtrip_target"});
    r.number(d, "dsp", "sample_rate_hz", c.dsp.sample_rate_hz);
    r.number(d, "dsp", "duration_s", c.dsp.duration_s);
    r.number(d, "dsp", "snl_duration_s", c.dsp.snl_duration_s);
    r.integer(d, "dsp", "segment_length", c.dsp.segment_length);
    r.number(d, "dsp", "overlap_fraction", c.dsp.overlap_fraction);
    r.integer(d, "dsp", "filter_taps", c.dsp.filter_taps);
    r.text(d, "dsp", "roundtrip_target", c.dsp.roundtrip_target);
  }
  if (root.contains("budget_grid")) {
    const auto& g = root.at("budget_grid");
    r.check_keys(g, "budget_grid", {"eta_values", "epsilon_values"});
    r.numbers(g, "budget_grid", "eta_values", c.budget_grid.eta_values);
    r.numbers(g, "budget_grid", "epsilon_values", c.budget_grid.epsilon_values);
  }
  r.seed(root, "rng_seed", c.rng_seed);
  detail::validate_config(c, r);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text, path.string());
}

/// The effective (post-default) config; parse_config(dump) reproduces it.
inline detail::OrderedJson config_to_json(const ExperimentConfig& c) {
  detail::OrderedJson j;
  j["pump_power_mw"] = c.pump_power_mw;
  j["pump_waist_mm"] = c.pump_waist_mm;
  j["seed_waist_mm"] = c.seed_waist_mm;
  j["cell_length_mm"] = c.cell_length_mm;
  j["cell_temp_c"] = c.cell_temp_c;
  j["intersection_angle_deg"] = c.intersection_angle_deg;
  j["probe_detuning_ghz"] = c.probe_detuning_ghz;
  j["wavelength_nm"] = c.wavelength_nm;
  j["lens_focal_mm_probe"] = c.lens_focal_mm_probe;
  j["lens_focal_mm_conj"] = c.lens_focal_mm_conj;
  j["bright_power_uw"] = c.bright_power_uw;
  j["eta_probe"] = c.eta_probe;
  j["eta_conj"] = c.eta_conj;
  j["epsilon"] = c.epsilon;
  j["n_th"] = c.n_th ? detail::OrderedJson(*c.n_th) : detail::OrderedJson(nullptr);
  j["bandwidth_mhz"] = c.bandwidth_mhz;
  j["analysis_band_mhz"] = {c.analysis_band_mhz[0], c.analysis_band_mhz[1]};
  j["gain_map"] = {{"p_opt_mw", c.gain_map.p_opt_mw}, {"g_at_popt", c.gain_map.g_at_popt},
                   {"exponent", c.gain_map.exponent}};
  j["detector"] = {{"quantum_efficiency", c.detector.quantum_efficiency},
                   {"electronic_noise_db_below_snl", c.detector.electronic_noise_db_below_snl
                                                         ? detail::OrderedJson(*c.detector.electronic_noise_db_below_snl)
                                                         : detail::OrderedJson(nullptr)}};
  j["dsp"] = {{"sample_rate_hz", c.dsp.sample_rate_hz},   {"duration_s", c.dsp.duration_s},
              {"snl_duration_s", c.dsp.snl_duration_s},   {"segment_length", c.dsp.segment_length},
              {"overlap_fraction", c.dsp.overlap_fraction}, {"filter_taps", c.dsp.filter_taps},
              {"roundtrip_target", c.dsp.roundtrip_target}};
  j["budget_grid"] = {{"eta_values", c.budget_grid.eta_values}, {"epsilon_values", c.budget_grid.epsilon_values}};
  j["rng_seed"] = c.rng_seed;
  return j;
}

}  // namespace twinbeam
