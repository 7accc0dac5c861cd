// twinbeam — run squeezed-light scenarios and parameter sweeps from a JSON config.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include "twinbeam/config.hpp"
#include "twinbeam/noise_budget.hpp"
#include "twinbeam/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

twinbeam::OutputFormats parse_formats(const std::string& spec) {
  twinbeam::OutputFormats f{false, false};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "csv") {
      f.csv = true;
    } else if (item == "json") {
      f.json = true;
    } else {
      throw twinbeam::UsageError("unknown format '" + item + "' (expected csv, json or csv,json)");
    }
  }
  if (!f.csv && !f.json) throw twinbeam::UsageError("--format must name at least one of csv, json");
  return f;
}

std::vector<double> parse_values(const std::string& spec) {
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      values.push_back(twinbeam::detail::parse_double(item));
    } catch (const std::invalid_argument&) {
      throw twinbeam::UsageError("--values: '" + item + "' is not a number");
    }
  }
  return values;
}

std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("TWINBEAM_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "twinbeam_out";
}

twinbeam::ExperimentConfig config_from(const std::string& path, std::optional<std::uint64_t> seed) {
  auto config = path.empty() ? twinbeam::ExperimentConfig{} : twinbeam::load_config(path);
  if (seed) config.rng_seed = *seed;
  return config;
}

void print_written(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber-coupled twin-beam squeezing simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(twinbeam::kVersion));

  std::string config_path, scenario, out, format = "csv,json", param, values;
  std::optional<std::uint64_t> seed;
  double s0_db = 0, measured_db = 0, eta = 0;
  std::optional<double> n_th;

  auto* run = app.add_subcommand("run", "Run one scenario and write its traces");
  run->add_option("--config", config_path, "Experiment config (JSON); defaults when omitted");
  run->add_option("--scenario", scenario, "Scenario name")->required();
  run->add_option("--out", out, "Output directory (default $TWINBEAM_OUT_DIR or ./twinbeam_out)");
  run->add_option("--seed", seed, "Override rng_seed");
  run->add_option("--format", format, "csv, json or csv,json");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario over values of one config field");
  sweep->add_option("--config", config_path, "Experiment config (JSON)");
  sweep->add_option("--scenario", scenario, "Scenario name")->required();
  sweep->add_option("--param", param, "Dotted config path, or 'eta' for both efficiencies")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--seed", seed, "Override the base rng_seed");
  sweep->add_option("--format", format, "csv, json or csv,json");

  auto* fit = app.add_subcommand("fit-epsilon", "Thermal fraction that explains a measured squeezing level");
  fit->add_option("--s0-db", s0_db, "Initial squeezing (dB)")->required();
  fit->add_option("--measured-db", measured_db, "Measured squeezing after coupling (dB)")->required();
  fit->add_option("--eta", eta, "Coupling efficiency")->required();
  fit->add_option("--n-th", n_th, "Normalized thermal variance (default 1/S0)");

  auto* validate = app.add_subcommand("validate-config", "Check a config file and print the effective config");
  validate->add_option("--config", config_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      const auto formats = parse_formats(format);
      const auto result = twinbeam::run_scenario(config_from(config_path, seed), scenario);
      print_written(twinbeam::emit(result, output_dir(out), formats));
      for (const auto& s : result.summary) {
        std::cerr << s.label << ": band average " << s.band_average_db << " dB\n";
      }
    } else if (*sweep) {
      const auto formats = parse_formats(format);
      const auto result =
          twinbeam::run_sweep(config_from(config_path, seed), param, parse_values(values), scenario);
      print_written(twinbeam::emit(result, output_dir(out), formats));
      std::cerr << "trend: " << result.trend << '\n';
    } else if (*fit) {
      const auto s0 = twinbeam::SqueezingLevel::from_db(s0_db);
      const auto measured = twinbeam::SqueezingLevel::from_db(measured_db);
      const double nth = n_th.value_or(1.0 / s0.linear());
      const double eps = twinbeam::fit_epsilon(s0, measured, eta, nth);
      nlohmann::ordered_json j{{"epsilon", eps}, {"s0_db", s0_db}, {"measured_db", measured_db},
                               {"eta", eta},     {"n_th", nth}};
      std::cout << j.dump(2) << '\n';
    } else if (*validate) {
      const auto config = twinbeam::load_config(config_path);
      std::cout << twinbeam::config_to_json(config).dump(2) << '\n';
    }
  } catch (const twinbeam::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const twinbeam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
