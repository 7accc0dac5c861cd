#include "twinbeam/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace twinbeam {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("twinbeam_scenario_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig quick_dsp() {
  return parse_config(R"({"dsp": {"duration_s": 1.0, "snl_duration_s": 1.0}})");
}

double band_avg(const ExperimentConfig& c, const std::string& scenario) {
  return run_scenario(c, scenario).summary.front().band_average_db;
}

TEST(Scenario, AnalyticBandAverages) {
  const ExperimentConfig c;
  EXPECT_NEAR(band_avg(c, "before_fiber"), -7.16223, 1e-4);
  EXPECT_NEAR(band_avg(c, "after_fiber_loss_only"), -5.63854, 1e-4);
  EXPECT_NEAR(band_avg(c, "after_fiber_thermal"), -4.38514, 1e-4);
  EXPECT_NEAR(band_avg(c, "after_fiber_thermal"), -4.4, 0.1);
  EXPECT_DOUBLE_EQ(band_avg(c, "snl"), 0.0);
}

TEST(Scenario, TraceGridIsTheAnalysisGrid) {
  const ExperimentConfig c;
  const auto r = run_scenario(c, "before_fiber");
  ASSERT_EQ(r.traces.size(), 1u);
  const auto& t = r.traces.front();
  EXPECT_EQ(t.size(), 2048u);
  EXPECT_DOUBLE_EQ(t.freqs_hz.front(), 4e6 / 4096);
  EXPECT_EQ(t.restricted(c.analysis_band()).size(), 717u);
  EXPECT_EQ(r.traces.front().label, "before_fiber");
  EXPECT_NEAR(r.extra["ideal_squeezing_db"].get<double>(), -7.2, 1e-12);
  EXPECT_NEAR(r.extra["coherence_area_mm"]["probe"].get<double>(), 0.16870423967740905, 1e-12);
}

TEST(Scenario, LossOnlyConsistentWithBudgetOnSourceLevel) {
  // The loss-only trace applies the eps = 0 budget bin by bin to the source trace.
  const ExperimentConfig c;
  const auto src = run_scenario(c, "before_fiber").traces.front();
  const auto lossy = run_scenario(c, "after_fiber_loss_only").traces.front();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto expect = expected_squeezing(SqueezingLevel::from_db(src.noise_db[i]),
                                           CouplingBudget::symmetric(0.9, 0.0, 1.0));
    EXPECT_NEAR(lossy.noise_db[i], expect.db(), 1e-12);
  }
}

TEST(Scenario, AsymmetricEfficienciesUseCovariancePath) {
  auto c = parse_config(R"({"eta_probe": 0.95, "eta_conj": 0.85})");
  const auto r = run_scenario(c, "after_fiber_loss_only");
  auto sym = parse_config(R"({"eta_probe": 0.9, "eta_conj": 0.9})");
  EXPECT_GT(r.summary.front().band_average_db, band_avg(sym, "after_fiber_loss_only"));
}

TEST(Scenario, UnknownNameListsValidOnes) {
  try {
    run_scenario(ExperimentConfig{}, "after_fibre");
    FAIL();
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    for (const auto& n : scenario_names()) EXPECT_NE(msg.find(n), std::string::npos) << n;
  }
}

TEST(Scenario, BudgetSweepGrid) {
  const auto r = run_scenario(ExperimentConfig{}, "budget_sweep");
  EXPECT_EQ(r.traces.size(), 9u);
  EXPECT_TRUE(r.extra["non_increasing_in_eta"].get<bool>());
  EXPECT_TRUE(r.extra["non_decreasing_in_epsilon"].get<bool>());
  EXPECT_EQ(r.traces[1].label, "budget_eta_0.9_eps_0");
}

TEST(Sweep, EtaWithWideBandwidthReproducesClosedForm) {
  const auto c = parse_config(R"({"bandwidth_mhz": 1e9})");
  const auto s = run_sweep(c, "eta", {1.0, 0.9, 0.8}, "after_fiber_loss_only");
  ASSERT_EQ(s.points.size(), 3u);
  EXPECT_NEAR(s.points[0].summary.front().band_average_db, -7.2, 1e-6);
  EXPECT_NEAR(s.points[1].summary.front().band_average_db, -5.6624382, 1e-6);
  EXPECT_NEAR(s.points[2].summary.front().band_average_db, -4.5291868, 1e-6);
  EXPECT_EQ(s.trend, "non-decreasing");
  EXPECT_DOUBLE_EQ(s.points[2].config.eta_conj, 0.8);
  EXPECT_EQ(s.points[2].seed, c.rng_seed + 2);
}

TEST(Sweep, EpsilonWithWideBandwidthReproducesClosedForm) {
  const auto c = parse_config(R"({"bandwidth_mhz": 1e9})");
  const auto s = run_sweep(c, "epsilon", {0.0, 0.5, 1.0}, "after_fiber_thermal");
  EXPECT_NEAR(s.points[0].summary.front().band_average_db, -5.6624382, 1e-6);
  EXPECT_NEAR(s.points[1].summary.front().band_average_db, -3.1524869, 1e-6);
  EXPECT_NEAR(s.points[2].summary.front().band_average_db, -1.5720428, 1e-6);
  EXPECT_EQ(s.trend, "non-decreasing");
}

TEST(Sweep, PumpPowerDeepensSqueezing) {
  const auto s = run_sweep(ExperimentConfig{}, "pump_power_mw", {60, 90, 120, 135}, "before_fiber");
  EXPECT_EQ(s.trend, "non-increasing");
}

TEST(Sweep, NestedPathsAndErrors) {
  const auto s = run_sweep(ExperimentConfig{}, "gain_map.exponent", {1.0, 2.0}, "before_fiber");
  EXPECT_DOUBLE_EQ(s.points[0].config.gain_map.exponent, 1.0);
  EXPECT_THROW(run_sweep(ExperimentConfig{}, "gain_map.nope", {1.0}, "before_fiber"), UsageError);
  EXPECT_THROW(run_sweep(ExperimentConfig{}, "dsp.roundtrip_target", {1.0}, "before_fiber"), UsageError);
  EXPECT_THROW(run_sweep(ExperimentConfig{}, "dsp.segment_length", {100.5}, "before_fiber"), UsageError);
  EXPECT_THROW(run_sweep(ExperimentConfig{}, "epsilon", {1.5}, "before_fiber"), ConfigError);
  const auto seeds = run_sweep(ExperimentConfig{}, "rng_seed", {5, 9}, "snl");
  EXPECT_EQ(seeds.points[1].seed, 9u);
}

TEST(Roundtrip, ShortRunRecoversTarget) {
  const auto r = run_scenario(quick_dsp(), "roundtrip");
  ASSERT_EQ(r.traces.size(), 2u);
  EXPECT_EQ(r.traces[0].label, "roundtrip_target");
  EXPECT_EQ(r.traces[1].label, "roundtrip_recovered");
  EXPECT_LT(std::abs(r.extra["band_average_error_db"].get<double>()), 0.1);
  EXPECT_NEAR(r.extra["snl_psd_band_mean"].get<double>() / r.extra["snl_psd_expected"].get<double>(), 1.0, 0.02);
}

TEST(Roundtrip, ElectronicNoiseDegradesRecovery) {
  auto c = parse_config(R"({"dsp": {"duration_s": 1.0, "snl_duration_s": 1.0},
                            "detector": {"electronic_noise_db_below_snl": 10}})");
  const auto r = run_scenario(c, "roundtrip");
  // A floor 10 dB below the SNL sits under both the signal and the calibration
  // made through the same detector: (S + 0.1) / 1.1, about -5.76 dB.
  EXPECT_NEAR(r.summary[1].band_average_db, to_db((from_db(r.summary[0].band_average_db) + 0.1) / 1.1), 0.1);
}

TEST(Emit, WritesFilesDeterministically) {
  const auto cfg = quick_dsp();
  const auto a = fresh_dir("a"), b = fresh_dir("b");
  const auto fa = emit(run_scenario(cfg, "roundtrip"), a);
  const auto fb = emit(run_scenario(cfg, "roundtrip"), b);
  ASSERT_EQ(fa.size(), 3u);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(fa[i].filename(), fb[i].filename());
    EXPECT_EQ(slurp(fa[i]), slurp(fb[i])) << fa[i];
  }
  EXPECT_TRUE(fs::exists(a / "roundtrip_target.csv"));
  EXPECT_TRUE(fs::exists(a / "roundtrip.json"));
  EXPECT_EQ(slurp(a / "roundtrip_target.csv").rfind("freq_hz,noise_db\n", 0), 0u);

  const auto json = nlohmann::json::parse(slurp(a / "roundtrip.json"));
  EXPECT_EQ(json["scenario"], "roundtrip");
  EXPECT_EQ(json["seed"], 1);
  EXPECT_EQ(json["version"], kVersion);
  EXPECT_EQ(json["traces"][1]["file"], "roundtrip_recovered.csv");
  // echoed config reproduces the effective config
  EXPECT_EQ(config_to_json(parse_config(json["config"].dump())).dump(), config_to_json(cfg).dump());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Emit, DifferentSeedChangesRoundtripOutput) {
  auto c1 = quick_dsp();
  auto c2 = c1;
  c2.rng_seed = 2;
  const auto r1 = run_scenario(c1, "roundtrip"), r2 = run_scenario(c2, "roundtrip");
  EXPECT_NE(r1.traces[1].noise_db, r2.traces[1].noise_db);
}

TEST(Emit, FormatSelection) {
  const auto dir = fresh_dir("json_only");
  const auto files = emit(run_scenario(ExperimentConfig{}, "before_fiber"), dir, {false, true});
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(files[0].filename(), "before_fiber.json");
  EXPECT_FALSE(nlohmann::json::parse(slurp(files[0]))["traces"][0].contains("file"));
  const auto csv_only = emit(run_scenario(ExperimentConfig{}, "before_fiber"), dir / "csv", {true, false});
  ASSERT_EQ(csv_only.size(), 1u);
  EXPECT_EQ(csv_only[0].extension(), ".csv");
  fs::remove_all(dir);
}

TEST(Emit, SweepLayout) {
  const auto dir = fresh_dir("sweep");
  emit(run_sweep(ExperimentConfig{}, "epsilon", {0.1, 0.2}, "after_fiber_thermal"), dir);
  EXPECT_TRUE(fs::exists(dir / "point_000" / "after_fiber_thermal.csv"));
  EXPECT_TRUE(fs::exists(dir / "point_001" / "after_fiber_thermal.json"));
  const auto j = nlohmann::json::parse(slurp(dir / "sweep.json"));
  EXPECT_EQ(j["param"], "epsilon");
  EXPECT_EQ(j["trend"], "non-decreasing");
  EXPECT_EQ(j["points"].size(), 2u);
  fs::remove_all(dir);
}

TEST(Emit, UnwritableDirectoryIsIoError) {
  const auto dir = fresh_dir("blocker");
  fs::create_directories(dir);
  { std::ofstream(dir / "file") << "x"; }
  EXPECT_THROW(emit(run_scenario(ExperimentConfig{}, "snl"), dir / "file" / "sub"), IoError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace twinbeam
