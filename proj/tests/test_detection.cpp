#include "twinbeam/detection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

namespace twinbeam {
namespace {

namespace fs = std::filesystem;

std::vector<double> white(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

NoiseTrace flat_to_nyquist(double fs, double level_db) {
  return flat_trace(uniform_grid(fs / 1024.0, 512), level_db, "flat");
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("twinbeam_det_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// ---------------------------------------------------------------------------
// Welch

TEST(Welch, WhiteNoiseLevel) {
  const double fs = 1e6, sigma = 3.0;
  const auto x = white(1 << 20, sigma, 1);
  const auto p = welch_psd(x, fs, 1024, 0.5);
  ASSERT_EQ(p.psd.size(), 512u);
  EXPECT_DOUBLE_EQ(p.freqs_hz.front(), fs / 1024.0);
  EXPECT_DOUBLE_EQ(p.freqs_hz.back(), fs / 2.0);
  EXPECT_EQ(p.segments, 2047u);
  EXPECT_NEAR(p.band_mean({1.0, fs / 2.0}) / (2.0 * sigma * sigma / fs), 1.0, 0.005);
}

TEST(Welch, ParsevalForWhiteNoise) {
  const double fs = 2e6;
  const auto x = white(1 << 19, 1.5, 2);
  const auto p = welch_psd(x, fs, 2048, 0.5);
  const double var = 1.5 * 1.5;
  // DC is dropped, so one bin of 1024 is missing.
  EXPECT_NEAR(p.integrated_power() / var, 1.0, 0.01);
}

TEST(Welch, ToneLandsInItsBin) {
  const double fs = 1e6;
  const std::size_t n = 1024, k0 = 100;
  const double f0 = fs * k0 / n, amp = 2.0;
  std::vector<double> x(1 << 16);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f0 * i / fs);
  const auto p = welch_psd(x, fs, n, 0.5);
  const auto peak = std::max_element(p.psd.begin(), p.psd.end()) - p.psd.begin();
  EXPECT_DOUBLE_EQ(p.freqs_hz[peak], f0);
  double power = 0.0;
  for (std::size_t k = peak - 3; k <= static_cast<std::size_t>(peak) + 3; ++k) power += p.psd[k];
  // Hann leakage spreads the tone over its neighbours; the density integrates back to A^2/2.
  EXPECT_NEAR(power * p.bin_width_hz() / (amp * amp / 2.0), 1.0, 1e-6);
}

TEST(Welch, ZeroInputGivesZero) {
  const std::vector<double> x(1 << 14, 0.0);
  const auto p = welch_psd(x, 1e6, 1024, 0.5);
  for (double v : p.psd) EXPECT_EQ(v, 0.0);
}

TEST(Welch, ConstantOffsetIsRemoved) {
  auto x = white(1 << 16, 1.0, 3);
  const auto a = welch_psd(x, 1e6, 1024, 0.5);
  for (double& v : x) v += 1e3;
  const auto b = welch_psd(x, 1e6, 1024, 0.5);
  for (std::size_t k = 0; k < a.psd.size(); ++k) EXPECT_NEAR(b.psd[k], a.psd[k], 1e-6 * a.psd[k] + 1e-15);
}

TEST(Welch, InputValidation) {
  const std::vector<double> shortx(1500, 1.0);
  EXPECT_THROW(welch_psd(shortx, 1e6, 1024, 0.5), std::invalid_argument);
  const std::vector<double> x(1 << 12, 1.0);
  EXPECT_THROW(welch_psd(x, 1e6, 1000, 0.5), std::invalid_argument);
  EXPECT_THROW(welch_psd(x, 1e6, 1024, 1.0), std::invalid_argument);
  EXPECT_THROW(welch_psd(x, 0.0, 1024, 0.5), std::invalid_argument);
}

TEST(Welch, StreamingIsChunkInvariant) {
  const auto x = white(100'000, 1.0, 4);
  const auto whole = welch_psd(x, 1e6, 512, 0.5);
  WelchAccumulator acc(1e6, {512, 0.5});
  std::mt19937_64 rng(9);
  std::size_t i = 0;
  while (i < x.size()) {
    const std::size_t n = std::min<std::size_t>(x.size() - i, 1 + rng() % 3000);
    acc.push(std::span<const double>(x.data() + i, n));
    i += n;
  }
  const auto streamed = acc.result();
  ASSERT_EQ(streamed.segments, whole.segments);
  for (std::size_t k = 0; k < whole.psd.size(); ++k) EXPECT_EQ(streamed.psd[k], whole.psd[k]);
}

TEST(Welch, UnbiasedAcrossSeeds) {
  const double fs = 1e6;
  std::vector<double> avg(128, 0.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = welch_psd(white(2048, 1.0, 100 + seed), fs, 256, 0.5);
    for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += p.psd[k] / 100.0;
  }
  const double expected = 2.0 / fs;
  // Interior bins only: the zero-mean normalisation bleeds into the lowest bin.
  double sum = 0.0;
  for (std::size_t k = 2; k < 127; ++k) sum += avg[k];
  EXPECT_NEAR(sum / 125.0 / expected, 1.0, 0.01);
}

// ---------------------------------------------------------------------------
// Synthesis

TEST(Synthesis, FlatTargetReachesLevel) {
  const double fs = 1e6, fp = 3e12, fc = 2e12;
  const auto pair = synthesize_photocurrents(flat_to_nyquist(fs, -7.2), 0.0, fp, fc, fs, 4.0, 5);
  EXPECT_NEAR(mean_of(pair.probe) / fp, 1.0, 1e-6);
  EXPECT_NEAR(mean_of(pair.conj) / fc, 1.0, 1e-6);
  const auto d = pair.difference();
  const auto p = welch_psd(d, fs, 4096, 0.5);
  const double snl = shot_noise_psd(fp + fc);
  const FrequencyBand band{0.05e6, 0.45e6};
  EXPECT_NEAR(to_db(p.band_mean(band) / snl), -7.2, 0.05);
  for (std::size_t k = 0; k < p.psd.size(); ++k) {
    if (band.contains(p.freqs_hz[k])) EXPECT_NEAR(to_db(p.psd[k] / snl), -7.2, 0.6) << p.freqs_hz[k];
  }
}

TEST(Synthesis, SumChannelLevel) {
  const double fs = 1e6, f = 1e12;
  const auto pair = synthesize_photocurrents(flat_to_nyquist(fs, -7.2), 7.2, f, f, fs, 2.0, 6);
  std::vector<double> s(pair.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = pair.probe[i] + pair.conj[i];
  const auto p = welch_psd(s, fs, 1024, 0.5);
  EXPECT_NEAR(to_db(p.band_mean({20e3, 480e3}) / shot_noise_psd(2.0 * f)), 7.2, 0.05);
}

TEST(Synthesis, ShapedPlateauAndShoulder) {
  const double fs = 4e6;
  NoiseTrace target{uniform_grid(fs / 2048.0, 1024), {}, "step"};
  for (double f : target.freqs_hz) target.noise_db.push_back(f < 1e6 ? -7.2 : -5.66);
  const auto pair = synthesize_photocurrents(target, 0.0, 1e12, 1e12, fs, 2.0, 7);
  const auto p = welch_psd(pair.difference(), fs, 4096, 0.5);
  const double snl = shot_noise_psd(2e12);
  EXPECT_NEAR(to_db(p.band_mean({0.3e6, 0.9e6}) / snl), -7.2, 0.05);
  EXPECT_NEAR(to_db(p.band_mean({1.1e6, 1.9e6}) / snl), -5.66, 0.05);
}

TEST(Synthesis, DeterministicAndChunkInvariant) {
  const double fs = 1e6;
  const auto target = flat_to_nyquist(fs, -3.0);
  const auto a = synthesize_photocurrents(target, 1.0, 1e10, 1e10, fs, 0.05, 42);
  const auto b = synthesize_photocurrents(target, 1.0, 1e10, 1e10, fs, 0.05, 42);
  EXPECT_EQ(a.probe, b.probe);
  EXPECT_EQ(a.conj, b.conj);
  const auto c = synthesize_photocurrents(target, 1.0, 1e10, 1e10, fs, 0.05, 43);
  EXPECT_NE(a.probe, c.probe);

  PhotocurrentSynthesizer synth(target, 1.0, 1e10, 1e10, fs, 42);
  std::vector<double> p(a.size()), q(a.size());
  std::size_t i = 0, step = 1;
  while (i < p.size()) {
    const std::size_t n = std::min(p.size() - i, step);
    synth.fill(std::span<double>(p.data() + i, n), std::span<double>(q.data() + i, n));
    i += n;
    step = step * 3 + 1;
  }
  EXPECT_EQ(p, a.probe);
  EXPECT_EQ(q, a.conj);
}

TEST(Synthesis, InputValidation) {
  const double fs = 1e6;
  const auto short_target = flat_trace(uniform_grid(1e3, 100), -7.2, "short");
  EXPECT_THROW(synthesize_photocurrents(short_target, 0.0, 1e10, 1e10, fs, 0.1, 1), std::invalid_argument);
  const auto ok = flat_to_nyquist(fs, -7.2);
  EXPECT_THROW(synthesize_photocurrents(ok, 0.0, 1e10, 1e10, fs, 0.01, 1), std::invalid_argument);  // < 2^14 samples
  EXPECT_THROW(synthesize_photocurrents(ok, 0.0, 0.0, 1e10, fs, 0.1, 1), std::invalid_argument);
  auto bad = ok;
  bad.noise_db[3] = NAN;
  EXPECT_THROW(synthesize_photocurrents(bad, 0.0, 1e10, 1e10, fs, 0.1, 1), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// SNL calibration

constexpr double kFlux = 1e12;

TEST(Calibration, AbsoluteLevelIsTwiceDetectedFlux) {
  DetectorSpec det;
  det.quantum_efficiency = 0.9;
  const auto snl = calibrate_snl(kFlux, det, 1e6, 2.0, 1);
  EXPECT_NEAR(snl.band_mean({10e3, 490e3}) / shot_noise_psd(0.9 * kFlux), 1.0, 0.005);
}

TEST(Calibration, SelfNormalizedTraceIsZeroDb) {
  const DetectorSpec det;
  const auto a = calibrate_snl(kFlux, det, 1e6, 4.0, 1);
  const auto b = calibrate_snl(kFlux, det, 1e6, 4.0, 2);
  const auto r = squeezing_report(b, a, {0.05e6, 0.45e6});
  EXPECT_NEAR(r.band_average_db, 0.0, 0.05);
}

TEST(Calibration, CommonModeNoiseCancels) {
  const DetectorSpec det;
  CalibrationOptions loud;
  loud.common_mode_amplitude = 10.0;
  const auto quiet = calibrate_snl(kFlux, det, 1e6, 2.0, 3);
  const auto noisy = calibrate_snl(kFlux, det, 1e6, 2.0, 3, loud);
  const auto r = squeezing_report(noisy, quiet, {0.01e6, 0.49e6});
  for (double v : r.trace.noise_db) EXPECT_LT(std::abs(v), 0.05);

  // ...while each arm alone sees it.
  const auto pair = simulate_coherent_split(kFlux, det, 1e6, 0.5, 3, 10.0);
  const auto arm = welch_psd(pair.probe, 1e6, 4096, 0.5);
  const auto arm_quiet = welch_psd(simulate_coherent_split(kFlux, det, 1e6, 0.5, 3).probe, 1e6, 4096, 0.5);
  EXPECT_GT(to_db(arm.band_mean({0.01e6, 0.49e6}) / arm_quiet.band_mean({0.01e6, 0.49e6})), 10.0);
}

TEST(Calibration, DoublingFluxAddsThreeDb) {
  const DetectorSpec det;
  const FrequencyBand band{10e3, 490e3};
  const auto one = calibrate_snl(kFlux, det, 1e6, 2.0, 4);
  const auto two = calibrate_snl(2.0 * kFlux, det, 1e6, 2.0, 5);
  EXPECT_NEAR(to_db(two.band_mean(band) / one.band_mean(band)), 3.0103, 0.05);
}

TEST(Calibration, ZeroEfficiencyDetectsNothing) {
  DetectorSpec det;
  det.quantum_efficiency = 0.0;
  const auto snl = calibrate_snl(kFlux, det, 1e6, 0.1, 6);
  for (double v : snl.psd) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(squeezing_report(snl, snl, {1e4, 2e5}), std::invalid_argument);
}

TEST(Calibration, ElectronicNoiseSetsAFloor) {
  const double fs = 1e6;
  DetectorSpec det;
  det.electronic_noise_db_below_snl = 10.0;
  const double detected = det.quantum_efficiency * kFlux;
  // A nearly perfect source at -30 dB seen through noisy electronics.
  WithElectronicNoise<PhotocurrentSynthesizer> src(
      PhotocurrentSynthesizer(flat_to_nyquist(fs, -30.0), 0.0, detected / 2.0, detected / 2.0, fs, 8), det,
      detected, 8);
  const auto diff = difference_psd(src, sample_count(fs, 2.0));
  const DetectorSpec clean;
  const auto snl = calibrate_snl(kFlux, clean, fs, 2.0, 9);
  const auto r = squeezing_report(diff, snl, {0.05e6, 0.45e6});
  EXPECT_GE(r.band_average_db, -10.5);
  EXPECT_NEAR(r.band_average_db, to_db(0.001 + 0.1), 0.1);
}

// ---------------------------------------------------------------------------
// Reporting

TEST(Report, ErrorsOnIncompatibleInputs) {
  const auto x = white(1 << 14, 1.0, 10);
  const auto a = welch_psd(x, 1e6, 1024, 0.5);
  const auto b = welch_psd(x, 1e6, 512, 0.5);
  EXPECT_THROW(squeezing_report(a, b, {1e4, 1e5}), std::invalid_argument);
  EXPECT_THROW(squeezing_report(a, a, {1e4, 6e5}), std::invalid_argument);   // beyond Nyquist
  EXPECT_THROW(squeezing_report(a, a, {2e5, 1e5}), std::invalid_argument);   // inverted band
  EXPECT_THROW(squeezing_report(a, a, {100.0, 200.0}), std::invalid_argument);  // no bins
  const auto r = squeezing_report(a, a, {1e4, 1e5}, "self");
  EXPECT_EQ(r.trace.label, "self");
  for (double v : r.trace.noise_db) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Report, PairOverloadMatchesSpectrumOverload) {
  const DetectorSpec det;
  const auto snl = calibrate_snl(kFlux, det, 1e6, 0.5, 11, {0.0, {1024, 0.5}});
  const auto pair = synthesize_photocurrents(flat_to_nyquist(1e6, -3.0), 0.0, kFlux / 2, kFlux / 2, 1e6, 0.5, 12);
  const auto viaPair = squeezing_report(pair, snl, {0.1e6, 0.4e6});
  const auto viaPsd = squeezing_report(welch_psd(pair.difference(), 1e6, 1024, 0.5), snl, {0.1e6, 0.4e6});
  EXPECT_EQ(viaPair.trace.noise_db, viaPsd.trace.noise_db);
  TimeSeriesPair other = pair;
  other.sample_rate_hz = 2e6;
  EXPECT_THROW(squeezing_report(other, snl, {0.1e6, 0.4e6}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, RoundTripIsExact) {
  TempDir dir;
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    TimeSeriesPair pair;
    pair.sample_rate_hz = std::uniform_real_distribution<double>(1.0, 1e8)(rng);
    const std::size_t n = rng() % 200;
    std::uniform_real_distribution<double> any(-1e15, 1e15);
    for (std::size_t i = 0; i < n; ++i) {
      pair.probe.push_back(trial % 2 ? any(rng) : std::ldexp(any(rng), -60));
      pair.conj.push_back(any(rng));
    }
    const auto path = dir.path / ("pair" + std::to_string(trial) + ".csv");
    write_csv(pair, path);
    const auto back = read_csv(path);
    EXPECT_EQ(back.sample_rate_hz, pair.sample_rate_hz);
    EXPECT_EQ(back.probe, pair.probe);
    EXPECT_EQ(back.conj, pair.conj);
    EXPECT_EQ(back.label, "pair" + std::to_string(trial));
  }
}

void expect_error_at(const fs::path& path, const std::string& body, const std::string& where) {
  {
    std::ofstream out(path);
    out << body;
  }
  try {
    read_csv(path);
    ADD_FAILURE() << "no error for:\n" << body;
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find(path.string() + ":" + where + ":"), std::string::npos) << e.what();
  }
}

TEST(Csv, MalformedInputsNameTheLine) {
  TempDir dir;
  const auto p = dir.path / "bad.csv";
  expect_error_at(p, "", "1");
  expect_error_at(p, "rate,5\nindex,probe,conj\n", "1");
  expect_error_at(p, "sample_rate_hz,abc\nindex,probe,conj\n", "1");
  expect_error_at(p, "sample_rate_hz,10\nidx,a,b\n", "2");
  expect_error_at(p, "sample_rate_hz,10\nindex,probe,conj\n0,1,2\n1,2\n", "4");
  expect_error_at(p, "sample_rate_hz,10\nindex,probe,conj\n0,1,x\n", "3");
  expect_error_at(p, "sample_rate_hz,10\nindex,probe,conj\n0,1,2\n2,1,2\n", "4");
  EXPECT_THROW(read_csv(dir.path / "missing.csv"), std::runtime_error);
}

}  // namespace
}  // namespace twinbeam
