// detection.hpp — synthesized photocurrents, balanced detection, SNL
// calibration and Welch spectral estimation.
//
// Photocurrents are in photon flux units (photons/s). Shot noise of a detected
// flux F is white with one-sided PSD 2F (photons^2/s^2 per Hz), so a record
// sampled at rate fs carries per-sample variance F * fs.

#pragma once

#include "twinbeam/detail/fft.hpp"
#include "twinbeam/detail/numfmt.hpp"
#include "twinbeam/noise_trace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twinbeam {

// ---------------------------------------------------------------------------
// Data types

struct TimeSeriesPair {
  double sample_rate_hz = 0.0;
  std::vector<double> probe;
  std::vector<double> conj;
  std::string label;

  std::size_t size() const { return probe.size(); }

  void validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
      throw std::invalid_argument("TimeSeriesPair: sample rate must be > 0");
    }
    if (probe.size() != conj.size()) throw std::invalid_argument("TimeSeriesPair: probe and conj lengths differ");
  }

  /// Balanced-detector output, probe minus conjugate.
  std::vector<double> difference() const {
    validate();
    std::vector<double> d(probe.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = probe[i] - conj[i];
    return d;
  }
};

/// One-sided power spectral density on the positive bins k * fs / N, k = 1..N/2.
struct PowerSpectrum {
  std::vector<double> freqs_hz;
  std::vector<double> psd;
  double sample_rate_hz = 0.0;
  std::size_t segment_length = 0;
  std::size_t segments = 0;

  double bin_width_hz() const { return sample_rate_hz / static_cast<double>(segment_length); }

  double band_mean(const FrequencyBand& band) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
      if (band.contains(freqs_hz[i])) {
        sum += psd[i];
        ++n;
      }
    }
    if (n == 0) throw std::invalid_argument("PowerSpectrum: no bins inside the band");
    return sum / static_cast<double>(n);
  }

  /// Integral of the PSD over all positive bins.
  double integrated_power() const {
    double sum = 0.0;
    for (double p : psd) sum += p;
    return sum * bin_width_hz();
  }

  NoiseTrace to_trace_db(std::string label) const {
    NoiseTrace t{freqs_hz, {}, std::move(label)};
    t.noise_db.reserve(psd.size());
    for (double p : psd) t.noise_db.push_back(to_db(p));
    return t;
  }
};

struct DetectorSpec {
  double quantum_efficiency = 0.95;
  /// Electronic (dark) noise relative to the SNL of the detected flux; disabled when empty.
  std::optional<double> electronic_noise_db_below_snl;

  void validate() const {
    if (!(quantum_efficiency >= 0.0 && quantum_efficiency <= 1.0)) {
      throw std::invalid_argument("DetectorSpec: quantum efficiency must lie in [0, 1]");
    }
    if (electronic_noise_db_below_snl && !std::isfinite(*electronic_noise_db_below_snl)) {
      throw std::invalid_argument("DetectorSpec: electronic noise level must be finite");
    }
  }
};

struct WelchOptions {
  std::size_t segment_length = 4096;
  double overlap_fraction = 0.5;

  void validate() const {
    if (segment_length < 8 || !std::has_single_bit(segment_length)) {
      throw std::invalid_argument("WelchOptions: segment length must be a power of two >= 8");
    }
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
      throw std::invalid_argument("WelchOptions: overlap fraction must lie in [0, 1)");
    }
  }
  std::size_t hop() const {
    const auto overlap = static_cast<std::size_t>(std::floor(static_cast<double>(segment_length) * overlap_fraction));
    return std::max<std::size_t>(1, segment_length - overlap);
  }
};

inline double shot_noise_psd(double detected_flux) { return 2.0 * detected_flux; }

inline std::size_t sample_count(double sample_rate_hz, double duration_s) {
  if (!(sample_rate_hz > 0.0) || !(duration_s > 0.0) || !std::isfinite(sample_rate_hz * duration_s)) {
    throw std::invalid_argument("sample rate and duration must be positive");
  }
  return static_cast<std::size_t>(std::llround(sample_rate_hz * duration_s));
}

// ---------------------------------------------------------------------------
// Random streams

namespace detail {

enum class Stream : std::uint32_t {
  difference = 1,
  sum = 2,
  classical = 3,
  arm_a = 4,
  arm_b = 5,
  electronic_a = 6,
  electronic_b = 7,
};

inline std::mt19937_64 make_engine(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x7477u};
  return std::mt19937_64(seq);
}

struct GaussianStream {
  GaussianStream(std::uint64_t seed, Stream stream, double sigma) : engine(make_engine(seed, stream)), sigma(sigma) {}
  double operator()() { return sigma * normal(engine); }

  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};
  double sigma;
};

}  // namespace detail

/// Anything that streams probe/conjugate photocurrent samples.
template <typename T>
concept PhotocurrentSource = requires(T& src, std::span<double> a, std::span<double> b) {
  src.fill(a, b);
  { src.sample_rate_hz() } -> std::convertible_to<double>;
};

/// Stationary Gaussian noise whose one-sided PSD is psd_scale * shape(f).
/// White noise is filtered by a linear-phase FIR (frequency-sampled sqrt of
/// the shape, Hann-tapered) with FFT overlap-save, so the stream is continuous
/// across blocks and identical regardless of how the caller chunks it.
class ShapedNoise {
 public:
  ShapedNoise(const NoiseTrace& shape_db, double sample_rate_hz, double psd_scale, std::uint64_t seed,
              detail::Stream stream, std::size_t taps = 4096)
      : taps_(taps),
        fft_(4 * taps),
        white_(seed, stream, std::sqrt(psd_scale * sample_rate_hz / 2.0)),
        history_(taps - 1, 0.0) {
    if (taps < 8 || !std::has_single_bit(taps)) throw std::invalid_argument("ShapedNoise: taps must be a power of two");
    design_filter(shape_db, sample_rate_hz);
    for (double& h : history_) h = white_();
  }

  void fill(std::span<double> out) {
    std::size_t i = 0;
    while (i < out.size()) {
      if (pos_ == block_.size()) next_block();
      const std::size_t n = std::min(out.size() - i, block_.size() - pos_);
      std::copy_n(block_.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin() + static_cast<std::ptrdiff_t>(i));
      pos_ += n;
      i += n;
    }
  }

 private:
  void design_filter(const NoiseTrace& shape_db, double fs) {
    const std::size_t L = taps_;
    detail::RealFft design(L);
    auto spec = design.spectrum();
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double f = fs * static_cast<double>(k) / static_cast<double>(L);
      spec[k] = std::sqrt(from_db(shape_db.value_db_at(f)));
    }
    design.inverse();
    auto h0 = design.real();

    const std::size_t N = fft_.size();
    auto padded = fft_.real();
    std::fill(padded.begin(), padded.end(), 0.0);
    for (std::size_t n = 0; n < L; ++n) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(L));
      padded[n] = h0[(n + L / 2) % L] / static_cast<double>(L) * w;
    }
    fft_.forward();
    auto hf = fft_.spectrum();
    response_.assign(hf.begin(), hf.end());
    for (auto& c : response_) c /= static_cast<double>(N);  // fold the inverse-FFT scale in
  }

  void next_block() {
    const std::size_t L = taps_, N = fft_.size();
    auto in = fft_.real();
    std::copy(history_.begin(), history_.end(), in.begin());
    for (std::size_t j = L - 1; j < N; ++j) in[j] = white_();
    std::copy(in.end() - static_cast<std::ptrdiff_t>(L - 1), in.end(), history_.begin());
    fft_.forward();
    auto spec = fft_.spectrum();
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= response_[k];
    fft_.inverse();
    auto outp = fft_.real();
    block_.assign(outp.begin() + static_cast<std::ptrdiff_t>(L - 1), outp.end());
    pos_ = 0;
  }

  std::size_t taps_;
  detail::RealFft fft_;
  detail::GaussianStream white_;
  std::vector<double> history_;
  std::vector<std::complex<double>> response_;
  std::vector<double> block_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Photocurrent synthesis

/// Streams twin-beam photocurrents: the difference channel carries the
/// target noise shape times the SNL of the total flux, the sum channel is
/// white at sum_level_db above the SNL; the two channels are independent.
class PhotocurrentSynthesizer {
 public:
  PhotocurrentSynthesizer(const NoiseTrace& difference_target, double sum_level_db, double mean_flux_probe,
                          double mean_flux_conj, double sample_rate_hz, std::uint64_t rng_seed,
                          std::size_t filter_taps = 4096)
      : fs_(check_inputs(difference_target, sum_level_db, mean_flux_probe, mean_flux_conj, sample_rate_hz)),
        flux_probe_(mean_flux_probe),
        flux_conj_(mean_flux_conj),
        difference_(difference_target, sample_rate_hz, shot_noise_psd(mean_flux_probe + mean_flux_conj), rng_seed,
                    detail::Stream::difference, filter_taps),
        sum_(rng_seed, detail::Stream::sum,
             std::sqrt(from_db(sum_level_db) * shot_noise_psd(mean_flux_probe + mean_flux_conj) * sample_rate_hz / 2.0)) {}

  double sample_rate_hz() const { return fs_; }
  double total_flux() const { return flux_probe_ + flux_conj_; }

  void fill(std::span<double> probe, std::span<double> conj) {
    if (probe.size() != conj.size()) throw std::invalid_argument("PhotocurrentSynthesizer: span lengths differ");
    difference_.fill(probe);  // probe temporarily holds the difference channel
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const double d = probe[i];
      const double s = sum_();
      probe[i] = flux_probe_ + 0.5 * (s + d);
      conj[i] = flux_conj_ + 0.5 * (s - d);
    }
  }

 private:
  static double check_inputs(const NoiseTrace& target, double sum_level_db, double fp, double fc, double fs) {
    target.validate();
    if (!(fs > 0.0) || !std::isfinite(fs)) throw std::invalid_argument("synthesis: sample rate must be > 0");
    if (target.size() == 0 || target.freqs_hz.back() < 0.5 * fs * (1.0 - 1e-9)) {
      throw std::invalid_argument("synthesis: target spectrum must extend to the Nyquist frequency");
    }
    for (double v : target.noise_db) {
      if (!std::isfinite(v)) throw std::invalid_argument("synthesis: target spectrum has non-finite values");
    }
    if (!std::isfinite(sum_level_db)) throw std::invalid_argument("synthesis: sum level must be finite");
    if (!(fp > 0.0) || !(fc > 0.0)) throw std::invalid_argument("synthesis: mean fluxes must be > 0");
    return fs;
  }

  double fs_;
  double flux_probe_;
  double flux_conj_;
  ShapedNoise difference_;
  detail::GaussianStream sum_;
};

inline constexpr std::size_t kMinSynthesisSamples = std::size_t{1} << 14;

inline TimeSeriesPair synthesize_photocurrents(const NoiseTrace& spectrum, double sum_level_db,
                                               double mean_flux_probe, double mean_flux_conj,
                                               double sample_rate_hz, double duration_s, std::uint64_t rng_seed) {
  const std::size_t n = sample_count(sample_rate_hz, duration_s);
  if (n < kMinSynthesisSamples) {
    throw std::invalid_argument("synthesize_photocurrents: need at least 2^14 samples");
  }
  PhotocurrentSynthesizer synth(spectrum, sum_level_db, mean_flux_probe, mean_flux_conj, sample_rate_hz, rng_seed);
  TimeSeriesPair pair{sample_rate_hz, std::vector<double>(n), std::vector<double>(n), spectrum.label};
  synth.fill(pair.probe, pair.conj);
  return pair;
}

/// Adds independent white electronic noise to each arm. The level is set so
/// that the noise on the difference sits electronic_noise_db_below_snl under
/// the SNL of reference_detected_flux.
template <PhotocurrentSource Source>
class WithElectronicNoise {
 public:
  WithElectronicNoise(Source inner, const DetectorSpec& detector, double reference_detected_flux,
                      std::uint64_t rng_seed)
      : inner_(std::move(inner)),
        sigma_(detector.electronic_noise_db_below_snl
                   ? std::sqrt(from_db(-*detector.electronic_noise_db_below_snl) * reference_detected_flux *
                               inner_.sample_rate_hz() / 2.0)
                   : 0.0),
        a_(rng_seed, detail::Stream::electronic_a, sigma_),
        b_(rng_seed, detail::Stream::electronic_b, sigma_) {
    detector.validate();
  }

  double sample_rate_hz() const { return inner_.sample_rate_hz(); }

  void fill(std::span<double> probe, std::span<double> conj) {
    inner_.fill(probe, conj);
    if (sigma_ == 0.0) return;
    for (std::size_t i = 0; i < probe.size(); ++i) {
      probe[i] += a_();
      conj[i] += b_();
    }
  }

 private:
  Source inner_;
  double sigma_;
  detail::GaussianStream a_;
  detail::GaussianStream b_;
};

// ---------------------------------------------------------------------------
// Coherent (SNL) calibration beam

/// A coherent beam of total flux F split 50/50 onto two detectors of
/// efficiency eta. Optional classical intensity noise on the input beam,
/// given as an amplitude multiple of the beam's own shot noise, is common to
/// both arms.
class CoherentSplitSource {
 public:
  CoherentSplitSource(double total_flux, const DetectorSpec& detector, double sample_rate_hz, std::uint64_t rng_seed,
                      double common_mode_amplitude = 0.0)
      : fs_(sample_rate_hz),
        flux_(total_flux),
        eta_(detector.quantum_efficiency),
        classical_(rng_seed, detail::Stream::classical, common_mode_amplitude * std::sqrt(total_flux * sample_rate_hz)),
        arm_a_(rng_seed, detail::Stream::arm_a, std::sqrt(detector.quantum_efficiency * total_flux / 2.0 * sample_rate_hz)),
        arm_b_(rng_seed, detail::Stream::arm_b, std::sqrt(detector.quantum_efficiency * total_flux / 2.0 * sample_rate_hz)),
        common_mode_(common_mode_amplitude > 0.0) {
    detector.validate();
    if (!(total_flux > 0.0) || !std::isfinite(total_flux)) {
      throw std::invalid_argument("CoherentSplitSource: flux must be > 0");
    }
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("CoherentSplitSource: sample rate must be > 0");
    if (!(common_mode_amplitude >= 0.0)) throw std::invalid_argument("CoherentSplitSource: noise amplitude must be >= 0");
  }

  double sample_rate_hz() const { return fs_; }
  double detected_flux() const { return eta_ * flux_; }

  void fill(std::span<double> probe, std::span<double> conj) {
    if (probe.size() != conj.size()) throw std::invalid_argument("CoherentSplitSource: span lengths differ");
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const double input = flux_ + (common_mode_ ? classical_() : 0.0);
      const double arm_mean = 0.5 * eta_ * input;
      probe[i] = arm_mean + arm_a_();
      conj[i] = arm_mean + arm_b_();
    }
  }

 private:
  double fs_;
  double flux_;
  double eta_;
  detail::GaussianStream classical_;
  detail::GaussianStream arm_a_;
  detail::GaussianStream arm_b_;
  bool common_mode_;
};

// ---------------------------------------------------------------------------
// Welch estimator

/// Streaming Welch estimator: periodic Hann window, per-segment mean removal,
/// one-sided density scaling.
class WelchAccumulator {
 public:
  WelchAccumulator(double sample_rate_hz, const WelchOptions& options = {})
      : fs_(sample_rate_hz), opt_(options), fft_(validated(options).segment_length) {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
      throw std::invalid_argument("welch: sample rate must be > 0");
    }
    const std::size_t n = opt_.segment_length;
    window_.resize(n);
    window_power_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
      window_power_ += window_[i] * window_[i];
    }
    buffer_.resize(n);
    accum_.assign(n / 2 + 1, 0.0);
  }

  void push(std::span<const double> samples) {
    const std::size_t n = opt_.segment_length;
    std::size_t i = 0;
    while (i < samples.size()) {
      const std::size_t take = std::min(n - fill_, samples.size() - i);
      std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(i), take, buffer_.begin() + static_cast<std::ptrdiff_t>(fill_));
      fill_ += take;
      i += take;
      if (fill_ == n) {
        process_segment();
        const std::size_t keep = n - opt_.hop();
        std::copy(buffer_.end() - static_cast<std::ptrdiff_t>(keep), buffer_.end(), buffer_.begin());
        fill_ = keep;
      }
    }
  }

  std::size_t segments() const { return segments_; }

  PowerSpectrum result() const {
    if (segments_ < 2) throw std::invalid_argument("welch: series too short, need at least two segments");
    const std::size_t n = opt_.segment_length;
    const double scale = 1.0 / (fs_ * window_power_ * static_cast<double>(segments_));
    PowerSpectrum out;
    out.sample_rate_hz = fs_;
    out.segment_length = n;
    out.segments = segments_;
    out.freqs_hz = uniform_grid(fs_ / static_cast<double>(n), n / 2);
    out.psd.resize(n / 2);
    for (std::size_t k = 1; k <= n / 2; ++k) {
      out.psd[k - 1] = accum_[k] * scale * (k == n / 2 ? 1.0 : 2.0);
    }
    return out;
  }

 private:
  static const WelchOptions& validated(const WelchOptions& o) {
    o.validate();
    return o;
  }

  void process_segment() {
    const std::size_t n = opt_.segment_length;
    double mean = 0.0;
    for (double v : buffer_) mean += v;
    mean /= static_cast<double>(n);
    auto in = fft_.real();
    for (std::size_t i = 0; i < n; ++i) in[i] = (buffer_[i] - mean) * window_[i];
    fft_.forward();
    auto spec = fft_.spectrum();
    for (std::size_t k = 0; k < spec.size(); ++k) accum_[k] += std::norm(spec[k]);
    ++segments_;
  }

  double fs_;
  WelchOptions opt_;
  detail::RealFft fft_;
  std::vector<double> window_;
  double window_power_ = 0.0;
  std::vector<double> buffer_;
  std::size_t fill_ = 0;
  std::vector<double> accum_;
  std::size_t segments_ = 0;
};

inline PowerSpectrum welch_psd(std::span<const double> series, double sample_rate_hz, std::size_t segment_length,
                               double overlap_fraction) {
  WelchAccumulator acc(sample_rate_hz, WelchOptions{segment_length, overlap_fraction});
  acc.push(series);
  return acc.result();
}

/// Streams total_samples from a source and returns the Welch PSD of probe - conj.
template <PhotocurrentSource Source>
PowerSpectrum difference_psd(Source& source, std::size_t total_samples, const WelchOptions& options = {}) {
  WelchAccumulator acc(source.sample_rate_hz(), options);
  constexpr std::size_t chunk = std::size_t{1} << 16;
  std::vector<double> a(chunk), b(chunk);
  std::size_t done = 0;
  while (done < total_samples) {
    const std::size_t n = std::min(chunk, total_samples - done);
    std::span<double> sa(a.data(), n), sb(b.data(), n);
    source.fill(sa, sb);
    for (std::size_t i = 0; i < n; ++i) a[i] -= b[i];
    acc.push(sa);
    done += n;
  }
  return acc.result();
}

// ---------------------------------------------------------------------------
// SNL calibration and reporting

struct CalibrationOptions {
  double common_mode_amplitude = 0.0;
  WelchOptions welch;
};

/// Records a 50/50-split coherent beam; the pair is what the balanced detector sees.
inline TimeSeriesPair simulate_coherent_split(double coherent_total_flux, const DetectorSpec& detector,
                                              double sample_rate_hz, double duration_s, std::uint64_t rng_seed,
                                              double common_mode_amplitude = 0.0) {
  const std::size_t n = sample_count(sample_rate_hz, duration_s);
  WithElectronicNoise<CoherentSplitSource> src(
      CoherentSplitSource(coherent_total_flux, detector, sample_rate_hz, rng_seed, common_mode_amplitude), detector,
      detector.quantum_efficiency * coherent_total_flux, rng_seed);
  TimeSeriesPair pair{sample_rate_hz, std::vector<double>(n), std::vector<double>(n), "snl"};
  src.fill(pair.probe, pair.conj);
  return pair;
}

/// Absolute SNL reference: Welch PSD of the balanced difference of a split
/// coherent beam with the given total flux.
inline PowerSpectrum calibrate_snl(double coherent_total_flux, const DetectorSpec& detector, double sample_rate_hz,
                                   double duration_s, std::uint64_t rng_seed, const CalibrationOptions& options = {}) {
  const std::size_t n = sample_count(sample_rate_hz, duration_s);
  WithElectronicNoise<CoherentSplitSource> src(
      CoherentSplitSource(coherent_total_flux, detector, sample_rate_hz, rng_seed, options.common_mode_amplitude),
      detector, detector.quantum_efficiency * coherent_total_flux, rng_seed);
  return difference_psd(src, n, options.welch);
}

struct SqueezingReport {
  NoiseTrace trace;  // normalized to the SNL, restricted to the analysis band
  double band_average_db = 0.0;
};

inline SqueezingReport squeezing_report(const PowerSpectrum& difference, const PowerSpectrum& snl,
                                        const FrequencyBand& band, std::string label = "squeezing") {
  band.validate();
  if (difference.freqs_hz.size() != snl.freqs_hz.size()) {
    throw std::invalid_argument("squeezing_report: signal and SNL spectra use different frequency grids");
  }
  for (std::size_t i = 0; i < snl.freqs_hz.size(); ++i) {
    if (std::abs(difference.freqs_hz[i] - snl.freqs_hz[i]) > 1e-9 * snl.freqs_hz[i]) {
      throw std::invalid_argument("squeezing_report: signal and SNL spectra use different frequency grids");
    }
  }
  if (snl.freqs_hz.empty() || band.high_hz > snl.freqs_hz.back() * (1.0 + 1e-12)) {
    throw std::invalid_argument("squeezing_report: analysis band extends beyond the Nyquist frequency");
  }
  SqueezingReport report;
  report.trace.label = std::move(label);
  double sum = 0.0;
  for (std::size_t i = 0; i < snl.freqs_hz.size(); ++i) {
    if (!band.contains(snl.freqs_hz[i])) continue;
    if (!(snl.psd[i] > 0.0)) throw std::invalid_argument("squeezing_report: SNL reference is zero inside the band");
    const double ratio = difference.psd[i] / snl.psd[i];
    report.trace.freqs_hz.push_back(snl.freqs_hz[i]);
    report.trace.noise_db.push_back(to_db(ratio));
    sum += ratio;
  }
  if (report.trace.size() == 0) throw std::invalid_argument("squeezing_report: no frequency bins inside the band");
  report.band_average_db = to_db(sum / static_cast<double>(report.trace.size()));
  return report;
}

inline SqueezingReport squeezing_report(const TimeSeriesPair& pair, const PowerSpectrum& snl,
                                        const FrequencyBand& band) {
  pair.validate();
  if (std::abs(pair.sample_rate_hz - snl.sample_rate_hz) > 1e-9 * snl.sample_rate_hz) {
    throw std::invalid_argument("squeezing_report: sample rate differs from the SNL calibration");
  }
  const auto d = pair.difference();
  WelchOptions opt;
  opt.segment_length = snl.segment_length;
  return squeezing_report(welch_psd(d, pair.sample_rate_hz, opt.segment_length, opt.overlap_fraction), snl, band,
                          pair.label);
}

// ---------------------------------------------------------------------------
// CSV interchange: a "sample_rate_hz,<value>" line, then "index,probe,conj".

inline void write_csv(const TimeSeriesPair& pair, const std::filesystem::path& path) {
  pair.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "sample_rate_hz," << detail::format_double(pair.sample_rate_hz) << '\n' << "index,probe,conj\n";
  for (std::size_t i = 0; i < pair.size(); ++i) {
    out << i << ',' << detail::format_double(pair.probe[i]) << ',' << detail::format_double(pair.conj[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

inline TimeSeriesPair read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  auto fail = [&](std::size_t line, const std::string& why) {
    return std::invalid_argument(path.string() + ":" + std::to_string(line) + ": " + why);
  };
  std::string line;
  TimeSeriesPair pair;
  pair.label = path.stem().string();

  if (!std::getline(in, line)) throw fail(1, "missing sample_rate_hz header");
  const std::string key = "sample_rate_hz,";
  if (line.rfind(key, 0) != 0) throw fail(1, "expected 'sample_rate_hz,<value>'");
  try {
    pair.sample_rate_hz = detail::parse_double(std::string_view(line).substr(key.size()));
  } catch (const std::invalid_argument& e) {
    throw fail(1, e.what());
  }
  if (!std::getline(in, line)) throw fail(2, "missing column header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index,probe,conj") throw fail(2, "expected column header 'index,probe,conj'");

  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw fail(lineno, "expected three columns");
    try {
      const double idx = detail::parse_double(std::string_view(line).substr(0, c1));
      if (idx != static_cast<double>(pair.probe.size())) throw fail(lineno, "index out of sequence");
      pair.probe.push_back(detail::parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1)));
      pair.conj.push_back(detail::parse_double(std::string_view(line).substr(c2 + 1)));
    } catch (const std::invalid_argument& e) {
      if (std::string(e.what()).rfind(path.string(), 0) == 0) throw;
      throw fail(lineno, e.what());
    }
  }
  pair.validate();
  return pair;
}

}  // namespace twinbeam
