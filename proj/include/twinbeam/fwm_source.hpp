// fwm_source.hpp — phenomenological seeded four-wave-mixing source.
//
// The FWM medium is represented as a two-mode squeezer of intensity gain G
// acting on a coherent seed in the probe mode and vacuum in the conjugate.

#pragma once

#include "twinbeam/gaussian_state.hpp"
#include "twinbeam/noise_trace.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>

namespace twinbeam {

inline constexpr std::size_t kProbeMode = 0;
inline constexpr std::size_t kConjugateMode = 1;

/// Ideal intensity-difference squeezing of bright twin beams, 1/(2G - 1).
inline double ideal_squeezing(double gain) {
  if (!(gain >= 1.0) || !std::isfinite(gain)) throw std::invalid_argument("ideal_squeezing: gain must be >= 1");
  return 1.0 / (2.0 * gain - 1.0);
}

/// Inverse of ideal_squeezing.
inline double gain_for_squeezing(double s0_linear) {
  if (!(s0_linear > 0.0 && s0_linear <= 1.0)) {
    throw std::invalid_argument("gain_for_squeezing: squeezing must lie in (0, 1]");
  }
  return 0.5 * (1.0 / s0_linear + 1.0);
}

struct TwinBeamSpec {
  double gain = 1.0;
  std::complex<double> seed_amplitude{0.0, 0.0};
  double bandwidth_hz = 15e6;
  double probe_detuning_hz = 3.04e9;  // seed downshift from the pump; informational

  void validate() const {
    if (!(gain >= 1.0) || !std::isfinite(gain)) throw std::invalid_argument("TwinBeamSpec: gain must be >= 1");
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
      throw std::invalid_argument("TwinBeamSpec: bandwidth must be > 0");
    }
    if (!std::isfinite(seed_amplitude.real()) || !std::isfinite(seed_amplitude.imag())) {
      throw std::invalid_argument("TwinBeamSpec: non-finite seed amplitude");
    }
  }
};

/// Pump power to gain: G(P) = 1 + (G_opt - 1) (P / P_opt)^k, flat above P_opt.
struct PumpGainMap {
  double p_opt_mw = 135.0;
  double g_at_popt = 0.5 * (std::pow(10.0, 0.72) + 1.0);  // ideal squeezing of -7.2 dB
  double exponent = 2.0;

  void validate() const {
    if (!(p_opt_mw > 0.0)) throw std::invalid_argument("PumpGainMap: p_opt_mw must be > 0");
    if (!(g_at_popt >= 1.0)) throw std::invalid_argument("PumpGainMap: g_at_popt must be >= 1");
    if (!(exponent > 0.0)) throw std::invalid_argument("PumpGainMap: exponent must be > 0");
  }
};

inline double gain_from_pump(double power_mw, const PumpGainMap& map = {}) {
  map.validate();
  if (!(power_mw >= 0.0) || !std::isfinite(power_mw)) {
    throw std::invalid_argument("gain_from_pump: pump power must be finite and >= 0");
  }
  const double x = std::min(power_mw / map.p_opt_mw, 1.0);
  return 1.0 + (map.g_at_popt - 1.0) * std::pow(x, map.exponent);
}

/// Probe in mode 0, conjugate in mode 1.
inline GaussianState make_twin_beams(const TwinBeamSpec& spec) {
  spec.validate();
  const double r = std::acosh(std::sqrt(spec.gain));
  const auto seeded = displace(vacuum(2), kProbeMode, spec.seed_amplitude);
  return apply_symplectic(seeded, two_mode_squeezer(r, kProbeMode, kConjugateMode));
}

/// Single-pole roll-off toward the SNL:
/// S(f) = 1 - (1 - S0) / (1 + (f / f_c)^2), S0 = 1/(2G - 1).
inline double squeezing_at(double gain, double freq_hz, double bandwidth_hz) {
  const double s0 = ideal_squeezing(gain);
  const double x = freq_hz / bandwidth_hz;
  return 1.0 - (1.0 - s0) / (1.0 + x * x);
}

inline NoiseTrace squeezing_spectrum(double gain, std::span<const double> freqs_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
    throw std::invalid_argument("squeezing_spectrum: bandwidth must be > 0");
  }
  ideal_squeezing(gain);
  NoiseTrace trace{{freqs_hz.begin(), freqs_hz.end()}, {}, "fwm_source"};
  trace.noise_db.reserve(freqs_hz.size());
  for (double f : freqs_hz) {
    if (!(f > 0.0) || !std::isfinite(f)) throw std::invalid_argument("squeezing_spectrum: frequencies must be > 0");
    trace.noise_db.push_back(to_db(squeezing_at(gain, f, bandwidth_hz)));
  }
  return trace;
}

}  // namespace twinbeam
