// coupled_twin_beams.hpp — twin beams propagated through per-arm lossy coupling
// at the covariance level. Handles unequal probe/conjugate efficiencies.

#pragma once

#include "twinbeam/fwm_source.hpp"
#include "twinbeam/gaussian_state.hpp"
#include "twinbeam/noise_budget.hpp"

namespace twinbeam {

/// Bright-seed amplitude used when only normalized noise matters.
inline constexpr double kBrightSeedAmplitude = 1e6;

/// Mean occupancy of the port mode whose variance is eps N_th + (1 - eps).
inline double port_occupancy(double epsilon, double n_th) { return 0.5 * (port_noise(epsilon, n_th) - 1.0); }

inline GaussianState couple_twin_beams(const GaussianState& beams, const CouplingBudget& budget) {
  budget.validate();
  const double n_bar = port_occupancy(budget.epsilon, budget.n_th);
  auto out = loss_channel(beams, kProbeMode, {budget.eta_probe, n_bar});
  return loss_channel(out, kConjugateMode, {budget.eta_conj, n_bar});
}

/// Normalized intensity-difference noise after coupling, for a source whose
/// ideal squeezing is s0 (bright-seed linearization).
inline SqueezingLevel covariance_squeezing(const SqueezingLevel& s0, const CouplingBudget& budget,
                                           double seed_amplitude = kBrightSeedAmplitude) {
  TwinBeamSpec spec;
  spec.gain = gain_for_squeezing(s0.linear());
  spec.seed_amplitude = {seed_amplitude, 0.0};
  const auto coupled = couple_twin_beams(make_twin_beams(spec), budget);
  return SqueezingLevel::from_linear(normalized_intensity_difference(coupled, kProbeMode, kConjugateMode));
}

}  // namespace twinbeam
