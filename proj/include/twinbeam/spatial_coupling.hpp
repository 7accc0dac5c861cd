// spatial_coupling.hpp — far-field coherence areas and fiber mode matching.

#pragma once

#include "twinbeam/noise_budget.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace twinbeam {

enum class Arm { probe, conjugate };

/// Beam and coupling-optics geometry. Waists are 1/e^2 diameters.
struct BeamGeometry {
  double wavelength_nm = 795.0;
  double pump_waist_mm = 0.6;
  double seed_waist_mm = 0.6;
  double cell_length_mm = 12.0;
  double intersection_angle_deg = 0.4;
  double lens_focal_mm_probe = 100.0;
  double lens_focal_mm_conj = 125.0;

  void validate() const {
    for (double v : {wavelength_nm, pump_waist_mm, seed_waist_mm, cell_length_mm, intersection_angle_deg,
                     lens_focal_mm_probe, lens_focal_mm_conj}) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("BeamGeometry: all fields must be positive");
    }
    if (!(intersection_angle_deg < 5.0)) throw std::invalid_argument("BeamGeometry: intersection angle must be < 5 deg");
  }
};

/// Far-field diffraction diameter of the pump waist behind a lens of focal
/// length f: d_c = (2 lambda f / pi) / w_pump, with w_pump the waist radius.
inline double coherence_area_diameter(double wavelength_nm, double focal_mm, double pump_waist_radius_mm) {
  if (!(wavelength_nm > 0.0) || !(focal_mm > 0.0) || !(pump_waist_radius_mm > 0.0)) {
    throw std::invalid_argument("coherence_area_diameter: inputs must be positive");
  }
  const double lambda_mm = wavelength_nm * 1e-6;
  return 2.0 * lambda_mm * focal_mm / (std::numbers::pi * pump_waist_radius_mm);
}

inline double coherence_area_diameter(const BeamGeometry& geom, Arm arm = Arm::probe) {
  geom.validate();
  const double f = arm == Arm::probe ? geom.lens_focal_mm_probe : geom.lens_focal_mm_conj;
  return coherence_area_diameter(geom.wavelength_nm, f, 0.5 * geom.pump_waist_mm);
}

/// Power overlap of two fundamental Gaussian modes (waist radii w1, w2,
/// lateral offset d): (2 w1 w2 / (w1^2 + w2^2))^2 exp(-2 d^2 / (w1^2 + w2^2)).
inline double gaussian_mode_overlap(double waist1_mm, double waist2_mm, double lateral_offset_mm) {
  if (!(waist1_mm > 0.0) || !(waist2_mm > 0.0)) {
    throw std::invalid_argument("gaussian_mode_overlap: waists must be positive");
  }
  if (!std::isfinite(lateral_offset_mm)) throw std::invalid_argument("gaussian_mode_overlap: non-finite offset");
  const double sum_sq = waist1_mm * waist1_mm + waist2_mm * waist2_mm;
  const double size_term = 2.0 * waist1_mm * waist2_mm / sum_sq;
  return size_term * size_term * std::exp(-2.0 * lateral_offset_mm * lateral_offset_mm / sum_sq);
}

/// How one beam's fiber mode is populated: the bright correlated mode plus
/// any uncorrelated (thermal) modes that also couple.
struct ModeOverlapSet {
  double bright_overlap = 1.0;
  std::vector<double> uncorrelated_overlaps;
  double thermal_occupancy = 0.0;

  double uncorrelated_total() const {
    return std::accumulate(uncorrelated_overlaps.begin(), uncorrelated_overlaps.end(), 0.0);
  }

  void validate() const {
    if (!(bright_overlap >= 0.0 && bright_overlap <= 1.0)) {
      throw std::invalid_argument("ModeOverlapSet: bright overlap must lie in [0, 1]");
    }
    for (double u : uncorrelated_overlaps) {
      if (!(u >= 0.0)) throw std::invalid_argument("ModeOverlapSet: uncorrelated overlaps must be >= 0");
    }
    if (!(thermal_occupancy >= 0.0) || !std::isfinite(thermal_occupancy)) {
      throw std::invalid_argument("ModeOverlapSet: thermal occupancy must be >= 0");
    }
    if (bright_overlap + uncorrelated_total() > 1.0 + 1e-12) {
      throw std::invalid_argument("ModeOverlapSet: total overlap exceeds 1");
    }
  }

  /// Thermal share of the unused port; 0 when the bright mode couples fully.
  double thermal_fraction() const {
    if (bright_overlap >= 1.0) return 0.0;
    return std::min(1.0, uncorrelated_total() / (1.0 - bright_overlap));
  }
};

/// Occupancy that makes the thermal variance 2n + 1 equal to 1/S0.
inline double default_thermal_occupancy(double s0_linear) {
  if (!(s0_linear > 0.0 && s0_linear <= 1.0)) {
    throw std::invalid_argument("default_thermal_occupancy: S0 must lie in (0, 1]");
  }
  return 0.5 * (1.0 / s0_linear - 1.0);
}

/// Collapse per-arm overlap sets into the aggregate budget. The budget has a
/// single (epsilon, N_th): epsilon is the mean of the two arms' thermal
/// fractions and the occupancy is weighted by each arm's uncorrelated overlap.
inline CouplingBudget effective_budget(const ModeOverlapSet& probe, const ModeOverlapSet& conj) {
  probe.validate();
  conj.validate();
  CouplingBudget b;
  b.eta_probe = probe.bright_overlap;
  b.eta_conj = conj.bright_overlap;
  b.epsilon = 0.5 * (probe.thermal_fraction() + conj.thermal_fraction());
  const double wp = probe.uncorrelated_total(), wc = conj.uncorrelated_total();
  const double occupancy = (wp + wc) > 0.0 ? (wp * probe.thermal_occupancy + wc * conj.thermal_occupancy) / (wp + wc)
                                           : 0.5 * (probe.thermal_occupancy + conj.thermal_occupancy);
  b.n_th = 2.0 * occupancy + 1.0;
  return b;
}

}  // namespace twinbeam
