// noise_budget.hpp — squeezing degradation through a lossy coupling port that
// admits both vacuum and thermal noise, and its inversions.

#pragma once

#include "twinbeam/noise_trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace twinbeam {

/// Thrown when a formula is evaluated outside the regime it is stated for.
class UnsupportedRegime : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Normalized noise variance (SNL = 1) carried together with its dB value.
class SqueezingLevel {
 public:
  static SqueezingLevel from_linear(double linear) {
    if (!(linear > 0.0) || !std::isfinite(linear)) {
      throw std::invalid_argument("SqueezingLevel: linear value must be finite and > 0");
    }
    return SqueezingLevel(linear, to_db(linear));
  }
  static SqueezingLevel from_db(double db) {
    if (!std::isfinite(db)) throw std::invalid_argument("SqueezingLevel: dB value must be finite");
    return SqueezingLevel(twinbeam::from_db(db), db);
  }

  double linear() const { return linear_; }
  double db() const { return db_; }

 private:
  SqueezingLevel(double linear, double db) : linear_(linear), db_(db) {}
  double linear_;
  double db_;
};

struct CouplingBudget {
  double eta_probe = 1.0;
  double eta_conj = 1.0;
  double epsilon = 0.0;
  double n_th = 1.0;  // the vacuum contribution N_v = 1 is implicit

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("CouplingBudget: ") + name + " must lie in [0, 1]");
    };
    unit(eta_probe, "eta_probe");
    unit(eta_conj, "eta_conj");
    unit(epsilon, "epsilon");
    if (!(n_th >= 1.0) || !std::isfinite(n_th)) throw std::invalid_argument("CouplingBudget: n_th must be >= 1");
  }
  bool is_symmetric() const { return eta_probe == eta_conj; }

  static CouplingBudget symmetric(double eta, double epsilon, double n_th) {
    return {eta, eta, epsilon, n_th};
  }
};

/// Noise admitted through the unused port: eps N_th + (1 - eps) N_v.
inline double port_noise(double epsilon, double n_th) { return epsilon * n_th + (1.0 - epsilon); }

inline SqueezingLevel expected_squeezing(const SqueezingLevel& s0, const CouplingBudget& budget) {
  budget.validate();
  if (!budget.is_symmetric()) {
    throw UnsupportedRegime(
        "expected_squeezing: the budget formula holds only for equal probe and conjugate efficiencies; "
        "use the covariance-level loss channel for asymmetric coupling");
  }
  const double eta = budget.eta_probe;
  return SqueezingLevel::from_linear(eta * s0.linear() + (1.0 - eta) * port_noise(budget.epsilon, budget.n_th));
}

/// Thermal fraction that reproduces a measured squeezing level.
inline double fit_epsilon(const SqueezingLevel& s0, const SqueezingLevel& measured, double eta, double n_th) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("fit_epsilon: eta must lie in (0, 1)");
  if (!(n_th > 1.0) || !std::isfinite(n_th)) throw std::invalid_argument("fit_epsilon: n_th must be > 1");
  const double floor = eta * s0.linear() + (1.0 - eta);
  const double ceiling = eta * s0.linear() + (1.0 - eta) * n_th;
  const double s = measured.linear();
  const double slack = 1e-12 * std::max(1.0, ceiling);
  if (s < floor - slack || s > ceiling + slack) {
    throw std::out_of_range("fit_epsilon: measured level " + std::to_string(measured.db()) +
                            " dB is outside the attainable band [" + std::to_string(to_db(floor)) + ", " +
                            std::to_string(to_db(ceiling)) + "] dB");
  }
  const double eps = (s - floor) / ((1.0 - eta) * (n_th - 1.0));
  return std::clamp(eps, 0.0, 1.0);
}

/// Coupling efficiency needed to reach a target level.
inline double required_eta(const SqueezingLevel& s0, const SqueezingLevel& target, double epsilon, double n_th) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("required_eta: epsilon must lie in [0, 1]");
  if (!(n_th >= 1.0) || !std::isfinite(n_th)) throw std::invalid_argument("required_eta: n_th must be >= 1");
  const double mix = port_noise(epsilon, n_th);
  const double denom = mix - s0.linear();
  if (target.linear() == s0.linear()) return 1.0;
  if (denom == 0.0) throw std::out_of_range("required_eta: port noise equals the initial level; eta is undetermined");
  const double eta = (mix - target.linear()) / denom;
  const double slack = 1e-12;
  if (eta < -slack || eta > 1.0 + slack) {
    throw std::out_of_range("required_eta: target " + std::to_string(target.db()) + " dB is not attainable");
  }
  return std::clamp(eta, 0.0, 1.0);
}

}  // namespace twinbeam
