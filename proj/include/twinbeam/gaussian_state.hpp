// gaussian_state.hpp — multimode Gaussian states in the quadrature picture,
// symplectic operations and Gaussian loss channels.
//
// Convention: quadratures ordered (x1, p1, ..., xn, pn); vacuum variance is 1
// per quadrature, so a coherent amplitude alpha has mean (2 Re alpha, 2 Im alpha)
// and mean photon number |alpha|^2.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twinbeam {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kUncertaintySlack = 1e-9;
inline constexpr double kSymplecticTolerance = 1e-10;

/// Standard symplectic form: block diagonal with [[0, 1], [-1, 0]] per mode.
inline Matrix symplectic_form(std::size_t n_modes) {
  Matrix omega = Matrix::Zero(2 * n_modes, 2 * n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

inline bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTolerance) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Symplectic eigenvalues of a symmetric positive-definite 2n x 2n matrix,
/// ascending. Computed from the spectrum of (V^1/2 Omega V^1/2)^T (V^1/2 Omega V^1/2),
/// whose eigenvalues are the squared symplectic eigenvalues, each twice.
inline std::vector<double> symplectic_eigenvalues(const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() % 2 != 0 || cov.rows() == 0) {
    throw std::invalid_argument("symplectic_eigenvalues: covariance must be 2n x 2n");
  }
  const auto n = static_cast<std::size_t>(cov.rows() / 2);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("symplectic_eigenvalues: eigen decomposition failed");
  }
  if (es.eigenvalues().minCoeff() <= 0.0) {
    // Not positive definite; the uncertainty relation is already violated.
    return std::vector<double>(n, 0.0);
  }
  const Matrix sqrt_cov =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const Matrix m = sqrt_cov * symplectic_form(n) * sqrt_cov;
  Eigen::SelfAdjointEigenSolver<Matrix> es2(m.transpose() * m);
  std::vector<double> squared(es2.eigenvalues().data(), es2.eigenvalues().data() + es2.eigenvalues().size());
  std::sort(squared.begin(), squared.end());
  std::vector<double> nu;
  nu.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    nu.push_back(std::sqrt(std::max(0.0, 0.5 * (squared[2 * k] + squared[2 * k + 1]))));
  }
  return nu;
}

class GaussianState {
 public:
  /// Validated construction: dimensions, symmetry and the uncertainty relation.
  GaussianState(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() == 0 || cov_.rows() % 2 != 0 || cov_.rows() != cov_.cols()) {
      throw std::invalid_argument("GaussianState: covariance must be a non-empty 2n x 2n matrix");
    }
    if (mean_.size() != cov_.rows()) {
      throw std::invalid_argument("GaussianState: mean length must equal covariance dimension");
    }
    if (!mean_.allFinite() || !cov_.allFinite()) {
      throw std::invalid_argument("GaussianState: non-finite entries");
    }
    if (!is_symmetric(cov_)) {
      throw std::invalid_argument("GaussianState: covariance is not symmetric");
    }
    cov_ = 0.5 * (cov_ + cov_.transpose());
    if (min_symplectic_eigenvalue() < 1.0 - kUncertaintySlack) {
      throw std::invalid_argument("GaussianState: covariance violates the uncertainty relation");
    }
  }

  std::size_t n_modes() const { return static_cast<std::size_t>(mean_.size() / 2); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  std::vector<double> symplectic_eigenvalues() const { return twinbeam::symplectic_eigenvalues(cov_); }
  double min_symplectic_eigenvalue() const {
    const auto nu = symplectic_eigenvalues();
    return *std::min_element(nu.begin(), nu.end());
  }

  void check_mode(std::size_t mode, const char* who) const {
    if (mode >= n_modes()) {
      throw std::invalid_argument(std::string(who) + ": mode index " + std::to_string(mode) +
                                  " out of range for " + std::to_string(n_modes()) + "-mode state");
    }
  }

  // Operations in this header preserve every invariant algebraically, so they
  // skip the eigen-decomposition on construction.
  struct Unchecked {};
  GaussianState(Unchecked, Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    cov_ = 0.5 * (cov_ + cov_.transpose());
  }

 private:
  Vector mean_;
  Matrix cov_;
};

/// A symplectic matrix acting on a designated, ordered subset of modes.
class SymplecticOp {
 public:
  SymplecticOp(Matrix matrix, std::vector<std::size_t> mode_indices)
      : matrix_(std::move(matrix)), modes_(std::move(mode_indices)) {
    const auto k = modes_.size();
    if (k == 0 || matrix_.rows() != static_cast<Eigen::Index>(2 * k) || matrix_.cols() != matrix_.rows()) {
      throw std::invalid_argument("SymplecticOp: matrix must be 2k x 2k for k mode indices");
    }
    auto sorted = modes_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("SymplecticOp: mode indices must be distinct");
    }
    if (!matrix_.allFinite()) throw std::invalid_argument("SymplecticOp: non-finite matrix");
    const Matrix omega = symplectic_form(k);
    if ((matrix_ * omega * matrix_.transpose() - omega).cwiseAbs().maxCoeff() > kSymplecticTolerance) {
      throw std::invalid_argument("SymplecticOp: matrix is not symplectic");
    }
  }

  const Matrix& matrix() const { return matrix_; }
  const std::vector<std::size_t>& mode_indices() const { return modes_; }

  /// Same matrix retargeted to other modes.
  SymplecticOp on(std::vector<std::size_t> modes) const { return {matrix_, std::move(modes)}; }

  /// Composition: (a * b) acts as b first, then a. Both must act on the same modes.
  friend SymplecticOp operator*(const SymplecticOp& a, const SymplecticOp& b) {
    if (a.modes_ != b.modes_) {
      throw std::invalid_argument("SymplecticOp: composition requires identical mode indices");
    }
    return {a.matrix_ * b.matrix_, a.modes_};
  }

  /// Embedding into an n-mode identity.
  Matrix embedded(std::size_t n_modes) const {
    Matrix full = Matrix::Identity(2 * n_modes, 2 * n_modes);
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      for (std::size_t j = 0; j < modes_.size(); ++j) {
        full.block<2, 2>(2 * modes_[i], 2 * modes_[j]) = matrix_.block<2, 2>(2 * i, 2 * j);
      }
    }
    return full;
  }

 private:
  Matrix matrix_;
  std::vector<std::size_t> modes_;
};

struct LossChannelSpec {
  double transmissivity = 1.0;
  double excess_thermal_occupancy = 0.0;

  void validate() const {
    if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
      throw std::invalid_argument("LossChannelSpec: transmissivity must lie in [0, 1]");
    }
    if (!(excess_thermal_occupancy >= 0.0) || !std::isfinite(excess_thermal_occupancy)) {
      throw std::invalid_argument("LossChannelSpec: thermal occupancy must be finite and >= 0");
    }
  }
};

// ---------------------------------------------------------------------------
// States

inline GaussianState vacuum(std::size_t n_modes) {
  if (n_modes == 0) throw std::invalid_argument("vacuum: n_modes must be >= 1");
  return {GaussianState::Unchecked{}, Vector::Zero(2 * n_modes), Matrix::Identity(2 * n_modes, 2 * n_modes)};
}

/// Single-mode thermal state with mean occupancy n_bar.
inline GaussianState thermal(double n_bar) {
  if (!(n_bar >= 0.0) || !std::isfinite(n_bar)) throw std::invalid_argument("thermal: occupancy must be >= 0");
  return {GaussianState::Unchecked{}, Vector::Zero(2), (2.0 * n_bar + 1.0) * Matrix::Identity(2, 2)};
}

inline GaussianState displace(const GaussianState& state, std::size_t mode, std::complex<double> alpha) {
  state.check_mode(mode, "displace");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw std::invalid_argument("displace: non-finite amplitude");
  }
  Vector mean = state.mean();
  mean(2 * mode) += 2.0 * alpha.real();
  mean(2 * mode + 1) += 2.0 * alpha.imag();
  return {GaussianState::Unchecked{}, std::move(mean), state.cov()};
}

/// Direct sum: modes of b follow the modes of a.
inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  const auto na = a.mean().size(), nb = b.mean().size();
  Vector mean(na + nb);
  mean << a.mean(), b.mean();
  Matrix cov = Matrix::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return {GaussianState::Unchecked{}, std::move(mean), std::move(cov)};
}

/// Reduced state on the listed modes (block deletion of everything else).
inline GaussianState reduce(const GaussianState& state, const std::vector<std::size_t>& keep) {
  if (keep.empty()) throw std::invalid_argument("reduce: at least one mode must be kept");
  for (auto m : keep) state.check_mode(m, "reduce");
  const auto k = keep.size();
  Vector mean(2 * k);
  Matrix cov(2 * k, 2 * k);
  for (std::size_t i = 0; i < k; ++i) {
    mean.segment<2>(2 * i) = state.mean().segment<2>(2 * keep[i]);
    for (std::size_t j = 0; j < k; ++j) {
      cov.block<2, 2>(2 * i, 2 * j) = state.cov().block<2, 2>(2 * keep[i], 2 * keep[j]);
    }
  }
  return {GaussianState::Unchecked{}, std::move(mean), std::move(cov)};
}

/// Trace out a single mode.
inline GaussianState partial_trace(const GaussianState& state, std::size_t mode) {
  state.check_mode(mode, "partial_trace");
  if (state.n_modes() == 1) throw std::invalid_argument("partial_trace: cannot trace out the only mode");
  std::vector<std::size_t> keep;
  for (std::size_t m = 0; m < state.n_modes(); ++m) {
    if (m != mode) keep.push_back(m);
  }
  return reduce(state, keep);
}

// ---------------------------------------------------------------------------
// Symplectic operators

/// Two-mode squeezer: x-x correlated, p-p anticorrelated.
inline SymplecticOp two_mode_squeezer(double r, std::size_t mode_a = 0, std::size_t mode_b = 1) {
  if (!std::isfinite(r)) throw std::invalid_argument("two_mode_squeezer: r must be finite");
  const double c = std::cosh(r), s = std::sinh(r);
  Matrix m(4, 4);
  m << c, 0, s, 0,
       0, c, 0, -s,
       s, 0, c, 0,
       0, -s, 0, c;
  return {std::move(m), {mode_a, mode_b}};
}

/// Beamsplitter with power transmissivity T (cos theta = sqrt T).
inline SymplecticOp beamsplitter(double transmissivity, std::size_t mode_a = 0, std::size_t mode_b = 1) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw std::invalid_argument("beamsplitter: transmissivity must lie in [0, 1]");
  }
  const double c = std::sqrt(transmissivity), s = std::sqrt(1.0 - transmissivity);
  Matrix m(4, 4);
  m << c, 0, s, 0,
       0, c, 0, s,
       -s, 0, c, 0,
       0, -s, 0, c;
  return {std::move(m), {mode_a, mode_b}};
}

inline SymplecticOp phase_shift(double theta, std::size_t mode = 0) {
  if (!std::isfinite(theta)) throw std::invalid_argument("phase_shift: theta must be finite");
  const double c = std::cos(theta), s = std::sin(theta);
  Matrix m(2, 2);
  m << c, s,
       -s, c;
  return {std::move(m), {mode}};
}

inline SymplecticOp single_mode_squeezer(double r, std::size_t mode = 0) {
  if (!std::isfinite(r)) throw std::invalid_argument("single_mode_squeezer: r must be finite");
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = std::exp(-r);
  m(1, 1) = std::exp(r);
  return {std::move(m), {mode}};
}

inline GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op) {
  for (auto m : op.mode_indices()) state.check_mode(m, "apply_symplectic");
  const Matrix s = op.embedded(state.n_modes());
  return {GaussianState::Unchecked{}, s * state.mean(), s * state.cov() * s.transpose()};
}

/// Phase-insensitive loss: x -> sqrt(eta) x + sqrt(1 - eta) x_env, with the
/// environment in a thermal state of mean occupancy n_bar.
inline GaussianState loss_channel(const GaussianState& state, std::size_t mode, const LossChannelSpec& spec) {
  state.check_mode(mode, "loss_channel");
  spec.validate();
  const double eta = spec.transmissivity;
  const double root = std::sqrt(eta);
  const auto i = static_cast<Eigen::Index>(2 * mode);

  Vector mean = state.mean();
  mean.segment<2>(i) *= root;

  Matrix cov = state.cov();
  cov.middleRows(i, 2) *= root;
  cov.middleCols(i, 2) *= root;
  cov.block<2, 2>(i, i) += (1.0 - eta) * (2.0 * spec.excess_thermal_occupancy + 1.0) * Eigen::Matrix2d::Identity();
  return {GaussianState::Unchecked{}, std::move(mean), std::move(cov)};
}

// ---------------------------------------------------------------------------
// Observables

inline double quad_combination_variance(const GaussianState& state, const Vector& coeffs) {
  if (coeffs.size() != state.cov().rows()) {
    throw std::invalid_argument("quad_combination_variance: coefficient vector length must be 2n");
  }
  return coeffs.dot(state.cov() * coeffs);
}

inline double mean_photon(const GaussianState& state, std::size_t mode) {
  state.check_mode(mode, "mean_photon");
  const auto i = static_cast<Eigen::Index>(2 * mode);
  const auto& v = state.cov();
  const auto& m = state.mean();
  return (v(i, i) + v(i + 1, i + 1) - 2.0) / 4.0 + (m(i) * m(i) + m(i + 1) * m(i + 1)) / 4.0;
}

/// Linearized photon-number fluctuation coefficients of N_a - N_b:
/// dN ~ (x_mean dx + p_mean dp) / 2 per mode.
inline Vector intensity_difference_coeffs(const GaussianState& state, std::size_t mode_a, std::size_t mode_b) {
  state.check_mode(mode_a, "intensity_difference_coeffs");
  state.check_mode(mode_b, "intensity_difference_coeffs");
  if (mode_a == mode_b) throw std::invalid_argument("intensity_difference_coeffs: modes must differ");
  Vector g = Vector::Zero(state.mean().size());
  g.segment<2>(2 * mode_a) = 0.5 * state.mean().segment<2>(2 * mode_a);
  g.segment<2>(2 * mode_b) = -0.5 * state.mean().segment<2>(2 * mode_b);
  return g;
}

/// Intensity-difference variance normalized to the shot noise of the total
/// photon number (bright-beam linearization).
inline double normalized_intensity_difference(const GaussianState& state, std::size_t mode_a = 0,
                                              std::size_t mode_b = 1) {
  const Vector g = intensity_difference_coeffs(state, mode_a, mode_b);
  const double snl = mean_photon(state, mode_a) + mean_photon(state, mode_b);
  if (!(snl > 0.0)) throw std::invalid_argument("normalized_intensity_difference: beams carry no power");
  return quad_combination_variance(state, g) / snl;
}

// ---------------------------------------------------------------------------
// Sampling

/// Row-per-sample quadrature draws from N(mean, cov). Deterministic for a fixed seed.
inline Matrix sample_quadratures(const GaussianState& state, std::size_t count, std::uint64_t rng_seed) {
  if (count == 0) throw std::invalid_argument("sample_quadratures: count must be >= 1");
  const auto dim = state.mean().size();
  Eigen::LLT<Matrix> llt(state.cov());
  Matrix factor;
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(state.cov());
    factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  std::mt19937_64 engine(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix samples(static_cast<Eigen::Index>(count), dim);
  Vector z(dim);
  for (Eigen::Index row = 0; row < samples.rows(); ++row) {
    for (Eigen::Index c = 0; c < dim; ++c) z(c) = normal(engine);
    samples.row(row) = (state.mean() + factor * z).transpose();
  }
  return samples;
}

}  // namespace twinbeam
