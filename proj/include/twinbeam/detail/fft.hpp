// fft.hpp — RAII wrapper over an FFTW real-to-complex / complex-to-real plan pair.

#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>
#include <stdexcept>
#include <utility>

namespace twinbeam::detail {

// FFTW's planner is not re-entrant; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n < 2) throw std::invalid_argument("RealFft: length must be >= 2");
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    if (real_ == nullptr || spec_ == nullptr) {
      release();
      throw std::bad_alloc();
    }
    // FFTW_ESTIMATE keeps the chosen algorithm, and therefore the rounding,
    // identical from run to run.
    std::lock_guard lock(fftw_planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(len, spec_, real_, FFTW_ESTIMATE);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept { swap(other); }
  RealFft& operator=(RealFft&& other) noexcept {
    if (this != &other) {
      release();
      swap(other);
    }
    return *this;
  }
  ~RealFft() { release(); }

  std::size_t size() const { return n_; }
  std::span<double> real() { return {real_, n_}; }
  std::span<std::complex<double>> spectrum() {
    return {reinterpret_cast<std::complex<double>*>(spec_), n_ / 2 + 1};
  }

  /// real() -> spectrum(), unnormalized.
  void forward() { fftw_execute(forward_); }
  /// spectrum() -> real(), unnormalized (scaled by n). Overwrites spectrum().
  void inverse() { fftw_execute(inverse_); }

 private:
  void swap(RealFft& o) noexcept {
    std::swap(n_, o.n_);
    std::swap(real_, o.real_);
    std::swap(spec_, o.spec_);
    std::swap(forward_, o.forward_);
    std::swap(inverse_, o.inverse_);
  }
  void release() noexcept {
    {
      std::lock_guard lock(fftw_planner_mutex());
      if (forward_ != nullptr) fftw_destroy_plan(forward_);
      if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
    }
    if (real_ != nullptr) fftw_free(real_);
    if (spec_ != nullptr) fftw_free(spec_);
    forward_ = inverse_ = nullptr;
    real_ = nullptr;
    spec_ = nullptr;
  }

  std::size_t n_ = 0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace twinbeam::detail
