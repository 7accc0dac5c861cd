// noise_trace.hpp — frequency-resolved noise levels in dB relative to the SNL.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twinbeam {

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

struct FrequencyBand {
  double low_hz = 0.0;
  double high_hz = 0.0;

  bool contains(double f) const { return f >= low_hz && f <= high_hz; }
  void validate() const {
    if (!(low_hz >= 0.0) || !(high_hz > low_hz) || !std::isfinite(high_hz)) {
      throw std::invalid_argument("FrequencyBand: need 0 <= low < high");
    }
  }
};

struct NoiseTrace {
  std::vector<double> freqs_hz;
  std::vector<double> noise_db;
  std::string label;

  std::size_t size() const { return freqs_hz.size(); }

  void validate() const {
    if (freqs_hz.size() != noise_db.size()) {
      throw std::invalid_argument("NoiseTrace '" + label + "': frequency and value lengths differ");
    }
    for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
      if (!(freqs_hz[i] > 0.0) || !std::isfinite(freqs_hz[i])) {
        throw std::invalid_argument("NoiseTrace '" + label + "': frequencies must be positive");
      }
      if (i > 0 && !(freqs_hz[i] > freqs_hz[i - 1])) {
        throw std::invalid_argument("NoiseTrace '" + label + "': frequencies must be strictly ascending");
      }
    }
  }

  /// Bins inside the closed band.
  NoiseTrace restricted(const FrequencyBand& band) const {
    NoiseTrace out{{}, {}, label};
    for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
      if (band.contains(freqs_hz[i])) {
        out.freqs_hz.push_back(freqs_hz[i]);
        out.noise_db.push_back(noise_db[i]);
      }
    }
    return out;
  }

  /// Band average: mean of the linear noise power over the bins in the band, in dB.
  double band_average_db(const FrequencyBand& band) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
      if (band.contains(freqs_hz[i])) {
        sum += from_db(noise_db[i]);
        ++count;
      }
    }
    if (count == 0) throw std::invalid_argument("NoiseTrace '" + label + "': no bins inside the band");
    return to_db(sum / static_cast<double>(count));
  }

  /// Linear interpolation in dB; held constant outside the grid.
  double value_db_at(double f) const {
    if (freqs_hz.empty()) throw std::invalid_argument("NoiseTrace '" + label + "': empty trace");
    if (f <= freqs_hz.front()) return noise_db.front();
    if (f >= freqs_hz.back()) return noise_db.back();
    std::size_t lo = 0, hi = freqs_hz.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (freqs_hz[mid] <= f ? lo : hi) = mid;
    }
    const double t = (f - freqs_hz[lo]) / (freqs_hz[hi] - freqs_hz[lo]);
    return noise_db[lo] + t * (noise_db[hi] - noise_db[lo]);
  }
};

/// Uniform grid k * df for k = 1..count.
inline std::vector<double> uniform_grid(double df, std::size_t count) {
  std::vector<double> f(count);
  for (std::size_t k = 0; k < count; ++k) f[k] = df * static_cast<double>(k + 1);
  return f;
}

inline NoiseTrace flat_trace(std::vector<double> freqs_hz, double level_db, std::string label) {
  NoiseTrace t{std::move(freqs_hz), {}, std::move(label)};
  t.noise_db.assign(t.freqs_hz.size(), level_db);
  return t;
}

}  // namespace twinbeam
