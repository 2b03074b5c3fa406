#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace trampoline {

// Uniformly sampled record. Real baseband records carry `values` only.
// Complex-envelope records (center_freq_hz > 0) also carry `quadrature`; the
// physical signal is Re[(values + i quadrature) exp(2 pi i center_freq t)].
struct TimeSeries {
  double sample_rate_hz = 0.0;
  double t0_s = 0.0;
  double calibration = 1.0;     // physical units (m) per stored unit
  double center_freq_hz = 0.0;  // 0 for baseband
  std::vector<double> values;
  std::vector<double> quadrature;
  std::vector<std::string> warnings;

  bool is_complex() const { return !quadrature.empty(); }
  std::size_t size() const { return values.size(); }
  double dt() const { return 1.0 / sample_rate_hz; }
  double duration() const { return static_cast<double>(values.size()) / sample_rate_hz; }
  double time(std::size_t i) const { return t0_s + static_cast<double>(i) / sample_rate_hz; }
  std::complex<double> sample(std::size_t i) const {
    return {values[i], is_complex() ? quadrature[i] : 0.0};
  }

  // sample_rate > 0, at least two samples, finite values, matching column
  // lengths. Throws std::invalid_argument.
  void validate() const;
};

// One point of a driven transfer measurement.
struct DriveRecord {
  double drive_freq_hz = 0.0;
  TimeSeries base;
  TimeSeries response;
};

}  // namespace trampoline
