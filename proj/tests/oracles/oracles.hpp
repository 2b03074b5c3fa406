#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code; shared inputs are plain parameters.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// Base-excited oscillator power transfer evaluated in long double, in Hz units.
inline double eq1_power(double f_hz, double f0_hz, double q) {
  const long double r = static_cast<long double>(f_hz) / f0_hz;
  const long double re = 1.0L - r * r;
  const long double im = r / q;
  return static_cast<double>(1.0L / (re * re + im * im));
}

struct ChainParams {
  double f1_hz, q1, f2_hz, q2, mass_ratio;
};

// Steady-state complex amplitude of the inner mass for base motion sin(w t),
// by RK4 integration of
//   x1'' = -w1^2 (x1 - xb) - g1 x1' + mu w2^2 (x2 - x1)
//   x2'' = -w2^2 (x2 - x1) - g2 x2'
// from rest, then projection onto sin/cos over whole cycles once the
// transient has decayed. Returned as amplitude * exp(i phase) relative to the
// base phasor.
inline std::complex<double> chain_rk4(const ChainParams& p, double f_hz) {
  const double w = 2.0 * kPi * f_hz;
  const double w1 = 2.0 * kPi * p.f1_hz;
  const double w2 = 2.0 * kPi * p.f2_hz;
  const double g1 = w1 / p.q1;
  const double g2 = w2 / p.q2;
  const double mu = p.mass_ratio;

  const double period = 1.0 / f_hz;
  const int steps_per_cycle = static_cast<int>(std::max(64.0, std::ceil(64.0 * p.f2_hz / f_hz)));
  const double dt = period / steps_per_cycle;
  // Slowest transient decays at min(g1, g2) / 2 (amplitude).
  const double settle = 40.0 * 2.0 / std::min(g1, g2);
  const long settle_cycles = static_cast<long>(std::ceil(settle / period));
  const long measure_cycles = std::max<long>(4, static_cast<long>(std::ceil(0.002 / period)));

  using State = std::array<double, 4>;  // x1, v1, x2, v2
  const auto deriv = [&](double t, const State& s) {
    const double xb = std::sin(w * t);
    return State{s[1], -w1 * w1 * (s[0] - xb) - g1 * s[1] + mu * w2 * w2 * (s[2] - s[0]), s[3],
                 -w2 * w2 * (s[2] - s[0]) - g2 * s[3]};
  };
  State s{0.0, 0.0, 0.0, 0.0};
  std::complex<double> acc{0.0, 0.0};
  const long total_cycles = settle_cycles + measure_cycles;
  for (long c = 0; c < total_cycles; ++c) {
    for (int k = 0; k < steps_per_cycle; ++k) {
      const double t = (static_cast<double>(c) * steps_per_cycle + k) * dt;
      if (c >= settle_cycles) {
        // Rectangle rule over whole cycles integrates a sinusoid exactly.
        acc += s[2] * std::exp(std::complex<double>(0.0, -w * t));
      }
      const State k1 = deriv(t, s);
      State tmp;
      for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
      const State k2 = deriv(t + 0.5 * dt, tmp);
      for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
      const State k3 = deriv(t + 0.5 * dt, tmp);
      for (int i = 0; i < 4; ++i) tmp[i] = s[i] + dt * k3[i];
      const State k4 = deriv(t + dt, tmp);
      for (int i = 0; i < 4; ++i) s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  const double n = static_cast<double>(measure_cycles * steps_per_cycle);
  // x2 = Re[X e^{iwt}] relative to base Re[-i e^{iwt}] = sin(wt).
  const std::complex<double> x2 = 2.0 * acc / n;
  return x2 / std::complex<double>(0.0, -1.0);
}

// Integral over [0, inf) of the one-sided thermal displacement PSD
//   4 kB T g / m / ((w0^2 - w^2)^2 + g^2 w^2),  w = 2 pi f,
// by adaptive Gauss-Kronrod on pieces around the line plus exp-sinh on the tail.
inline double thermal_psd_integral(double f0_hz, double q, double m_kg, double temp_k, double kb) {
  const double w0 = 2.0 * kPi * f0_hz;
  const double g = w0 / q;
  const auto s = [&](double f) {
    const double w = 2.0 * kPi * f;
    const double a = w0 * w0 - w * w;
    return 4.0 * kb * temp_k * g / m_kg / (a * a + g * g * w * w);
  };
  const double lw = f0_hz / q;
  const auto below = [&](double k) { return std::max(0.0, f0_hz - k * lw); };
  const std::array<double, 8> edges = {0.0,         below(1e4),          below(50.0),        below(1.0),
                                       f0_hz + lw,  f0_hz + 50.0 * lw,   f0_hz + 1e4 * lw,   4.0 * f0_hz + 1e4 * lw};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i + 1] > edges[i])) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(s, edges[i], edges[i + 1], 15, 1e-12);
  }
  boost::math::quadrature::exp_sinh<double> tail;
  total += tail.integrate([&](double u) { return s(edges.back() + u); }, 0.0,
                          std::numeric_limits<double>::infinity());
  return total;
}

// Hann-windowed periodogram average by direct O(N^2) DFT, one-sided, for
// real records. Matches the Welch conventions: periodic Hann, segment hop
// n - floor(n * overlap), density normalization fs * sum(w^2).
inline std::vector<double> naive_welch(std::span<const double> x, double fs, std::size_t n, double overlap) {
  std::vector<double> w(n);
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    s2 += w[i] * w[i];
  }
  const std::size_t hop = n - static_cast<std::size_t>(std::floor(static_cast<double>(n) * overlap));
  std::vector<double> acc(n / 2 + 1, 0.0);
  std::size_t segs = 0;
  for (std::size_t start = 0; start + n <= x.size(); start += hop) {
    for (std::size_t k = 0; k <= n / 2; ++k) {
      std::complex<double> sum{0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        const double ang = -2.0 * kPi * static_cast<double>(k * i % n) / static_cast<double>(n);
        sum += x[start + i] * w[i] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      acc[k] += std::norm(sum);
    }
    ++segs;
  }
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    acc[k] *= (unpaired ? 1.0 : 2.0) / (fs * s2 * static_cast<double>(segs));
  }
  return acc;
}

// Detuning of maximum |d/dd| of 1 / (1 + (2 d / lw)^2), found by a fine grid
// of central differences over [0, lw].
inline double inflection_scan(double lw_hz) {
  const auto fringe = [&](double d) { return 1.0 / (1.0 + 4.0 * d * d / (lw_hz * lw_hz)); };
  const double h = lw_hz * 1e-6;
  double best = 0.0;
  double best_slope = 0.0;
  const int n = 200000;
  for (int i = 1; i < n; ++i) {
    const double d = lw_hz * i / n;
    const double slope = std::abs(fringe(d + h) - fringe(d - h)) / (2.0 * h);
    if (slope > best_slope) {
      best_slope = slope;
      best = d;
    }
  }
  return best;
}

// Least-squares slope of y against x.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
