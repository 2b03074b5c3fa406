#include "trampoline/cavity.hpp"

#include <cmath>
#include <stdexcept>

#include "trampoline/constants.hpp"

namespace trampoline::cavity {

using constants::kBoltzmann;
using constants::kPi;
using constants::kPlanck;
using constants::kSpeedOfLight;
using constants::kTwoPi;

double Cavity::fsr() const { return kSpeedOfLight / (2.0 * length_m); }

double Cavity::linewidth_fwhm() const { return kSpeedOfLight / (2.0 * length_m * finesse); }

double Cavity::kappa() const { return kTwoPi * linewidth_fwhm(); }

double Cavity::decay_tau() const { return finesse * length_m / (kPi * kSpeedOfLight); }

double Cavity::frequency_pull() const { return 2.0 * fsr() / wavelength_m; }

void Cavity::validate() const {
  if (!(length_m > 0.0) || !std::isfinite(length_m)) {
    throw std::invalid_argument("Cavity: length must be positive");
  }
  if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) {
    throw std::invalid_argument("Cavity: wavelength must be positive");
  }
  if (!(finesse > 1.0) || !std::isfinite(finesse)) {
    throw std::invalid_argument("Cavity: finesse must exceed 1");
  }
}

double linewidth(const Cavity& cav) { return cav.linewidth_fwhm(); }

double ringdown_tau(const Cavity& cav) { return cav.decay_tau(); }

double finesse_from_tau(double tau_s, double length_m) {
  if (!(tau_s > 0.0) || !(length_m > 0.0)) {
    throw std::invalid_argument("finesse_from_tau: tau and length must be positive");
  }
  return kPi * kSpeedOfLight * tau_s / length_m;
}

double sideband_ratio(double f_m_hz, const Cavity& cav) {
  if (!(f_m_hz > 0.0)) throw std::invalid_argument("sideband_ratio: f_m must be positive");
  return f_m_hz / cav.linewidth_fwhm();
}

double min_phonons(double f_m_hz, const Cavity& cav) {
  if (!(f_m_hz > 0.0)) throw std::invalid_argument("min_phonons: f_m must be positive");
  const double x = cav.kappa() / (2.0 * kTwoPi * f_m_hz);
  // sqrt(1 + x^2) - 1 without cancellation for small x.
  const double x2 = x * x;
  return 0.5 * x2 / (std::sqrt(1.0 + x2) + 1.0);
}

Feasibility ground_state_feasible(double f_m_hz, double q, double bath_temp_k) {
  if (!(f_m_hz > 0.0) || !(q > 0.0) || !(bath_temp_k > 0.0)) {
    throw std::invalid_argument("ground_state_feasible: arguments must be positive");
  }
  Feasibility out;
  out.fq_hz = f_m_hz * q;
  out.threshold_hz = kBoltzmann * bath_temp_k / kPlanck;
  out.margin = out.fq_hz / out.threshold_hz;
  out.pass = out.fq_hz > out.threshold_hz;
  return out;
}

double fringe_response(double detuning_hz, const Cavity& cav, double contrast) {
  const double u = 2.0 * detuning_hz / cav.linewidth_fwhm();
  return contrast / (1.0 + u * u);
}

double fringe_slope(double detuning_hz, const Cavity& cav, double contrast) {
  const double lw = cav.linewidth_fwhm();
  const double u = 2.0 * detuning_hz / lw;
  const double denom = 1.0 + u * u;
  return -contrast * (2.0 * u) * (2.0 / lw) / (denom * denom);
}

double inflection_detuning(const Cavity& cav) {
  return cav.linewidth_fwhm() / (2.0 * std::sqrt(3.0));
}

}  // namespace trampoline::cavity
