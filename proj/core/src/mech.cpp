#include "trampoline/mech.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "trampoline/constants.hpp"

namespace trampoline::mech {

using constants::kBoltzmann;
using constants::kTwoPi;

double MechMode::omega0() const { return kTwoPi * f0_hz; }

double MechMode::gamma() const { return omega0() / q; }

void MechMode::validate() const {
  if (!(f0_hz > 0.0) || !std::isfinite(f0_hz)) {
    throw std::invalid_argument("MechMode: f0 must be positive, got " + std::to_string(f0_hz));
  }
  if (!(q > 0.0)) throw std::invalid_argument("MechMode: q must be positive");
  if (!(m_eff_kg > 0.0) || !std::isfinite(m_eff_kg)) {
    throw std::invalid_argument("MechMode: m_eff must be positive");
  }
  if (!(temp_k >= 0.0) || !std::isfinite(temp_k)) {
    throw std::invalid_argument("MechMode: temp must be non-negative");
  }
}

void NestedModel::validate() const {
  outer.validate();
  inner.validate();
  if (!(inner.f0_hz > outer.f0_hz)) {
    throw std::invalid_argument("NestedModel: inner f0 must exceed outer f0");
  }
}

NestedModel design_point() {
  NestedModel model;
  model.outer = MechMode{2.5e3, 1.0e5, 100e-9, 300.0};
  model.inner = MechMode{250e3, 418'000.0, 50e-12, 300.0};
  return model;
}

std::complex<double> transfer_amplitude(double omega, const MechMode& mode) {
  const double w0 = mode.omega0();
  const double w0sq = w0 * w0;
  return w0sq / std::complex<double>(w0sq - omega * omega, mode.gamma() * omega);
}

double transfer_power(double omega, const MechMode& mode) {
  const double w0sq = mode.omega0() * mode.omega0();
  const double detune = w0sq - omega * omega;
  const double damp = mode.gamma() * omega;
  return (w0sq * w0sq) / (detune * detune + damp * damp);
}

double isolation_db(double omega, const MechMode& mode) {
  if (omega == 0.0) return 0.0;
  return -10.0 * std::log10(transfer_power(omega, mode));
}

double transfer_highfreq_approx(double omega, const MechMode& mode) {
  const double ratio = mode.omega0() / omega;
  const double r2 = ratio * ratio;
  return r2 * r2;
}

std::complex<double> chain_response(double omega, const NestedModel& model,
                                    double mass_ratio) {
  if (!(mass_ratio > 0.0) || !(mass_ratio < 1.0)) {
    throw std::invalid_argument("chain_response: mass_ratio must lie in (0, 1)");
  }
  using cd = std::complex<double>;
  // Per unit outer mass. Springs tie each mass to its support, dashpots act
  // on absolute velocity, so a lone stage reduces to transfer_amplitude().
  const double w1 = model.outer.omega0();
  const double w2 = model.inner.omega0();
  const double w1sq = w1 * w1;
  const double w2sq = w2 * w2;
  const double wsq = omega * omega;
  const cd d1(w1sq - wsq, omega * model.outer.gamma());
  const cd d2(w2sq - wsq, omega * model.inner.gamma());
  const cd inner_load = mass_ratio * w2sq * cd(-wsq, omega * model.inner.gamma()) / d2;
  const cd outer = w1sq / (d1 + inner_load);
  return outer * (w2sq / d2);
}

double chain_transfer(double omega, const NestedModel& model, double mass_ratio) {
  return std::norm(chain_response(omega, model, mass_ratio));
}

double chain_transfer(double omega, const NestedModel& model) {
  return chain_transfer(omega, model, model.mass_ratio());
}

double thermal_rms(const MechMode& mode) {
  const double w0 = mode.omega0();
  return std::sqrt(kBoltzmann * mode.temp_k / (mode.m_eff_kg * w0 * w0));
}

double thermal_psd(double f_hz, const MechMode& mode) {
  const double w = kTwoPi * f_hz;
  const double w0sq = mode.omega0() * mode.omega0();
  const double g = mode.gamma();
  const double detune = w0sq - w * w;
  return (4.0 * kBoltzmann * mode.temp_k * g / mode.m_eff_kg) /
         (detune * detune + g * g * w * w);
}

}  // namespace trampoline::mech
