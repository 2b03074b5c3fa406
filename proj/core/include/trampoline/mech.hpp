#pragma once

#include <complex>

namespace trampoline::mech {

// One mechanical resonance.
struct MechMode {
  double f0_hz = 0.0;
  double q = 0.0;
  double m_eff_kg = 0.0;
  double temp_k = 0.0;

  double omega0() const;  // rad/s
  double gamma() const;   // energy loss rate omega0/q, rad/s

  // Throws std::invalid_argument unless f0 > 0, q > 0, m_eff > 0, temp >= 0.
  void validate() const;
};

// Mounting surface -> outer mass -> inner mirror.
struct NestedModel {
  MechMode outer;
  MechMode inner;

  double mass_ratio() const { return inner.m_eff_kg / outer.m_eff_kg; }
  void validate() const;
};

// Design point: 2.5 kHz outer stage filtering a 250 kHz inner trampoline.
// Masses are a 100 ug silicon frame and a ~50 ng mirror pad.
NestedModel design_point();

// Power transfer of a base-excited damped oscillator,
//   T = w0^4 / ((w0^2 - w^2)^2 + gamma^2 w^2),
// with T(0) == 1.
double transfer_power(double omega, const MechMode& mode);

// Complex displacement transmissibility whose squared magnitude is
// transfer_power().
std::complex<double> transfer_amplitude(double omega, const MechMode& mode);

// -10 log10 T. Positive numbers mean isolation; 0 at omega == 0.
double isolation_db(double omega, const MechMode& mode);

// Far-above-resonance asymptote w0^4 / w^4.
double transfer_highfreq_approx(double omega, const MechMode& mode);

// Exact steady-state response of the two-mass chain, inner mass over base
// displacement. Each stage has its own spring and dashpot to its support.
// mass_ratio = m_inner / m_outer must lie in (0, 1).
std::complex<double> chain_response(double omega, const NestedModel& model,
                                    double mass_ratio);
double chain_transfer(double omega, const NestedModel& model, double mass_ratio);
double chain_transfer(double omega, const NestedModel& model);

// Equipartition rms displacement sqrt(kB T / (m w0^2)).
double thermal_rms(const MechMode& mode);

// One-sided thermal displacement PSD in m^2/Hz. Integrates over f in
// [0, inf) to thermal_rms()^2.
double thermal_psd(double f_hz, const MechMode& mode);

}  // namespace trampoline::mech
