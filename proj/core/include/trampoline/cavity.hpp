#pragma once

namespace trampoline::cavity {

// Two-mirror Fabry-Perot cavity.
struct Cavity {
  double length_m = 0.05;
  double wavelength_m = 1064e-9;
  double finesse = 181'000.0;

  double fsr() const;             // free spectral range, Hz
  double linewidth_fwhm() const;  // Hz
  double kappa() const;           // energy decay rate, rad/s
  double decay_tau() const;       // 1/e time of stored power, s

  // Cavity-frequency shift per unit mirror displacement, Hz/m (= 2 fsr / lambda).
  double frequency_pull() const;

  void validate() const;
};

double linewidth(const Cavity& cav);

// Intensity ringdown time F L / (pi c).
double ringdown_tau(const Cavity& cav);

// Inverse of ringdown_tau(): F = pi c tau / L.
double finesse_from_tau(double tau_s, double length_m);

// Mechanical frequency in units of the cavity FWHM.
double sideband_ratio(double f_m_hz, const Cavity& cav);

// Sideband-cooling floor at optimal detuning,
//   n_min = (sqrt(1 + (kappa / 2 w_m)^2) - 1) / 2,
// which tends to (kappa / 4 w_m)^2 deep in the resolved regime.
double min_phonons(double f_m_hz, const Cavity& cav);

struct Feasibility {
  bool pass = false;
  double fq_hz = 0.0;
  double threshold_hz = 0.0;  // kB T / h
  double margin = 0.0;        // fq / threshold
};

// Ground-state criterion f Q > kB T_bath / h (strict).
Feasibility ground_state_feasible(double f_m_hz, double q, double bath_temp_k);

// Transmission fringe contrast / (1 + (2 delta / fwhm)^2).
double fringe_response(double detuning_hz, const Cavity& cav, double contrast = 1.0);

// d fringe_response / d delta, in 1/Hz.
double fringe_slope(double detuning_hz, const Cavity& cav, double contrast = 1.0);

// Detuning of steepest slope, fwhm / (2 sqrt 3). The negative of this is the
// other inflection point.
double inflection_detuning(const Cavity& cav);

}  // namespace trampoline::cavity
