#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trampoline/cavity.hpp"
#include "trampoline/mech.hpp"
#include "trampoline/timeseries.hpp"

namespace trampoline::servo {

// Discrete PID acting on the cavity length through an ideal actuator.
// Error is setpoint minus the fringe signal; the actuator moves by
// kp e + ki sum(e dt) + kd de/dt metres from its engage position.
struct LockConfig {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double setpoint = 0.75;
  double actuator_range_m = 1e-9;
  double loop_rate_hz = 5e6;
  double detuning_bias_hz = 0.0;

  void validate() const;
};

// Lock at the positive-detuning inflection point with a pure integrator
// whose unity-gain frequency is `crossover_hz`.
LockConfig suggest_lock_config(const cavity::Cavity& cav, double loop_rate_hz, double crossover_hz,
                               double actuator_range_m = 1e-9);

struct LockResult {
  TimeSeries error;              // fringe units
  TimeSeries actuator;           // m
  TimeSeries residual_detuning;  // Hz, bias removed
  bool lock_acquired = false;
  double saturated_fraction = 0.0;
  // rms over the final 20% of the run.
  double open_loop_error_rms = 0.0;
  double closed_loop_error_rms = 0.0;
  double open_loop_excursion_hz = 0.0;
  double closed_loop_excursion_hz = 0.0;
  std::vector<std::string> warnings;
};

// Closed-loop side-of-fringe lock against the outer resonator's thermal
// motion. The loop engages at the lock point (actuator starts at the initial
// displacement). Locked means the tail error rms is at most 10% of the
// open-loop tail rms with at most 1% of samples saturated.
LockResult simulate_lock(const mech::NestedModel& model, const cavity::Cavity& cav,
                         const LockConfig& cfg, double duration_s, std::uint64_t seed);

// Open-loop error signal for the same seed: the loop with all gains zero.
TimeSeries open_loop_error(const mech::NestedModel& model, const cavity::Cavity& cav,
                           const LockConfig& cfg, double duration_s, std::uint64_t seed);

struct CoolingConfig {
  double g0 = 0.0;          // single-photon coupling, rad/s
  double n_cav = 0.0;       // intracavity photons
  double detuning = 0.0;    // laser minus cavity, rad/s (negative = red)
  double kappa = 0.0;       // cavity energy decay rate, rad/s

  void validate() const;
};

// Linearized radiation-pressure damping
//   g0^2 n kappa [1/((kappa/2)^2 + (D + wm)^2) - 1/((kappa/2)^2 + (D - wm)^2)],
// positive (cooling) for red detuning.
double optical_damping_rate(const CoolingConfig& cfg, double omega_m);

// Cold-damping temperature temp * gm / (gm + gamma_opt), gm = w0 / q.
// Throws std::domain_error when gamma_opt <= -gm (anti-damped, unstable).
double effective_temperature(const mech::MechMode& mode, double gamma_opt);

}  // namespace trampoline::servo
