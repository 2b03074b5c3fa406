#include "trampoline/servo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trampoline/constants.hpp"
#include "trampoline/synth.hpp"

namespace trampoline::servo {

using constants::kTwoPi;

void LockConfig::validate() const {
  if (!(loop_rate_hz > 0.0)) throw std::invalid_argument("LockConfig: loop rate must be positive");
  if (!(actuator_range_m > 0.0)) throw std::invalid_argument("LockConfig: actuator range must be positive");
  for (double g : {kp, ki, kd, setpoint, detuning_bias_hz}) {
    if (!std::isfinite(g)) throw std::invalid_argument("LockConfig: non-finite parameter");
  }
}

LockConfig suggest_lock_config(const cavity::Cavity& cav, double loop_rate_hz, double crossover_hz,
                               double actuator_range_m) {
  cav.validate();
  LockConfig cfg;
  cfg.loop_rate_hz = loop_rate_hz;
  cfg.actuator_range_m = actuator_range_m;
  cfg.detuning_bias_hz = cavity::inflection_detuning(cav);
  cfg.setpoint = cavity::fringe_response(cfg.detuning_bias_hz, cav);
  // Plant gain d(signal)/d(actuator) = -slope * pull, so the integrator gain
  // giving a unity crossover at f_c is 2 pi f_c / |slope * pull|.
  const double plant = -cavity::fringe_slope(cfg.detuning_bias_hz, cav) * cav.frequency_pull();
  cfg.ki = kTwoPi * crossover_hz / plant;
  return cfg;
}

namespace {

double tail_rms(const std::vector<double>& v, double offset = 0.0) {
  const std::size_t start = v.size() - v.size() / 5;
  double ss = 0.0;
  for (std::size_t i = start; i < v.size(); ++i) ss += (v[i] - offset) * (v[i] - offset);
  const std::size_t n = v.size() - start;
  return n > 0 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
}

TimeSeries outer_motion(const mech::NestedModel& model, const LockConfig& cfg, double duration_s,
                        std::uint64_t seed) {
  synth::BrownianOptions opts;
  opts.sample_rate_hz = cfg.loop_rate_hz;
  opts.duration_s = duration_s;
  opts.seed = seed;
  return synth::synth_brownian(model.outer, opts);
}

}  // namespace

TimeSeries open_loop_error(const mech::NestedModel& model, const cavity::Cavity& cav,
                           const LockConfig& cfg, double duration_s, std::uint64_t seed) {
  model.validate();
  cfg.validate();
  TimeSeries x = outer_motion(model, cfg, duration_s, seed);
  const double engage = x.values.front();
  for (double& v : x.values) v -= engage;
  TimeSeries signal = synth::transduce_side_of_fringe(x, cav, cfg.detuning_bias_hz);
  for (double& v : signal.values) v = cfg.setpoint - v;
  signal.calibration = 1.0;
  signal.warnings.clear();
  return signal;
}

LockResult simulate_lock(const mech::NestedModel& model, const cavity::Cavity& cav,
                         const LockConfig& cfg, double duration_s, std::uint64_t seed) {
  model.validate();
  cav.validate();
  cfg.validate();
  if (cfg.loop_rate_hz < 20.0 * model.outer.f0_hz) {
    throw std::invalid_argument("simulate_lock: loop rate must be at least 20 x outer f0");
  }
  const TimeSeries x = outer_motion(model, cfg, duration_s, seed);
  const std::size_t n = x.size();
  const double dt = 1.0 / cfg.loop_rate_hz;
  const double pull = cav.frequency_pull();
  const double engage = x.values.front();

  LockResult out;
  out.warnings = x.warnings;
  for (TimeSeries* ts : {&out.error, &out.actuator, &out.residual_detuning}) {
    ts->sample_rate_hz = cfg.loop_rate_hz;
    ts->values.resize(n);
  }

  std::vector<double> open_error(n);
  std::vector<double> open_excursion(n);
  double integral = 0.0;
  double prev_error = 0.0;
  double actuator = engage;
  std::size_t saturated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double residual = x.values[i] - actuator;
    const double detuning = cfg.detuning_bias_hz + pull * residual;
    const double e = cfg.setpoint - cavity::fringe_response(detuning, cav);
    out.error.values[i] = e;
    out.actuator.values[i] = actuator;
    out.residual_detuning.values[i] = pull * residual;

    const double open_detuning = cfg.detuning_bias_hz + pull * (x.values[i] - engage);
    open_error[i] = cfg.setpoint - cavity::fringe_response(open_detuning, cav);
    open_excursion[i] = pull * (x.values[i] - engage);

    // Zero-order hold: the command computed now applies to the next sample.
    const double derivative = i == 0 ? 0.0 : (e - prev_error) / dt;
    prev_error = e;
    const double trial_integral = integral + e * dt;
    const double command = cfg.kp * e + cfg.ki * trial_integral + cfg.kd * derivative;
    const double clamped = std::clamp(command, -cfg.actuator_range_m, cfg.actuator_range_m);
    if (clamped != command) {
      ++saturated;
    } else {
      integral = trial_integral;
    }
    actuator = engage + clamped;
  }

  out.saturated_fraction = static_cast<double>(saturated) / static_cast<double>(n);
  out.open_loop_error_rms = tail_rms(open_error);
  out.closed_loop_error_rms = tail_rms(out.error.values);
  out.open_loop_excursion_hz = tail_rms(open_excursion);
  out.closed_loop_excursion_hz = tail_rms(out.residual_detuning.values);
  const bool saturation_ok = out.saturated_fraction <= 0.01;
  if (!saturation_ok) {
    out.warnings.push_back("actuator saturated on " + std::to_string(100.0 * out.saturated_fraction) +
                           "% of samples");
  }
  out.lock_acquired = saturation_ok && out.closed_loop_error_rms <= 0.1 * out.open_loop_error_rms;
  return out;
}

void CoolingConfig::validate() const {
  for (double v : {g0, n_cav, detuning, kappa}) {
    if (!std::isfinite(v)) throw std::invalid_argument("CoolingConfig: non-finite parameter");
  }
  if (n_cav < 0.0) throw std::invalid_argument("CoolingConfig: photon number must be non-negative");
  if (!(kappa > 0.0)) throw std::invalid_argument("CoolingConfig: kappa must be positive");
}

double optical_damping_rate(const CoolingConfig& cfg, double omega_m) {
  cfg.validate();
  const double hk = 0.5 * cfg.kappa;
  const double anti_stokes = cfg.detuning + omega_m;
  const double stokes = cfg.detuning - omega_m;
  return cfg.g0 * cfg.g0 * cfg.n_cav * cfg.kappa *
         (1.0 / (hk * hk + anti_stokes * anti_stokes) - 1.0 / (hk * hk + stokes * stokes));
}

double effective_temperature(const mech::MechMode& mode, double gamma_opt) {
  mode.validate();
  const double gm = mode.gamma();
  if (!(gamma_opt > -gm)) {
    throw std::domain_error("effective_temperature: optical anti-damping exceeds intrinsic damping");
  }
  return mode.temp_k * gm / (gm + gamma_opt);
}

}  // namespace trampoline::servo
