#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "trampoline/cavity.hpp"
#include "trampoline/mech.hpp"
#include "trampoline/servo.hpp"

namespace trampoline {

// Run configuration. Every section is optional in the JSON file; missing
// keys keep the defaults below and unknown keys are rejected.
//
// Gains, coupling rates, noise floors and effective masses are tunable
// defaults chosen for desk-scale runs, not measured device values.
struct Config {
  mech::NestedModel device = mech::design_point();
  cavity::Cavity cavity;

  std::uint64_t seed = 1;

  struct Brownian {
    std::string mode = "inner";       // "inner" | "outer"
    bool envelope = true;             // complex-envelope synthesis around f0
    double sample_rate_hz = 0.0;      // 0: 32 linewidths (envelope) or 8 f0 (baseband)
    double duration_s = 0.0;          // 0: 2000 linewidth times
    double noise_floor_m2_per_hz = 0.0;
  } brownian;

  struct OpticalRingdown {
    double sample_rate_hz = 0.0;  // 0: 200 / tau
    double duration_s = 0.0;      // 0: 12 tau
    double snr = 100.0;
    double pretrigger_fraction = 0.1;
  } ringdown_optical;

  struct MechRingdown {
    std::string mode = "outer";
    double sample_rate_hz = 0.0;  // 0: 8 f0
    double duration_s = 0.0;      // 0: 3 amplitude decay times
    double x0_m = 1e-9;
    double snr = 100.0;
    double envelope_rate_hz = 10.0;
  } ringdown_mech;

  struct Sweep {
    double f_min_hz = 1.0;
    double f_max_hz = 1e5;  // exclusive
    int points_per_decade = 20;
    double amplitude_m = 1e-9;
    int cycles_per_point = 50;
    int samples_per_cycle = 16;
    double base_noise_m = 1e-15;
    double response_noise_m = 1e-15;
    double base_scale = 1.0;
    std::optional<double> piezo_rolloff_hz;
  } sweep;

  struct Lock {
    double duration_s = 0.02;
    double loop_rate_hz = 2e7;
    double crossover_hz = 1e6;
    double actuator_range_m = 1e-9;
    // Unset gains follow from the crossover frequency.
    std::optional<double> kp;
    std::optional<double> ki;
    std::optional<double> kd;
  } lock;

  struct Analysis {
    std::string welch_window = "hann";
    double welch_overlap = 0.5;
    double welch_segment_s = 0.0;  // 0: automatic
    double fit_window_fwhm = 25.0;  // Lorentzian fit half-width, in linewidths
    std::string weighting = "relative";
    int bins_per_decade = 5;
    double dc_cutoff_fraction = 1.0 / 3.0;  // of the outer resonance frequency
    double detection_threshold = 5.0;
  } analysis;

  struct Cooling {
    std::optional<double> g0_rad_s;     // unset: cavity pull times inner zero-point motion
    double n_cav = 1e5;
    std::optional<double> detuning_hz;  // unset: red sideband of the inner mode
  } cooling;

  struct Design {
    double bath_temp_k = 4.0;
    std::optional<double> mech_freq_hz;  // sideband arithmetic; unset: inner f0
    std::optional<double> fq_hz;         // unset: inner f0 * q
  } design;

  // Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);
};

// Throws ConfigError on parse errors, unknown keys or invalid values, and
// IoError when the file cannot be read.
Config load_config(const std::filesystem::path& path);

// Module configurations with unset fields resolved.
servo::LockConfig lock_config(const Config& cfg);
servo::CoolingConfig cooling_config(const Config& cfg);

// Single-photon coupling 2 pi * frequency_pull * x_zpf, x_zpf = sqrt(hbar / (2 m w0)).
double single_photon_coupling(const cavity::Cavity& cav, const mech::MechMode& mode);

}  // namespace trampoline
