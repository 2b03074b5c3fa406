#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "trampoline/cavity.hpp"
#include "trampoline/mech.hpp"
#include "trampoline/timeseries.hpp"

namespace trampoline::synth {

struct BrownianOptions {
  double sample_rate_hz = 0.0;  // band rate in complex-envelope mode
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  double noise_floor = 0.0;  // additive white displacement noise, one-sided m^2/Hz
  // > 0 selects complex-envelope mode centred here (snapped to the 1/duration grid).
  double center_freq_hz = 0.0;
};

// Gaussian stationary thermal displacement record whose PSD is
// thermal_psd() + noise_floor, generated by shaping white Gaussian Fourier
// coefficients. Coefficients are keyed by absolute frequency bin, so a
// baseband record and a complex-envelope record with the same seed and
// duration are the same realization. Records shorter than 10 linewidth
// times carry a warning.
TimeSeries synth_brownian(const mech::MechMode& mode, const BrownianOptions& opts);

// Transmitted power after input shutoff at t = 0: 1 before, exp(-t / tau)
// after, plus white noise of standard deviation 1/snr (snr = inf: none).
// pretrigger_fraction * duration of flat signal precedes the shutoff.
TimeSeries synth_optical_ringdown(const cavity::Cavity& cav, double sample_rate_hz,
                                  double duration_s, double snr, std::uint64_t seed,
                                  double pretrigger_fraction = 0.1);

struct MechRingdownOptions {
  double sample_rate_hz = 0.0;
  double duration_s = 0.0;
  double x0_m = 1e-9;
  std::uint64_t seed = 0;
  double snr = 100.0;             // x0 over per-sample noise rms
  double envelope_rate_hz = 10.0;  // lock-in output rate
};

struct MechRingdown {
  TimeSeries raw;       // x0 exp(-t / tau_a) cos(w0 t) + noise
  TimeSeries envelope;  // block-demodulated amplitude at f0
};

// Free decay with amplitude time constant tau_a = 2 q / w0.
MechRingdown synth_mech_ringdown(const mech::MechMode& mode, const MechRingdownOptions& opts);

struct SweepOptions {
  double amplitude_m = 1e-9;
  int cycles_per_point = 50;
  int samples_per_cycle = 16;
  std::uint64_t seed = 0;
  double base_noise_m = 0.0;      // per-sample rms on the base channel
  double response_noise_m = 0.0;  // per-sample rms on the response channel
  double base_scale = 1.0;        // unknown gain of the base-motion sensor
  std::optional<double> piezo_rolloff_hz;  // first-order drive roll-off
  double discard_fraction = 0.2;
};

// Driven transfer measurement. Each point drives the base with a sine at the
// given frequency; the response is the steady-state output of the nested
// chain (or the single stage) plus measurement noise.
std::vector<DriveRecord> synth_drive_sweep(const mech::NestedModel& model,
                                           std::span<const double> freqs_hz,
                                           const SweepOptions& opts);
std::vector<DriveRecord> synth_drive_sweep(const mech::MechMode& mode,
                                           std::span<const double> freqs_hz,
                                           const SweepOptions& opts);

// `per_decade` log-spaced frequencies from lo, strictly below hi.
std::vector<double> log_spaced(double lo_hz, double hi_hz, int per_decade);

// Detector signal of a side-of-fringe readout: the displacement shifts the
// detuning by frequency_pull() * x and the output is the transmission fringe
// at that detuning (full nonlinearity kept). The output calibration is the
// small-signal m per detector unit at the operating point.
TimeSeries transduce_side_of_fringe(const TimeSeries& x, const cavity::Cavity& cav,
                                    double operating_detuning_hz, double contrast = 1.0);

// Counter-based standard normal pair for (seed, index).
std::pair<double, double> keyed_normal_pair(std::uint64_t seed, std::uint64_t index);

}  // namespace trampoline::synth
