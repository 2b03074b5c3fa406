#include "trampoline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "trampoline/constants.hpp"
#include "trampoline/dsp.hpp"

namespace trampoline::synth {

using constants::kTwoPi;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// (0, 1], never zero so the log in Box-Muller stays finite.
double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

std::size_t sample_count(double sample_rate_hz, double duration_s) {
  if (!(sample_rate_hz > 0.0) || !(duration_s > 0.0)) {
    throw std::invalid_argument("sample rate and duration must be positive");
  }
  const double n = std::round(sample_rate_hz * duration_s);
  if (n < 2.0) throw std::invalid_argument("record would hold fewer than two samples");
  return static_cast<std::size_t>(n);
}

}  // namespace

std::pair<double, double> keyed_normal_pair(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t h1 = splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL));
  const std::uint64_t h2 = splitmix64(h1);
  const double radius = std::sqrt(-2.0 * std::log(to_unit(h1)));
  const double angle = kTwoPi * to_unit(h2);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

TimeSeries synth_brownian(const mech::MechMode& mode, const BrownianOptions& opts) {
  mode.validate();
  if (opts.noise_floor < 0.0) throw std::invalid_argument("synth_brownian: negative noise floor");
  const std::size_t n = sample_count(opts.sample_rate_hz, opts.duration_s);
  const double fs = opts.sample_rate_hz;
  const double span = static_cast<double>(n) / fs;
  const double df = 1.0 / span;
  const bool envelope = opts.center_freq_hz > 0.0;
  if (!envelope && !(fs > 4.0 * mode.f0_hz)) {
    throw std::invalid_argument("synth_brownian: baseband sample rate must exceed 4 f0");
  }

  TimeSeries ts;
  ts.sample_rate_hz = fs;
  ts.values.assign(n, 0.0);
  if (envelope) {
    ts.quadrature.assign(n, 0.0);
    ts.center_freq_hz = std::round(opts.center_freq_hz / df) * df;
  }
  if (span * mode.f0_hz / mode.q < 10.0) {
    ts.warnings.push_back("record shorter than 10 linewidth times; line shape unresolved");
  }
  if (mode.temp_k == 0.0 && opts.noise_floor == 0.0) return ts;

  // Bins are weighted by the PSD averaged over their width (Lorentzian
  // approximation near the line) so that lines narrower than 1/duration
  // keep their full power.
  const double f0 = mode.f0_hz;
  const double hw = 0.5 * mode.f0_hz / mode.q;
  const auto target = [&](double f) {
    const double a = (f + 0.5 * df - f0) / hw;
    const double b = (f - 0.5 * df - f0) / hw;
    const double area = a * b > -1.0 ? std::atan((a - b) / (1.0 + a * b)) : std::atan(a) - std::atan(b);
    const double d = (f - f0) / hw;
    const double gain = area / ((a - b) / (1.0 + d * d));
    return mech::thermal_psd(f, mode) * gain + opts.noise_floor;
  };
  dsp::Fft fft(n);
  auto buf = fft.buffer();
  std::fill(buf.begin(), buf.end(), std::complex<double>{0.0, 0.0});
  const double dn = static_cast<double>(n);

  if (!envelope) {
    // Hermitian spectrum with E|X_k|^2 = N fs S(f_k) / 2; DC left empty.
    for (std::size_t k = 1; k <= n / 2; ++k) {
      const auto [a, b] = keyed_normal_pair(opts.seed, k);
      const double s = target(static_cast<double>(k) * df);
      if (n % 2 == 0 && k == n / 2) {
        buf[k] = std::sqrt(dn * fs * s / 2.0) * a;
      } else {
        const std::complex<double> c = std::sqrt(dn * fs * s / 4.0) * std::complex<double>(a, b);
        buf[k] = c;
        buf[n - k] = std::conj(c);
      }
    }
    fft.inverse();
    for (std::size_t i = 0; i < n; ++i) ts.values[i] = buf[i].real();
  } else {
    // Envelope coefficients carry twice the positive-frequency content of the
    // matching baseband bins, E|Z|^2 = N fs S(f).
    const auto kc = static_cast<long long>(std::llround(ts.center_freq_hz / df));
    const auto half = static_cast<long long>(n / 2);
    for (std::size_t j = 0; j < n; ++j) {
      const long long offset = static_cast<long long>(j) < static_cast<long long>(n) - half
                                   ? static_cast<long long>(j)
                                   : static_cast<long long>(j) - static_cast<long long>(n);
      const long long k = kc + offset;
      if (k <= 0) continue;
      const auto [a, b] = keyed_normal_pair(opts.seed, static_cast<std::uint64_t>(k));
      const double s = target(static_cast<double>(k) * df);
      buf[j] = std::sqrt(dn * fs * s) * std::complex<double>(a, b);
    }
    fft.inverse();
    for (std::size_t i = 0; i < n; ++i) {
      ts.values[i] = buf[i].real();
      ts.quadrature[i] = buf[i].imag();
    }
  }
  return ts;
}

TimeSeries synth_optical_ringdown(const cavity::Cavity& cav, double sample_rate_hz,
                                  double duration_s, double snr, std::uint64_t seed,
                                  double pretrigger_fraction) {
  cav.validate();
  const double tau = cav.decay_tau();
  if (sample_rate_hz < 20.0 / tau) {
    throw std::invalid_argument("synth_optical_ringdown: sample rate below 20 / tau");
  }
  if (duration_s < 5.0 * tau) throw std::invalid_argument("synth_optical_ringdown: duration below 5 tau");
  if (!(snr > 0.0)) throw std::invalid_argument("synth_optical_ringdown: snr must be positive");
  if (!(pretrigger_fraction >= 0.0 && pretrigger_fraction < 1.0)) {
    throw std::invalid_argument("synth_optical_ringdown: pretrigger fraction must lie in [0, 1)");
  }

  const double pre = pretrigger_fraction * duration_s;
  const std::size_t n = sample_count(sample_rate_hz, duration_s + pre);
  TimeSeries ts;
  ts.sample_rate_hz = sample_rate_hz;
  ts.t0_s = -std::round(pre * sample_rate_hz) / sample_rate_hz;
  ts.values.resize(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::isinf(snr) ? 0.0 : 1.0 / snr);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = ts.time(i);
    const double p = t < 0.0 ? 1.0 : std::exp(-t / tau);
    ts.values[i] = std::isinf(snr) ? p : p + noise(rng);
  }
  return ts;
}

MechRingdown synth_mech_ringdown(const mech::MechMode& mode, const MechRingdownOptions& opts) {
  mode.validate();
  if (!(opts.sample_rate_hz > 2.0 * mode.f0_hz)) {
    throw std::invalid_argument("synth_mech_ringdown: sample rate must exceed 2 f0");
  }
  if (!(opts.snr > 0.0)) throw std::invalid_argument("synth_mech_ringdown: snr must be positive");
  if (!(opts.envelope_rate_hz > 0.0) || opts.envelope_rate_hz > mode.f0_hz) {
    throw std::invalid_argument("synth_mech_ringdown: envelope rate must lie in (0, f0]");
  }
  const std::size_t n = sample_count(opts.sample_rate_hz, opts.duration_s);
  const double tau_a = 2.0 * mode.q / mode.omega0();

  MechRingdown out;
  out.raw.sample_rate_hz = opts.sample_rate_hz;
  out.raw.values.resize(n);
  std::mt19937_64 rng(opts.seed);
  const bool noiseless = std::isinf(opts.snr);
  std::normal_distribution<double> noise(0.0, noiseless ? 0.0 : opts.x0_m / opts.snr);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = out.raw.time(i);
    // Phase reduced modulo one period to keep cos() accurate over long records.
    const double cycles = mode.f0_hz * t;
    const double phase = kTwoPi * (cycles - std::floor(cycles));
    const double x = opts.x0_m * std::exp(-t / tau_a) * std::cos(phase);
    out.raw.values[i] = noiseless ? x : x + noise(rng);
  }

  const auto block = static_cast<std::size_t>(
      std::max(1.0, std::round(opts.sample_rate_hz / opts.envelope_rate_hz)));
  const auto phasors = dsp::demodulate_blocks(out.raw.values, opts.sample_rate_hz, mode.f0_hz, block);
  out.envelope.sample_rate_hz = opts.sample_rate_hz / static_cast<double>(block);
  out.envelope.t0_s = 0.5 * static_cast<double>(block - 1) / opts.sample_rate_hz;
  out.envelope.values.reserve(phasors.size());
  for (const auto& p : phasors) out.envelope.values.push_back(std::abs(p));
  return out;
}

namespace {

template <typename ResponseFn>
std::vector<DriveRecord> sweep_impl(ResponseFn response, std::span<const double> freqs_hz,
                                    const SweepOptions& opts) {
  if (opts.cycles_per_point < 50) throw std::invalid_argument("synth_drive_sweep: cycles_per_point must be >= 50");
  if (opts.samples_per_cycle < 4) throw std::invalid_argument("synth_drive_sweep: samples_per_cycle must be >= 4");
  if (!(opts.discard_fraction >= 0.0 && opts.discard_fraction < 1.0)) {
    throw std::invalid_argument("synth_drive_sweep: discard fraction must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    if (!(freqs_hz[i] > 0.0)) throw std::invalid_argument("synth_drive_sweep: frequencies must be positive");
    if (i > 0 && !(freqs_hz[i] > freqs_hz[i - 1])) {
      throw std::invalid_argument("synth_drive_sweep: frequencies must be strictly increasing");
    }
  }

  const std::size_t total = static_cast<std::size_t>(opts.cycles_per_point) *
                            static_cast<std::size_t>(opts.samples_per_cycle);
  const auto skip = static_cast<std::size_t>(std::floor(opts.discard_fraction * static_cast<double>(total)));
  const std::size_t kept = total - skip;

  std::vector<DriveRecord> out;
  out.reserve(freqs_hz.size());
  for (std::size_t p = 0; p < freqs_hz.size(); ++p) {
    const double f = freqs_hz[p];
    const double fs = f * opts.samples_per_cycle;
    double amp = opts.amplitude_m;
    if (opts.piezo_rolloff_hz) amp /= std::hypot(1.0, f / *opts.piezo_rolloff_hz);
    const std::complex<double> h = response(kTwoPi * f);

    std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(p)));
    std::normal_distribution<double> base_noise(0.0, opts.base_noise_m);
    std::normal_distribution<double> resp_noise(0.0, opts.response_noise_m);

    DriveRecord rec;
    rec.drive_freq_hz = f;
    for (TimeSeries* ts : {&rec.base, &rec.response}) {
      ts->sample_rate_hz = fs;
      ts->t0_s = static_cast<double>(skip) / fs;
      ts->values.resize(kept);
    }
    for (std::size_t i = 0; i < kept; ++i) {
      // Exact phase per sample: samples_per_cycle divides each cycle evenly.
      const std::size_t idx = skip + i;
      const double phase = kTwoPi * static_cast<double>(idx % static_cast<std::size_t>(opts.samples_per_cycle)) /
                           opts.samples_per_cycle;
      const std::complex<double> drive = amp * std::complex<double>(std::sin(phase), -std::cos(phase));
      const double xb = drive.real();
      const double xr = (h * drive).real();
      const double nb = opts.base_noise_m > 0.0 ? base_noise(rng) : 0.0;
      const double nr = opts.response_noise_m > 0.0 ? resp_noise(rng) : 0.0;
      rec.base.values[i] = opts.base_scale * xb + nb;
      rec.response.values[i] = xr + nr;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<DriveRecord> synth_drive_sweep(const mech::NestedModel& model,
                                           std::span<const double> freqs_hz,
                                           const SweepOptions& opts) {
  model.validate();
  const double ratio = model.mass_ratio();
  return sweep_impl([&](double w) { return mech::chain_response(w, model, ratio); }, freqs_hz, opts);
}

std::vector<DriveRecord> synth_drive_sweep(const mech::MechMode& mode,
                                           std::span<const double> freqs_hz,
                                           const SweepOptions& opts) {
  mode.validate();
  return sweep_impl([&](double w) { return mech::transfer_amplitude(w, mode); }, freqs_hz, opts);
}

std::vector<double> log_spaced(double lo_hz, double hi_hz, int per_decade) {
  if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || per_decade <= 0) {
    throw std::invalid_argument("log_spaced: need 0 < lo < hi and per_decade > 0");
  }
  std::vector<double> out;
  const double start = std::log10(lo_hz);
  for (int k = 0;; ++k) {
    const double f = std::pow(10.0, start + static_cast<double>(k) / per_decade);
    if (f >= hi_hz * (1.0 - 1e-12)) break;
    out.push_back(f);
  }
  return out;
}

TimeSeries transduce_side_of_fringe(const TimeSeries& x, const cavity::Cavity& cav,
                                    double operating_detuning_hz, double contrast) {
  x.validate();
  cav.validate();
  if (x.is_complex()) throw std::invalid_argument("transduce_side_of_fringe: needs a real displacement record");
  const double pull = cav.frequency_pull();
  TimeSeries out;
  out.sample_rate_hz = x.sample_rate_hz;
  out.t0_s = x.t0_s;
  out.values.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double detuning = operating_detuning_hz + pull * x.values[i] * x.calibration;
    out.values[i] = cavity::fringe_response(detuning, cav, contrast);
  }
  const double gain = cavity::fringe_slope(operating_detuning_hz, cav, contrast) * pull;
  if (gain != 0.0) {
    out.calibration = 1.0 / gain;
  } else {
    out.calibration = 0.0;
    out.warnings.push_back("operating point has zero fringe slope; no linear calibration");
  }
  return out;
}

}  // namespace trampoline::synth
