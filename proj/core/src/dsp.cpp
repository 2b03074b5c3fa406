#include "trampoline/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>

#include "trampoline/constants.hpp"

namespace trampoline::dsp {

using constants::kTwoPi;

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Window window_from_name(std::string_view name) {
  if (name == "rect" || name == "rectangular" || name == "boxcar") return Window::kRectangular;
  if (name == "hann" || name == "hanning") return Window::kHann;
  if (name == "hamming") return Window::kHamming;
  if (name == "blackman") return Window::kBlackman;
  throw std::invalid_argument("unknown window '" + std::string(name) + "'");
}

std::string_view window_name(Window w) {
  switch (w) {
    case Window::kRectangular: return "rectangular";
    case Window::kHann: return "hann";
    case Window::kHamming: return "hamming";
    case Window::kBlackman: return "blackman";
  }
  return "unknown";
}

std::vector<double> make_window(Window w, std::size_t n) {
  std::vector<double> out(n, 1.0);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = kTwoPi * static_cast<double>(i) / dn;
    switch (w) {
      case Window::kRectangular: break;
      case Window::kHann: out[i] = 0.5 - 0.5 * std::cos(phase); break;
      case Window::kHamming: out[i] = 0.54 - 0.46 * std::cos(phase); break;
      case Window::kBlackman:
        out[i] = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
        break;
    }
  }
  return out;
}

Fft::Fft(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("Fft: size must be positive");
  buffer_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (buffer_ == nullptr) throw std::bad_alloc();
  auto* raw = reinterpret_cast<fftw_complex*>(buffer_);
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_1d(static_cast<int>(n), raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(buffer_);
}

void Fft::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }

void Fft::inverse() {
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) buffer_[i] *= scale;
}

ToneEstimate estimate_tone(std::span<const double> x, double sample_rate_hz, double freq_hz) {
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("estimate_tone: need at least 4 samples");
  const double dn = static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= dn;

  const double step = kTwoPi * freq_hz / sample_rate_hz;
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = step * static_cast<double>(i);
    acc += (x[i] - mean) * std::complex<double>(std::cos(ph), -std::sin(ph));
  }
  ToneEstimate out;
  out.phasor = acc * (2.0 / dn);
  out.amplitude = std::abs(out.phasor);

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = step * static_cast<double>(i);
    const double fit = out.phasor.real() * std::cos(ph) - out.phasor.imag() * std::sin(ph);
    const double r = x[i] - mean - fit;
    ss += r * r;
  }
  const double resid_var = ss / std::max(1.0, dn - 3.0);
  out.noise_sigma = std::sqrt(2.0 * resid_var / dn);
  return out;
}

std::vector<std::complex<double>> demodulate_blocks(std::span<const double> x,
                                                    double sample_rate_hz, double freq_hz,
                                                    std::size_t block) {
  if (block == 0) throw std::invalid_argument("demodulate_blocks: block must be positive");
  const std::size_t nblocks = x.size() / block;
  std::vector<std::complex<double>> out;
  out.reserve(nblocks);
  const double step = kTwoPi * freq_hz / sample_rate_hz;
  for (std::size_t b = 0; b < nblocks; ++b) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < block; ++j) {
      const std::size_t i = b * block + j;
      // Wrapped so long records keep full phase precision.
      const double ph = std::fmod(step * static_cast<double>(i), kTwoPi);
      acc += x[i] * std::complex<double>(std::cos(ph), -std::sin(ph));
    }
    out.push_back(acc * (2.0 / static_cast<double>(block)));
  }
  return out;
}

}  // namespace trampoline::dsp
