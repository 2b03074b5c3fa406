#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace trampoline::dsp {

enum class Window { kRectangular, kHann, kHamming, kBlackman };

// Accepts "rect"/"rectangular"/"boxcar", "hann", "hamming", "blackman".
Window window_from_name(std::string_view name);
std::string_view window_name(Window w);

// Periodic (DFT-even) taper of length n.
std::vector<double> make_window(Window w, std::size_t n);

// Complex DFT of fixed size backed by FFTW. Forward is unnormalized,
// inverse carries the 1/n factor.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::size_t size() const { return n_; }
  std::complex<double>* data() { return buffer_; }
  std::span<std::complex<double>> buffer() { return {buffer_, n_}; }

  void forward();
  void inverse();

 private:
  std::size_t n_;
  std::complex<double>* buffer_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Single-bin discrete correlation at `freq_hz`:
//   phasor = (2/N) sum x_n exp(-2 pi i f t_n),  t_n = n / fs,
// so a tone A cos(2 pi f t + phi) yields A exp(i phi). noise_sigma is the
// standard error of |phasor| estimated from the residual after removing the
// tone and the mean.
struct ToneEstimate {
  std::complex<double> phasor;
  double amplitude = 0.0;
  double noise_sigma = 0.0;
};
ToneEstimate estimate_tone(std::span<const double> x, double sample_rate_hz, double freq_hz);

// Block lock-in: complex amplitude at freq_hz averaged over consecutive
// blocks of `block` samples. Returns one phasor per complete block.
std::vector<std::complex<double>> demodulate_blocks(std::span<const double> x,
                                                    double sample_rate_hz, double freq_hz,
                                                    std::size_t block);

}  // namespace trampoline::dsp
