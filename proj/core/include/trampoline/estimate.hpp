#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trampoline/dsp.hpp"
#include "trampoline/timeseries.hpp"

namespace trampoline::estimate {

// One-sided PSD in (calibrated units)^2 / Hz.
struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> psd;
  std::size_t n_avg = 0;
  double resolution_hz = 0.0;
  // Variance inflation from correlation between neighbouring bins,
  // N sum w^4 / (sum w^2)^2 for the taper used (1 for rectangular).
  double bin_correlation = 1.0;
  std::string window;
};

struct WelchOptions {
  std::size_t segment_len = 0;  // 0: length / 8 (eight segments without overlap)
  double overlap = 0.5;
  dsp::Window window = dsp::Window::kHann;
  bool detrend = false;  // subtract each segment's mean
};

// Welch averaged periodogram. A real sine of amplitude A integrates to A^2/2.
// Complex-envelope records yield bins at center_freq + f' covering the full
// band, with the same one-sided normalization.
Spectrum welch_psd(const TimeSeries& ts, const WelchOptions& opts = {});

struct FitParam {
  std::string name;
  double value = 0.0;
  double sigma = 0.0;
};

struct FitResult {
  std::string model;
  std::vector<FitParam> params;
  std::vector<FitParam> derived;
  double residual_norm = 0.0;
  std::size_t n_points = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  // Looks up fitted and derived parameters; throws std::out_of_range.
  const FitParam& get(std::string_view name) const;
  double value(std::string_view name) const { return get(name).value; }
  double sigma(std::string_view name) const { return get(name).sigma; }
  bool has(std::string_view name) const;
};

enum class PeakWeighting {
  kRelative,  // residuals divided by the model value (gamma-distributed bins)
  kUniform,   // plain least squares
};

struct LorentzianOptions {
  double window_lo_hz = 0.0;  // both zero: use the whole spectrum
  double window_hi_hz = 0.0;
  PeakWeighting weighting = PeakWeighting::kRelative;
  int max_iterations = 300;
  int max_reweights = 40;
};

// Fits S(f) = amplitude (w/2)^2 / ((f - f0)^2 + (w/2)^2) + offset with
// w = fwhm and derives q = f0 / fwhm. Parameters: center_hz, fwhm_hz,
// amplitude_m2_per_hz, offset_m2_per_hz; derived: q. Sigmas come from the curvature of the
// objective scaled by the reduced chi-square and by Spectrum::bin_correlation.
// Throws FitError when the window holds no peak above the offset.
FitResult fit_lorentzian(const Spectrum& spec, const LorentzianOptions& opts = {});

// Index of the first sample at which the record has fallen below
// baseline + fraction * (initial level - baseline). Levels are medians of the
// first and last few percent of the record.
std::size_t find_decay_onset(std::span<const double> y, double fraction = 0.9);

struct DecayOptions {
  bool trim_onset = true;
  double onset_fraction = 0.9;
  std::optional<double> cavity_length_m;  // attach finesse = pi c tau / L
  std::optional<double> mech_f0_hz;       // attach q = w0 tau / 2 (amplitude decay)
  int max_iterations = 300;
};

struct PeakAnalysisOptions {
  dsp::Window window = dsp::Window::kHann;
  double overlap = 0.5;
  double segment_s = 0.0;  // 0: choose from the fitted linewidth
  double resolution_fraction = 1.0 / 20.0;  // target resolution, in linewidths
  std::size_t min_averages = 8;
  double fit_window_fwhm = 25.0;  // fit half-width, in linewidths
  PeakWeighting weighting = PeakWeighting::kRelative;
};

struct PeakAnalysis {
  Spectrum spectrum;
  FitResult fit;
};

// Welch spectrum plus Lorentzian fit of the dominant peak. With automatic
// segmenting a coarse spectrum locates the peak and the segment length is
// then refined until the resolution reaches resolution_fraction * fwhm or the
// record runs out of averages.
PeakAnalysis analyze_peak(const TimeSeries& ts, const PeakAnalysisOptions& opts = {});

// Fits y(t) = amplitude exp(-t / tau) + offset, t measured from the onset
// sample. Parameters: tau_s, amplitude_au, offset_au (record units); derived finesse and/or q.
// Complex records are fitted on their magnitude. Throws FitError for rising
// records; tau longer than the fitted span yields converged = false.
FitResult fit_exp_decay(const TimeSeries& ts, const DecayOptions& opts = {});

// Log-spaced binning shared by the transfer estimator and theory overlays.
struct LogBins {
  std::vector<double> centers_hz;  // geometric bin centres
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation, 0 for single members
  std::vector<std::size_t> count;
};
LogBins bin_log_frequency(std::span<const double> freqs_hz, std::span<const double> values,
                          int bins_per_decade);

struct TransferPoint {
  double freq_hz = 0.0;
  double ratio_db = 0.0;  // raw 20 log10(|response| / |base|), before DC adjustment
};

struct TransferEstimate {
  std::vector<double> bin_centers_hz;
  std::vector<double> magnitude_db;
  std::vector<double> errbar_db;
  std::vector<std::size_t> counts;
  double dc_reference_db = 0.0;  // subtracted from every bin
  bool dc_normalized = false;
  std::size_t excluded = 0;  // records whose base tone was not detected
  std::vector<TransferPoint> points;
};

struct TransferOptions {
  int bins_per_decade = 5;
  // Bins centred below this are averaged and the average subtracted.
  std::optional<double> dc_cutoff_hz;
  // Base tone must exceed this many standard errors to be used.
  double detection_threshold = 5.0;
};

TransferEstimate estimate_transfer(std::span<const DriveRecord> records,
                                   const TransferOptions& opts = {});

}  // namespace trampoline::estimate
