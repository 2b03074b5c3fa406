#include "trampoline/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trampoline/constants.hpp"
#include "trampoline/errors.hpp"
#include "trampoline/fit.hpp"

namespace trampoline::estimate {

using constants::kPi;
using constants::kSpeedOfLight;
using constants::kTwoPi;

// ---------------------------------------------------------------------------
// Welch PSD

Spectrum welch_psd(const TimeSeries& ts, const WelchOptions& opts) {
  ts.validate();
  const std::size_t len = ts.size();
  const std::size_t n = opts.segment_len == 0 ? std::max<std::size_t>(2, len / 8) : opts.segment_len;
  if (n > len) {
    throw std::invalid_argument("welch_psd: segment length " + std::to_string(n) +
                                " exceeds record length " + std::to_string(len));
  }
  if (n < 2) throw std::invalid_argument("welch_psd: segment length must be at least 2");
  if (!(opts.overlap >= 0.0 && opts.overlap <= 0.9)) {
    throw std::invalid_argument("welch_psd: overlap must lie in [0, 0.9]");
  }

  const auto noverlap = static_cast<std::size_t>(std::floor(static_cast<double>(n) * opts.overlap));
  const std::size_t hop = std::max<std::size_t>(1, n - noverlap);
  const std::vector<double> w = dsp::make_window(opts.window, n);
  double s2 = 0.0;
  double s4 = 0.0;
  for (double v : w) {
    s2 += v * v;
    s4 += v * v * v * v;
  }

  dsp::Fft fft(n);
  std::vector<double> acc(n, 0.0);
  std::size_t nseg = 0;
  const bool cplx = ts.is_complex();
  for (std::size_t start = 0; start + n <= len; start += hop) {
    std::complex<double> mean{0.0, 0.0};
    if (opts.detrend) {
      for (std::size_t i = 0; i < n; ++i) mean += ts.sample(start + i);
      mean /= static_cast<double>(n);
    }
    auto buf = fft.buffer();
    for (std::size_t i = 0; i < n; ++i) {
      const double re = ts.values[start + i] - mean.real();
      const double im = cplx ? ts.quadrature[start + i] - mean.imag() : 0.0;
      buf[i] = {re * w[i], im * w[i]};
    }
    fft.forward();
    for (std::size_t k = 0; k < n; ++k) acc[k] += std::norm(buf[k]);
    ++nseg;
  }

  Spectrum out;
  out.n_avg = nseg;
  out.resolution_hz = ts.sample_rate_hz / static_cast<double>(n);
  out.bin_correlation = static_cast<double>(n) * s4 / (s2 * s2);
  out.window = std::string(dsp::window_name(opts.window));
  const double scale =
      ts.calibration * ts.calibration / (ts.sample_rate_hz * s2 * static_cast<double>(nseg));

  if (!cplx) {
    const std::size_t nf = n / 2 + 1;
    out.freqs_hz.resize(nf);
    out.psd.resize(nf);
    for (std::size_t k = 0; k < nf; ++k) {
      const bool unpaired = (k == 0) || (n % 2 == 0 && k == n / 2);
      out.freqs_hz[k] = static_cast<double>(k) * out.resolution_hz;
      out.psd[k] = acc[k] * scale * (unpaired ? 1.0 : 2.0);
    }
  } else {
    // Two-sided envelope spectrum; halving maps it onto the one-sided
    // spectrum of the real signal around center_freq.
    out.freqs_hz.resize(n);
    out.psd.resize(n);
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    for (std::size_t j = 0; j < n; ++j) {
      const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(j) - half;
      const std::size_t idx = static_cast<std::size_t>((k + static_cast<std::ptrdiff_t>(n)) %
                                                       static_cast<std::ptrdiff_t>(n));
      out.freqs_hz[j] = ts.center_freq_hz + static_cast<double>(k) * out.resolution_hz;
      out.psd[j] = 0.5 * acc[idx] * scale;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FitResult

const FitParam& FitResult::get(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  for (const auto& p : derived) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("FitResult: no parameter '" + std::string(name) + "'");
}

bool FitResult::has(std::string_view name) const {
  const auto match = [&](const FitParam& p) { return p.name == name; };
  return std::any_of(params.begin(), params.end(), match) ||
         std::any_of(derived.begin(), derived.end(), match);
}

namespace {

double percentile(std::vector<double> v, double frac) {
  if (v.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(frac * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

double median(std::span<const double> v) {
  return percentile(std::vector<double>(v.begin(), v.end()), 0.5);
}

double cov_at(const std::vector<double>& m, std::size_t np, std::size_t i, std::size_t j) {
  return m[i * np + j];
}

}  // namespace

// ---------------------------------------------------------------------------
// Lorentzian

FitResult fit_lorentzian(const Spectrum& spec, const LorentzianOptions& opts) {
  if (spec.freqs_hz.size() != spec.psd.size()) {
    throw std::invalid_argument("fit_lorentzian: frequency/psd length mismatch");
  }
  const bool whole = opts.window_lo_hz == 0.0 && opts.window_hi_hz == 0.0;
  std::vector<double> f;
  std::vector<double> y;
  for (std::size_t i = 0; i < spec.freqs_hz.size(); ++i) {
    const double fi = spec.freqs_hz[i];
    if (whole || (fi >= opts.window_lo_hz && fi <= opts.window_hi_hz)) {
      if (!std::isfinite(spec.psd[i])) throw std::invalid_argument("fit_lorentzian: non-finite psd");
      f.push_back(fi);
      y.push_back(spec.psd[i]);
    }
  }
  const std::size_t m = f.size();
  if (m < 8) throw FitError("fit_lorentzian: fewer than 8 bins in the fit window");

  // Initial guess: 3-bin smoothed maximum, low percentile as offset,
  // half-maximum crossings for the width.
  std::vector<double> smooth(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(m - 1, i + 1);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += y[j];
    smooth[i] = s / static_cast<double>(hi - lo + 1);
  }
  const std::size_t kmax = static_cast<std::size_t>(
      std::distance(smooth.begin(), std::max_element(smooth.begin(), smooth.end())));
  const double offset0 = std::max(0.0, percentile(y, 0.1));
  const double amp0 = smooth[kmax] - offset0;
  if (!(amp0 > 0.0)) throw FitError("fit_lorentzian: no peak above the offset");

  const double half = offset0 + 0.5 * amp0;
  std::size_t left = kmax;
  while (left > 0 && smooth[left] > half) --left;
  std::size_t right = kmax;
  while (right + 1 < m && smooth[right] > half) ++right;
  const double res = spec.resolution_hz > 0.0 ? spec.resolution_hz : (f.back() - f.front()) / static_cast<double>(m);
  const double fwhm0 = std::max(f[right] - f[left], res);
  const double fref = f[kmax];

  // Normalized problem: x in units of fwhm0, y in units of amp0.
  std::vector<double> xs(m);
  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = (f[i] - fref) / fwhm0;
    ys[i] = y[i] / amp0;
  }
  const auto model = [](double x, std::span<const double> p) {
    const double hw = 0.5 * p[1];
    const double d = x - p[0];
    return p[2] * hw * hw / (d * d + hw * hw) + p[3];
  };

  std::vector<double> sigma(m, 1.0);
  std::vector<double> p = {0.0, 1.0, 1.0, offset0 / amp0};
  const auto update_weights = [&](std::span<const double> params) {
    if (opts.weighting != PeakWeighting::kRelative) return;
    const double floor = 1e-12 * std::abs(params[2]);
    for (std::size_t i = 0; i < m; ++i) sigma[i] = std::max(std::abs(model(xs[i], params)), floor);
  };
  update_weights(p);

  const fit::ResidualFn residual = [&](std::span<const double> q, std::span<double> r,
                                       std::span<double> jac) {
    const double hw = 0.5 * q[1];
    for (std::size_t i = 0; i < m; ++i) {
      const double d = xs[i] - q[0];
      const double den = d * d + hw * hw;
      const double shape = hw * hw / den;
      r[i] = (q[2] * shape + q[3] - ys[i]) / sigma[i];
      if (!jac.empty()) {
        double* row = &jac[i * 4];
        row[0] = q[2] * hw * hw * 2.0 * d / (den * den) / sigma[i];
        row[1] = q[2] * hw * d * d / (den * den) / sigma[i];
        row[2] = shape / sigma[i];
        row[3] = 1.0 / sigma[i];
      }
    }
  };

  fit::LmOptions lm_opts;
  lm_opts.max_iterations = opts.max_iterations;
  fit::LmOutcome lm;
  bool settled = opts.weighting != PeakWeighting::kRelative;
  int total_iters = 0;
  const int rounds = opts.weighting == PeakWeighting::kRelative ? opts.max_reweights : 1;
  for (int round = 0; round < rounds; ++round) {
    lm = fit::levenberg_marquardt(residual, p, m, lm_opts);
    total_iters += lm.iterations;
    const std::vector<double>& np = lm.params;
    const double scale_w = std::max(std::abs(np[1]), 1e-300);
    const double scale_a = std::max(std::abs(np[2]), 1e-300);
    const double change = std::max({std::abs(np[0] - p[0]) / scale_w,
                                    std::abs(std::abs(np[1]) - std::abs(p[1])) / scale_w,
                                    std::abs(np[2] - p[2]) / scale_a,
                                    std::abs(np[3] - p[3]) / scale_a});
    p = np;
    p[1] = std::abs(p[1]);
    if (round > 0 && change < 1e-10) {
      settled = true;
      break;
    }
    update_weights(p);
  }
  if (!(p[2] > 0.0) || !(p[1] > 0.0)) throw FitError("fit_lorentzian: no peak above the offset");

  // Covariance at the final weights.
  std::vector<double> r(m);
  residual(p, r, {});
  double chi2 = 0.0;
  for (double v : r) chi2 += v * v;
  const double dof = static_cast<double>(m) - 4.0;
  const double s2 = (dof > 0.0 ? chi2 / dof : 0.0) * spec.bin_correlation;
  const auto& cov = lm.inv_hessian;

  FitResult out;
  out.model = "lorentzian";
  out.n_points = m;
  out.iterations = total_iters;
  out.converged = lm.converged && settled;
  out.residual_norm = std::sqrt(chi2) * (opts.weighting == PeakWeighting::kUniform ? amp0 : 1.0);

  const double center = fref + p[0] * fwhm0;
  const double fwhm = p[1] * fwhm0;
  const double s_center = std::sqrt(std::max(0.0, cov_at(cov, 4, 0, 0) * s2)) * fwhm0;
  const double s_fwhm = std::sqrt(std::max(0.0, cov_at(cov, 4, 1, 1) * s2)) * fwhm0;
  const double cov_cf = cov_at(cov, 4, 0, 1) * s2 * fwhm0 * fwhm0;
  out.params = {
      {"center_hz", center, s_center},
      {"fwhm_hz", fwhm, s_fwhm},
      {"amplitude_m2_per_hz", p[2] * amp0, std::sqrt(std::max(0.0, cov_at(cov, 4, 2, 2) * s2)) * amp0},
      {"offset_m2_per_hz", p[3] * amp0, std::sqrt(std::max(0.0, cov_at(cov, 4, 3, 3) * s2)) * amp0},
  };
  const double q = center / fwhm;
  const double rel2 = (s_center / center) * (s_center / center) + (s_fwhm / fwhm) * (s_fwhm / fwhm) -
                      2.0 * cov_cf / (center * fwhm);
  out.derived = {{"q", q, std::abs(q) * std::sqrt(std::max(0.0, rel2))}};

  if (spec.resolution_hz > fwhm / 5.0) {
    out.warnings.push_back("spectral resolution coarser than fwhm/5; width is biased");
  }
  if (!out.converged) out.warnings.push_back("fit did not converge: " + lm.stop_reason);
  return out;
}

PeakAnalysis analyze_peak(const TimeSeries& ts, const PeakAnalysisOptions& opts) {
  ts.validate();
  const std::size_t len = ts.size();
  const double fs = ts.sample_rate_hz;
  const std::size_t max_seg = std::max<std::size_t>(16, 2 * len / (opts.min_averages + 1));
  const bool automatic = !(opts.segment_s > 0.0);

  WelchOptions w;
  w.window = opts.window;
  w.overlap = opts.overlap;
  w.segment_len = automatic ? std::max<std::size_t>(16, len / 32)
                            : static_cast<std::size_t>(std::llround(opts.segment_s * fs));
  w.segment_len = std::min(w.segment_len, len);

  PeakAnalysis out;
  out.spectrum = welch_psd(ts, w);

  // Locate the peak, ignoring DC of baseband records.
  const auto& sp = out.spectrum;
  const std::size_t first = ts.is_complex() ? 0 : 1;
  std::size_t kmax = first;
  for (std::size_t k = first; k < sp.psd.size(); ++k) {
    if (sp.psd[k] > sp.psd[kmax]) kmax = k;
  }
  // Rough half-maximum width above the median level sets the first window.
  const double floor = median(sp.psd);
  const double half_level = floor + 0.5 * (sp.psd[kmax] - floor);
  std::size_t left = kmax;
  while (left > first && sp.psd[left - 1] > half_level) --left;
  std::size_t right = kmax;
  while (right + 1 < sp.psd.size() && sp.psd[right + 1] > half_level) ++right;
  const double width = std::max<double>(static_cast<double>(right - left + 1), 2.0) * sp.resolution_hz;
  LorentzianOptions lo;
  lo.weighting = opts.weighting;
  lo.window_lo_hz = sp.freqs_hz[kmax] - 10.0 * width;
  lo.window_hi_hz = sp.freqs_hz[kmax] + 10.0 * width;
  out.fit = fit_lorentzian(sp, lo);

  const auto refit = [&]() {
    const double c = out.fit.value("center_hz");
    const double half = opts.fit_window_fwhm * std::max(out.fit.value("fwhm_hz"), out.spectrum.resolution_hz);
    lo.window_lo_hz = c - half;
    lo.window_hi_hz = c + half;
    out.fit = fit_lorentzian(out.spectrum, lo);
  };

  if (automatic) {
    for (int pass = 0; pass < 4; ++pass) {
      const double fwhm = std::max(out.fit.value("fwhm_hz"), 1e-300);
      auto want = static_cast<std::size_t>(std::ceil(fs / (opts.resolution_fraction * fwhm)));
      want = std::clamp<std::size_t>(want, 16, max_seg);
      const double ratio = static_cast<double>(want) / static_cast<double>(w.segment_len);
      if (ratio > 0.9 && ratio < 1.1) break;
      w.segment_len = want;
      out.spectrum = welch_psd(ts, w);
      refit();
    }
  }
  refit();
  return out;
}

// ---------------------------------------------------------------------------
// Exponential decay

std::size_t find_decay_onset(std::span<const double> y, double fraction) {
  const std::size_t n = y.size();
  if (n < 2) return 0;
  const std::size_t k = std::min(n, std::max<std::size_t>(3, n / 50));
  const double head = median(y.subspan(0, k));
  const double tail = median(y.subspan(n - k, k));
  if (!(head > tail)) return 0;
  const double threshold = tail + fraction * (head - tail);
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] <= threshold) return i;
  }
  return 0;
}

FitResult fit_exp_decay(const TimeSeries& ts, const DecayOptions& opts) {
  ts.validate();
  std::vector<double> full(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    full[i] = (ts.is_complex() ? std::abs(ts.sample(i)) : ts.values[i]) * ts.calibration;
  }
  const std::size_t onset = opts.trim_onset ? find_decay_onset(full, opts.onset_fraction) : 0;
  const std::span<const double> y(full.data() + onset, full.size() - onset);
  const std::size_t m = y.size();
  if (m < 6) throw FitError("fit_exp_decay: fewer than 6 samples after onset");

  const std::size_t edge = std::max<std::size_t>(1, m / 10);
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < edge; ++i) {
    head += y[i];
    tail += y[m - edge + i];
  }
  head /= static_cast<double>(edge);
  tail /= static_cast<double>(edge);
  if (tail > head) throw FitError("fit_exp_decay: record trend is rising, not decaying");

  const double dt = ts.dt();
  const double span_s = static_cast<double>(m - 1) * dt;
  double yscale = std::abs(head - tail);
  if (!(yscale > 0.0)) yscale = std::abs(head) > 0.0 ? std::abs(head) : 1.0;

  const double b0 = median(y.subspan(m - edge, edge));
  const double a0 = y[0] - b0;
  double tau0 = 2.0 * span_s;
  for (std::size_t i = 0; i < m; ++i) {
    if (y[i] - b0 < a0 / std::exp(1.0)) {
      tau0 = std::max(static_cast<double>(i) * dt, dt);
      break;
    }
  }

  std::vector<double> ts_norm(m);
  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    ts_norm[i] = static_cast<double>(i) * dt / span_s;
    ys[i] = y[i] / yscale;
  }
  const fit::ResidualFn residual = [&](std::span<const double> p, std::span<double> r,
                                       std::span<double> jac) {
    for (std::size_t i = 0; i < m; ++i) {
      const double e = std::exp(-ts_norm[i] / p[1]);
      r[i] = p[0] * e + p[2] - ys[i];
      if (!jac.empty()) {
        double* row = &jac[i * 3];
        row[0] = e;
        row[1] = p[0] * e * ts_norm[i] / (p[1] * p[1]);
        row[2] = 1.0;
      }
    }
  };
  fit::LmOptions lm_opts;
  lm_opts.max_iterations = opts.max_iterations;
  const fit::LmOutcome lm =
      fit::levenberg_marquardt(residual, {a0 / yscale, tau0 / span_s, b0 / yscale}, m, lm_opts);

  const auto& p = lm.params;
  const double dof = static_cast<double>(m) - 3.0;
  const double s2 = lm.residual_norm * lm.residual_norm / dof;
  const auto sd = [&](std::size_t i) { return std::sqrt(std::max(0.0, cov_at(lm.inv_hessian, 3, i, i) * s2)); };

  FitResult out;
  out.model = "exp_decay";
  out.n_points = m;
  out.iterations = lm.iterations;
  out.residual_norm = lm.residual_norm * yscale;
  const double tau = p[1] * span_s;
  const double s_tau = sd(1) * span_s;
  out.params = {
      {"tau_s", tau, s_tau},
      {"amplitude_au", p[0] * yscale, sd(0) * yscale},
      {"offset_au", p[2] * yscale, sd(2) * yscale},
  };
  out.converged = lm.converged && tau > 0.0 && tau <= span_s;
  if (tau > span_s) out.warnings.push_back("decay time exceeds the fitted record span");
  if (!lm.converged) out.warnings.push_back("fit did not converge: " + lm.stop_reason);

  if (opts.cavity_length_m) {
    const double k = kPi * kSpeedOfLight / *opts.cavity_length_m;
    out.derived.push_back({"finesse", k * tau, k * s_tau});
  }
  if (opts.mech_f0_hz) {
    const double k = 0.5 * kTwoPi * *opts.mech_f0_hz;
    out.derived.push_back({"q", k * tau, k * s_tau});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transfer estimate

LogBins bin_log_frequency(std::span<const double> freqs_hz, std::span<const double> values,
                          int bins_per_decade) {
  if (bins_per_decade <= 0) throw std::invalid_argument("bins_per_decade must be positive");
  if (freqs_hz.size() != values.size()) throw std::invalid_argument("bin_log_frequency: length mismatch");
  std::map<long, std::vector<double>> groups;
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    if (!(freqs_hz[i] > 0.0)) throw std::invalid_argument("bin_log_frequency: frequencies must be positive");
    const auto idx = static_cast<long>(std::floor(std::log10(freqs_hz[i]) * bins_per_decade + 1e-9));
    groups[idx].push_back(values[i]);
  }
  LogBins out;
  for (const auto& [idx, members] : groups) {
    const double n = static_cast<double>(members.size());
    const double mean = std::accumulate(members.begin(), members.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : members) ss += (v - mean) * (v - mean);
    out.centers_hz.push_back(std::pow(10.0, (static_cast<double>(idx) + 0.5) / bins_per_decade));
    out.mean.push_back(mean);
    out.stddev.push_back(members.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
    out.count.push_back(members.size());
  }
  return out;
}

TransferEstimate estimate_transfer(std::span<const DriveRecord> records, const TransferOptions& opts) {
  TransferEstimate out;
  for (const auto& rec : records) {
    if (!(rec.drive_freq_hz > 0.0)) throw std::invalid_argument("estimate_transfer: drive frequency must be positive");
    rec.base.validate();
    rec.response.validate();
    if (rec.base.is_complex() || rec.response.is_complex()) {
      throw std::invalid_argument("estimate_transfer: drive records must be real baseband series");
    }
    const auto base = dsp::estimate_tone(rec.base.values, rec.base.sample_rate_hz, rec.drive_freq_hz);
    if (!(base.amplitude > opts.detection_threshold * base.noise_sigma)) {
      ++out.excluded;
      continue;
    }
    const auto resp =
        dsp::estimate_tone(rec.response.values, rec.response.sample_rate_hz, rec.drive_freq_hz);
    const double ratio = (resp.amplitude * std::abs(rec.response.calibration)) /
                         (base.amplitude * std::abs(rec.base.calibration));
    out.points.push_back({rec.drive_freq_hz, 20.0 * std::log10(ratio)});
  }
  if (out.points.empty()) return out;

  std::vector<double> f;
  std::vector<double> db;
  for (const auto& pt : out.points) {
    f.push_back(pt.freq_hz);
    db.push_back(pt.ratio_db);
  }
  const LogBins bins = bin_log_frequency(f, db, opts.bins_per_decade);
  out.bin_centers_hz = bins.centers_hz;
  out.magnitude_db = bins.mean;
  out.errbar_db = bins.stddev;
  out.counts = bins.count;

  if (opts.dc_cutoff_hz) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < out.bin_centers_hz.size(); ++i) {
      if (out.bin_centers_hz[i] < *opts.dc_cutoff_hz) {
        sum += out.magnitude_db[i];
        ++n;
      }
    }
    if (n > 0) {
      out.dc_reference_db = sum / static_cast<double>(n);
      out.dc_normalized = true;
      for (double& v : out.magnitude_db) v -= out.dc_reference_db;
    }
  }
  return out;
}

}  // namespace trampoline::estimate
