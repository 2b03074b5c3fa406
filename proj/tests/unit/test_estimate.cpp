#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "trampoline/constants.hpp"
#include "trampoline/errors.hpp"
#include "trampoline/estimate.hpp"
#include "trampoline/synth.hpp"

namespace {

using namespace trampoline;
using constants::kTwoPi;

TimeSeries white(std::size_t n, double fs, double sigma, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  TimeSeries ts;
  ts.sample_rate_hz = fs;
  ts.values.resize(n);
  for (double& v : ts.values) v = d(rng);
  return ts;
}

double integrate(const estimate::Spectrum& s) {
  double total = 0.0;
  for (double v : s.psd) total += v * s.resolution_hz;
  return total;
}

TEST(Welch, MatchesNaivePeriodogram) {
  const TimeSeries ts = white(640, 100.0, 1.0, 1);
  estimate::WelchOptions o;
  o.segment_len = 128;
  const auto s = estimate::welch_psd(ts, o);
  const auto ref = oracle::naive_welch(ts.values, ts.sample_rate_hz, 128, 0.5);
  ASSERT_EQ(s.psd.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.psd[k], ref[k], 1e-12 * (1.0 + ref[k]));
  EXPECT_EQ(s.n_avg, 9u);
  EXPECT_DOUBLE_EQ(s.resolution_hz, 100.0 / 128.0);
  EXPECT_NEAR(s.bin_correlation, 35.0 / 18.0, 1e-12);
}

TEST(Welch, WhiteNoiseLevel) {
  const TimeSeries ts = white(1 << 18, 1000.0, 2.0, 2);
  estimate::WelchOptions o;
  o.segment_len = 1024;
  const auto s = estimate::welch_psd(ts, o);
  double mean = 0.0;
  for (std::size_t k = 5; k + 5 < s.psd.size(); ++k) mean += s.psd[k];
  mean /= static_cast<double>(s.psd.size() - 10);
  EXPECT_NEAR(mean / (2.0 * 4.0 / 1000.0), 1.0, 0.01);
}

TEST(Welch, ParsevalOnSineAndNoise) {
  TimeSeries ts = white(1 << 16, 2048.0, 0.3, 4);
  for (std::size_t i = 0; i < ts.size(); ++i) ts.values[i] += 1.5 * std::sin(kTwoPi * 200.0 * i / 2048.0);
  double var = 0.0;
  for (double v : ts.values) var += v * v;
  var /= static_cast<double>(ts.size());
  for (auto w : {dsp::Window::kHann, dsp::Window::kRectangular, dsp::Window::kBlackman}) {
    estimate::WelchOptions o;
    o.segment_len = 4096;
    o.window = w;
    EXPECT_NEAR(integrate(estimate::welch_psd(ts, o)) / var, 1.0, 0.02) << dsp::window_name(w);
  }
}

TEST(Welch, CalibrationScalesPsd) {
  TimeSeries ts = white(4096, 100.0, 1.0, 5);
  const auto a = estimate::welch_psd(ts);
  ts.calibration = 3.0;
  const auto b = estimate::welch_psd(ts);
  for (std::size_t k = 0; k < a.psd.size(); ++k) EXPECT_NEAR(b.psd[k], 9.0 * a.psd[k], 1e-12 * b.psd[k] + 1e-300);
}

TEST(Welch, ComplexEnvelopeCoversBandAroundCenter) {
  TimeSeries ts;
  ts.sample_rate_hz = 64.0;
  ts.center_freq_hz = 1000.0;
  ts.values.resize(4096);
  ts.quadrature.resize(4096);
  // Envelope tone at +5 Hz with amplitude 2 -> physical 2 cos(2 pi 1005 t).
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ts.values[i] = 2.0 * std::cos(kTwoPi * 5.0 * i / 64.0);
    ts.quadrature[i] = 2.0 * std::sin(kTwoPi * 5.0 * i / 64.0);
  }
  estimate::WelchOptions o;
  o.segment_len = 256;
  const auto s = estimate::welch_psd(ts, o);
  EXPECT_NEAR(s.freqs_hz.front(), 968.0, 1e-9);
  EXPECT_NEAR(integrate(s), 2.0, 1e-9);  // A^2 / 2
  std::size_t kmax = 0;
  for (std::size_t k = 0; k < s.psd.size(); ++k) {
    if (s.psd[k] > s.psd[kmax]) kmax = k;
  }
  EXPECT_NEAR(s.freqs_hz[kmax], 1005.0, 1e-9);
}

TEST(Welch, RejectsBadOptions) {
  const TimeSeries ts = white(100, 10.0, 1.0, 6);
  estimate::WelchOptions o;
  o.segment_len = 200;
  EXPECT_THROW(estimate::welch_psd(ts, o), std::invalid_argument);
  o.segment_len = 50;
  o.overlap = 0.95;
  EXPECT_THROW(estimate::welch_psd(ts, o), std::invalid_argument);
}

estimate::Spectrum lorentzian_spectrum(double f0, double fwhm, double amp, double offset, double res,
                                       std::size_t n) {
  estimate::Spectrum s;
  s.resolution_hz = res;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = f0 + (static_cast<double>(i) - n / 2.0) * res;
    const double d = f - f0;
    s.freqs_hz.push_back(f);
    s.psd.push_back(amp * 0.25 * fwhm * fwhm / (d * d + 0.25 * fwhm * fwhm) + offset);
  }
  return s;
}

TEST(Lorentzian, ExactDataRecoversParameters) {
  const auto s = lorentzian_spectrum(250e3, 0.6, 3e-20, 1e-25, 0.03, 801);
  for (auto w : {estimate::PeakWeighting::kRelative, estimate::PeakWeighting::kUniform}) {
    estimate::LorentzianOptions o;
    o.weighting = w;
    const auto r = estimate::fit_lorentzian(s, o);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value("center_hz"), 250e3, 1e-6);
    EXPECT_NEAR(r.value("fwhm_hz") / 0.6, 1.0, 1e-6);
    EXPECT_NEAR(r.value("amplitude_m2_per_hz") / 3e-20, 1.0, 1e-6);
    EXPECT_NEAR(r.value("q") / (250e3 / 0.6), 1.0, 1e-6);
  }
}

TEST(Lorentzian, ScaleEquivariance) {
  const auto a = lorentzian_spectrum(1e3, 2.0, 1.0, 0.01, 0.1, 401);
  auto b = a;
  for (double& v : b.psd) v *= 1e-24;
  for (double& f : b.freqs_hz) f = 1e5 + (f - 1e3) * 7.0;
  b.resolution_hz *= 7.0;
  const auto ra = estimate::fit_lorentzian(a);
  const auto rb = estimate::fit_lorentzian(b);
  EXPECT_NEAR(rb.value("fwhm_hz") / (7.0 * ra.value("fwhm_hz")), 1.0, 1e-8);
  EXPECT_NEAR(rb.value("amplitude_m2_per_hz") / (1e-24 * ra.value("amplitude_m2_per_hz")), 1.0, 1e-8);
}

TEST(Lorentzian, WarnsWhenUnresolved) {
  const auto s = lorentzian_spectrum(100.0, 1.0, 1.0, 0.0, 0.5, 101);
  const auto r = estimate::fit_lorentzian(s);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Lorentzian, FlatSpectrumHasNoPeak) {
  estimate::Spectrum s;
  s.resolution_hz = 1.0;
  for (int i = 0; i < 50; ++i) {
    s.freqs_hz.push_back(i);
    s.psd.push_back(1.0);
  }
  EXPECT_THROW(estimate::fit_lorentzian(s), FitError);
}

TEST(Lorentzian, SigmaScalesWithRecordLength) {
  // Relative linewidth error is about 1 / sqrt(pi T fwhm).
  // High Q so the thermal line is Lorentzian across the envelope band.
  mech::MechMode m{1e5, 1e4, 1e-9, 300.0};
  double sig_short = 0, sig_long = 0;
  for (double t : {500.0, 2000.0}) {
    synth::BrownianOptions o;
    o.sample_rate_hz = 320.0;
    o.duration_s = t;
    o.center_freq_hz = 1e5;
    o.seed = 11;
    const auto pa = estimate::analyze_peak(synth::synth_brownian(m, o));
    (t < 1000 ? sig_short : sig_long) = pa.fit.sigma("fwhm_hz") / pa.fit.value("fwhm_hz");
    EXPECT_NEAR(pa.fit.sigma("fwhm_hz") / pa.fit.value("fwhm_hz"), 1.0 / std::sqrt(oracle::kPi * t * 10.0), 0.3 / std::sqrt(oracle::kPi * t * 10.0));
  }
  EXPECT_NEAR(sig_short / sig_long, 2.0, 0.4);
}

TEST(Decay, OnsetDetection) {
  std::vector<double> y(1000, 1.0);
  for (std::size_t i = 100; i < y.size(); ++i) y[i] = std::exp(-(i - 100.0) / 50.0);
  const auto k = estimate::find_decay_onset(y, 0.9);
  EXPECT_GE(k, 100u);
  EXPECT_LE(k, 107u);
}

TEST(Decay, RecoversTauAndFinesse) {
  cavity::Cavity cav;
  const TimeSeries ts = synth::synth_optical_ringdown(cav, 2e7, 1.2e-4, INFINITY, 1);
  estimate::DecayOptions o;
  o.cavity_length_m = cav.length_m;
  const auto r = estimate::fit_exp_decay(ts, o);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value("tau_s") / cav.decay_tau(), 1.0, 1e-6);
  EXPECT_NEAR(r.value("finesse") / cav.finesse, 1.0, 1e-6);
}

TEST(Decay, RisingRecordIsAnError) {
  TimeSeries ts;
  ts.sample_rate_hz = 100.0;
  for (int i = 0; i < 100; ++i) ts.values.push_back(0.01 * i);
  estimate::DecayOptions o;
  o.trim_onset = false;
  EXPECT_THROW(estimate::fit_exp_decay(ts, o), FitError);
}

TEST(Decay, TauLongerThanSpanIsNotConverged) {
  TimeSeries ts;
  ts.sample_rate_hz = 100.0;
  for (int i = 0; i < 100; ++i) ts.values.push_back(std::exp(-0.01 * i / 20.0));
  estimate::DecayOptions o;
  o.trim_onset = false;
  const auto r = estimate::fit_exp_decay(ts, o);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Decay, MechanicalQFromEnvelope) {
  TimeSeries env;
  env.sample_rate_hz = 10.0;
  const double tau = 2.0 * 1e5 / (kTwoPi * 2.5e3);
  for (int i = 0; i < 400; ++i) env.values.push_back(1e-9 * std::exp(-i / 10.0 / tau));
  estimate::DecayOptions o;
  o.mech_f0_hz = 2.5e3;
  const auto r = estimate::fit_exp_decay(env, o);
  EXPECT_NEAR(r.value("q") / 1e5, 1.0, 1e-6);
}

TEST(Transfer, LogBinsUseGeometricCentersAndSampleStd) {
  const std::vector<double> f = {1.1, 1.2, 1.4, 2.0, 3.0};
  const std::vector<double> v = {1.0, 2.0, 3.0, 5.0, 7.0};
  const auto b = estimate::bin_log_frequency(f, v, 5);
  ASSERT_EQ(b.centers_hz.size(), 3u);
  EXPECT_NEAR(b.centers_hz[0], std::pow(10.0, 0.1), 1e-12);
  EXPECT_NEAR(b.mean[0], 2.0, 1e-12);
  EXPECT_NEAR(b.stddev[0], 1.0, 1e-12);
  EXPECT_EQ(b.count[0], 3u);
  EXPECT_EQ(b.stddev[1], 0.0);
}

std::vector<DriveRecord> records_from(const std::vector<double>& freqs, double gain) {
  std::vector<DriveRecord> out;
  for (double f : freqs) {
    DriveRecord r;
    r.drive_freq_hz = f;
    for (TimeSeries* ts : {&r.base, &r.response}) ts->sample_rate_hz = 16.0 * f;
    for (int i = 0; i < 800; ++i) {
      const double s = std::sin(kTwoPi * i / 16.0);
      r.base.values.push_back(1e-9 * s);
      r.response.values.push_back(gain * 1e-9 * s);
    }
    out.push_back(std::move(r));
  }
  return out;
}

TEST(Transfer, IdenticalChannelsGiveZeroDecibels) {
  const auto rec = records_from(synth::log_spaced(1.0, 1e4, 10), 1.0);
  const auto e = estimate::estimate_transfer(rec);
  for (double v : e.magnitude_db) EXPECT_NEAR(v, 0.0, 1e-9);
  EXPECT_EQ(e.excluded, 0u);
}

TEST(Transfer, DcNormalizationRemovesUnknownGain) {
  const auto rec = records_from(synth::log_spaced(1.0, 1e4, 10), 0.1);
  estimate::TransferOptions o;
  const auto raw = estimate::estimate_transfer(rec, o);
  EXPECT_NEAR(raw.magnitude_db.front(), -20.0, 1e-9);
  o.dc_cutoff_hz = 100.0;
  const auto norm = estimate::estimate_transfer(rec, o);
  EXPECT_TRUE(norm.dc_normalized);
  EXPECT_NEAR(norm.dc_reference_db, -20.0, 1e-9);
  for (double v : norm.magnitude_db) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Transfer, UndetectedBaseIsExcluded) {
  auto rec = records_from({10.0, 20.0}, 1.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1e-6);
  for (double& v : rec[1].base.values) v = n(rng);
  const auto e = estimate::estimate_transfer(rec);
  EXPECT_EQ(e.excluded, 1u);
  EXPECT_EQ(e.points.size(), 1u);
}

}  // namespace
