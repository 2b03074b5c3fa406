#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "trampoline/cavity.hpp"
#include "trampoline/constants.hpp"
#include "trampoline/estimate.hpp"
#include "trampoline/mech.hpp"
#include "trampoline/synth.hpp"

namespace {

using namespace trampoline;
using constants::kTwoPi;

double variance(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

TEST(KeyedNormals, DeterministicAndStandard) {
  EXPECT_EQ(synth::keyed_normal_pair(5, 17), synth::keyed_normal_pair(5, 17));
  EXPECT_NE(synth::keyed_normal_pair(5, 17), synth::keyed_normal_pair(6, 17));
  double m = 0.0, v = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = synth::keyed_normal_pair(1, i);
    m += a + b;
    v += a * a + b * b;
  }
  EXPECT_NEAR(m / (2.0 * n), 0.0, 0.01);
  EXPECT_NEAR(v / (2.0 * n), 1.0, 0.01);
}

TEST(Brownian, VarianceMatchesEquipartition) {
  const mech::MechMode m{1000.0, 50.0, 1e-9, 300.0};
  synth::BrownianOptions o;
  o.sample_rate_hz = 8000.0;
  o.duration_s = 200.0;
  o.seed = 3;
  const TimeSeries ts = synth::synth_brownian(m, o);
  EXPECT_EQ(ts.size(), 1'600'000u);
  EXPECT_NEAR(variance(ts.values) / std::pow(mech::thermal_rms(m), 2), 1.0, 0.05);
  EXPECT_TRUE(ts.warnings.empty());
}

TEST(Brownian, SameSeedSameRecord) {
  const mech::MechMode m{1000.0, 50.0, 1e-9, 300.0};
  synth::BrownianOptions o;
  o.sample_rate_hz = 8000.0;
  o.duration_s = 1.0;
  o.seed = 9;
  EXPECT_EQ(synth::synth_brownian(m, o).values, synth::synth_brownian(m, o).values);
  auto o2 = o;
  o2.seed = 10;
  EXPECT_NE(synth::synth_brownian(m, o).values, synth::synth_brownian(m, o2).values);
}

TEST(Brownian, ZeroTemperatureGivesZeros) {
  const mech::MechMode m{1000.0, 50.0, 1e-9, 0.0};
  synth::BrownianOptions o;
  o.sample_rate_hz = 8000.0;
  o.duration_s = 1.0;
  for (double v : synth::synth_brownian(m, o).values) EXPECT_EQ(v, 0.0);
}

TEST(Brownian, EnvelopeAndBasebandAreTheSameRealization) {
  // High Q keeps the power outside the envelope band negligible.
  const mech::MechMode m{1000.0, 1e5, 1e-9, 300.0};
  synth::BrownianOptions base;
  base.sample_rate_hz = 8000.0;
  base.duration_s = 50.0;
  base.seed = 21;
  synth::BrownianOptions env = base;
  env.sample_rate_hz = 500.0;
  env.center_freq_hz = 1000.0;
  const TimeSeries a = synth::synth_brownian(m, base);
  const TimeSeries b = synth::synth_brownian(m, env);
  ASSERT_TRUE(b.is_complex());
  // Reconstruct the physical signal at the envelope sample instants.
  const std::size_t stride = static_cast<std::size_t>(base.sample_rate_hz / env.sample_rate_hz);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double t = static_cast<double>(i) / env.sample_rate_hz;
    const double phys = b.values[i] * std::cos(kTwoPi * b.center_freq_hz * t) -
                        b.quadrature[i] * std::sin(kTwoPi * b.center_freq_hz * t);
    const double d = phys - a.values[i * stride];
    err += d * d;
    ref += a.values[i * stride] * a.values[i * stride];
  }
  EXPECT_LT(std::sqrt(err / ref), 0.02);
}

TEST(Brownian, ShortRecordWarns) {
  const mech::MechMode m{1000.0, 1e5, 1e-9, 300.0};
  synth::BrownianOptions o;
  o.sample_rate_hz = 8000.0;
  o.duration_s = 1.0;
  EXPECT_FALSE(synth::synth_brownian(m, o).warnings.empty());
}

TEST(Brownian, NoiseFloorAddsWhiteLevel) {
  const mech::MechMode m{1000.0, 50.0, 1e-9, 0.0};
  synth::BrownianOptions o;
  o.sample_rate_hz = 8000.0;
  o.duration_s = 20.0;
  o.noise_floor = 2e-20;
  const TimeSeries ts = synth::synth_brownian(m, o);
  EXPECT_NEAR(variance(ts.values) / (2e-20 * 4000.0), 1.0, 0.03);
}

TEST(Brownian, PsdFollowsThermalModel) {
  const mech::MechMode m{1000.0, 20.0, 1e-9, 300.0};
  synth::BrownianOptions o;
  o.sample_rate_hz = 8000.0;
  o.duration_s = 400.0;
  o.seed = 2;
  estimate::WelchOptions w;
  w.segment_len = 8000;
  const auto s = estimate::welch_psd(synth::synth_brownian(m, o), w);
  for (double f : {300.0, 900.0, 1000.0, 1100.0, 2000.0}) {
    const auto k = static_cast<std::size_t>(std::lround(f / s.resolution_hz));
    EXPECT_NEAR(s.psd[k] / mech::thermal_psd(f, m), 1.0, 0.15) << f;
  }
}

TEST(OpticalRingdown, ShapeAndPretrigger) {
  cavity::Cavity cav;
  const double tau = cav.decay_tau();
  const TimeSeries ts = synth::synth_optical_ringdown(cav, 200.0 / tau, 12.0 * tau, INFINITY, 1);
  const auto shutoff = static_cast<std::size_t>(std::lround(-ts.t0_s * ts.sample_rate_hz));
  EXPECT_EQ(shutoff, 240u);
  EXPECT_EQ(ts.size(), 2640u);
  EXPECT_EQ(ts.values[shutoff - 1], 1.0);
  EXPECT_NEAR(ts.values[shutoff + 200], std::exp(-1.0), 1e-9);
  EXPECT_LT(ts.values.back(), 1e-4);
}

TEST(MechRingdown, EnvelopeDecaysAtAmplitudeRate) {
  const mech::MechMode m{2.5e3, 1e4, 1e-7, 0.0};
  synth::MechRingdownOptions o;
  o.sample_rate_hz = 2e4;
  o.duration_s = 3.0 * 2.0 * m.q / m.omega0();
  o.snr = INFINITY;
  o.envelope_rate_hz = 100.0;
  const auto r = synth::synth_mech_ringdown(m, o);
  EXPECT_NEAR(r.raw.values.front(), o.x0_m, 1e-15);
  const double tau = 2.0 * m.q / m.omega0();
  for (std::size_t i = 5; i < r.envelope.size(); i += 37) {
    const double t = r.envelope.time(i);
    EXPECT_NEAR(r.envelope.values[i] / (o.x0_m * std::exp(-t / tau)), 1.0, 0.01) << t;
  }
}

TEST(Sweep, FrequenciesAreLogSpacedAndExcludeUpperEnd) {
  const auto f = synth::log_spaced(1.0, 1e5, 20);
  EXPECT_EQ(f.size(), 100u);
  EXPECT_DOUBLE_EQ(f.front(), 1.0);
  EXPECT_LT(f.back(), 1e5);
  EXPECT_NEAR(f[20], 10.0, 1e-9);
}

TEST(Sweep, NoiselessSingleStageFollowsTransfer) {
  const mech::MechMode m{2.5e3, 30.0, 1e-7, 0.0};
  const std::vector<double> f = {100.0, 2.5e3, 2e4};
  synth::SweepOptions o;
  const auto recs = synth::synth_drive_sweep(m, f, o);
  ASSERT_EQ(recs.size(), 3u);
  for (const auto& r : recs) {
    EXPECT_EQ(r.base.sample_rate_hz, 16.0 * r.drive_freq_hz);
    const double ratio = std::sqrt(variance(r.response.values) / variance(r.base.values));
    EXPECT_NEAR(ratio / std::sqrt(mech::transfer_power(kTwoPi * r.drive_freq_hz, m)), 1.0, 1e-3)
        << r.drive_freq_hz;
  }
}

TEST(Sweep, BaseScaleOnlyChangesBaseChannel) {
  const mech::MechMode m{2.5e3, 30.0, 1e-7, 0.0};
  const std::vector<double> f = {500.0};
  synth::SweepOptions o;
  const auto a = synth::synth_drive_sweep(m, f, o);
  o.base_scale = 2.0;
  const auto b = synth::synth_drive_sweep(m, f, o);
  EXPECT_EQ(a[0].response.values, b[0].response.values);
  EXPECT_NEAR(b[0].base.values[5], 2.0 * a[0].base.values[5], 1e-24);
}

TEST(SideOfFringe, SmallSignalCalibration) {
  cavity::Cavity cav;
  const double bias = cavity::inflection_detuning(cav);
  TimeSeries x;
  x.sample_rate_hz = 1e6;
  for (int i = 0; i < 100; ++i) x.values.push_back(1e-16 * std::sin(0.3 * i));
  const TimeSeries s = synth::transduce_side_of_fringe(x, cav, bias);
  const double s0 = cavity::fringe_response(bias, cav);
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR((s.values[i] - s0) * s.calibration, x.values[i], 1e-19);
  }
}

}  // namespace
