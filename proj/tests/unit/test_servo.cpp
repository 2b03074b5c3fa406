#include <cmath>

#include <gtest/gtest.h>

#include "trampoline/cavity.hpp"
#include "trampoline/constants.hpp"
#include "trampoline/mech.hpp"
#include "trampoline/servo.hpp"

namespace {

using namespace trampoline;
using constants::kTwoPi;

TEST(Lock, SuggestedConfigSitsOnInflection) {
  cavity::Cavity cav;
  const auto cfg = servo::suggest_lock_config(cav, 2e7, 1e6);
  EXPECT_NEAR(cfg.detuning_bias_hz, cav.linewidth_fwhm() / (2.0 * std::sqrt(3.0)), 1e-6);
  EXPECT_NEAR(cfg.setpoint, 0.75, 1e-12);
  EXPECT_GT(cfg.ki, 0.0);
}

TEST(Lock, ZeroGainMatchesOpenLoop) {
  const auto model = mech::design_point();
  cavity::Cavity cav;
  auto cfg = servo::suggest_lock_config(cav, 2e7, 1e6);
  cfg.ki = 0.0;
  const auto r = servo::simulate_lock(model, cav, cfg, 2e-3, 4);
  const TimeSeries open = servo::open_loop_error(model, cav, cfg, 2e-3, 4);
  ASSERT_EQ(open.size(), r.error.size());
  for (std::size_t i = 0; i < open.size(); ++i) EXPECT_NEAR(open.values[i], r.error.values[i], 1e-15);
  EXPECT_FALSE(r.lock_acquired);
}

TEST(Lock, DefaultLoopSuppressesOuterMotion) {
  const auto model = mech::design_point();
  cavity::Cavity cav;
  const auto cfg = servo::suggest_lock_config(cav, 2e7, 1e6);
  const auto r = servo::simulate_lock(model, cav, cfg, 0.02, 1);
  EXPECT_TRUE(r.lock_acquired);
  EXPECT_EQ(r.saturated_fraction, 0.0);
  EXPECT_LT(r.closed_loop_excursion_hz, cav.linewidth_fwhm() / 20.0);
  EXPECT_LT(r.closed_loop_error_rms, 0.1 * r.open_loop_error_rms);
}

TEST(Lock, TinyActuatorSaturates) {
  const auto model = mech::design_point();
  cavity::Cavity cav;
  const auto cfg = servo::suggest_lock_config(cav, 2e7, 1e6, 1e-16);
  const auto r = servo::simulate_lock(model, cav, cfg, 0.02, 1);
  EXPECT_GT(r.saturated_fraction, 0.01);
  EXPECT_FALSE(r.lock_acquired);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Lock, SlowLoopRejected) {
  const auto model = mech::design_point();
  cavity::Cavity cav;
  const auto cfg = servo::suggest_lock_config(cav, 1e4, 1e3);
  EXPECT_THROW(servo::simulate_lock(model, cav, cfg, 0.01, 1), std::invalid_argument);
}

TEST(Cooling, RedDetuningDampsBlueAntiDamps) {
  cavity::Cavity cav;
  const double wm = kTwoPi * 250e3;
  servo::CoolingConfig c{29.0, 1e5, -wm, cav.kappa()};
  EXPECT_GT(servo::optical_damping_rate(c, wm), 0.0);
  c.detuning = wm;
  EXPECT_LT(servo::optical_damping_rate(c, wm), 0.0);
  c.detuning = 0.0;
  EXPECT_NEAR(servo::optical_damping_rate(c, wm), 0.0, 1e-9);
}

TEST(Cooling, ResolvedSidebandLimit) {
  // kappa << wm at the red sideband: Gamma_opt -> 4 g0^2 n / kappa.
  cavity::Cavity cav;
  const double wm = kTwoPi * 250e3;
  const servo::CoolingConfig c{29.0, 1e5, -wm, cav.kappa()};
  const double expect = 4.0 * 29.0 * 29.0 * 1e5 / cav.kappa();
  EXPECT_NEAR(servo::optical_damping_rate(c, wm) / expect, 1.0, 0.01);
}

TEST(Cooling, EffectiveTemperature) {
  const mech::MechMode m{250e3, 1e5, 5e-11, 300.0};
  EXPECT_DOUBLE_EQ(servo::effective_temperature(m, 0.0), 300.0);
  EXPECT_NEAR(servo::effective_temperature(m, 3.0 * m.gamma()), 75.0, 1e-9);
  EXPECT_GT(servo::effective_temperature(m, -0.5 * m.gamma()), 300.0);
  EXPECT_THROW(servo::effective_temperature(m, -m.gamma()), std::domain_error);
}

}  // namespace
