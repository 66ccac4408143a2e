#include <gtest/gtest.h>

#include <cmath>

#include "frmsol/schedule.hpp"

using namespace frmsol;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST(Schedule, LatticeRamp) {
  const Schedule s;
  EXPECT_EQ(epsilon_at(0.0, s), 0.0);
  EXPECT_EQ(epsilon_at(100.0, s), 25.0);
  EXPECT_EQ(epsilon_at(400.0, s), 25.0);
  EXPECT_DOUBLE_EQ(epsilon_at(50.0, s), 12.5);
}

TEST(Schedule, RadialTrapRelease) {
  const Schedule s;
  EXPECT_EQ(omega_perp_at(0.0, s), 0.3);
  EXPECT_EQ(omega_perp_at(120.0, s), 0.3);
  EXPECT_NEAR(omega_perp_at(125.0, s), 0.15, 1e-15);
  EXPECT_EQ(omega_perp_at(130.0, s), 0.0);
  EXPECT_EQ(omega_perp_at(300.0, s), 0.0);
}

TEST(Schedule, NonlinearityProtocol) {
  const Schedule s;
  EXPECT_EQ(g_at(0.0, s), 10.0);
  EXPECT_EQ(g_at(30.0, s), 10.0);
  EXPECT_DOUBLE_EQ(g_at(65.0, s), 5.0);
  EXPECT_EQ(g_at(100.0, s), 0.0);
  EXPECT_EQ(g_at(110.0, s), 0.0);
  // sin(40 t) = 0 at t = k pi / 40
  const double t = 1700.0 * kPi / 40.0;
  EXPECT_NEAR(g_at(t, s), -22.5, 1e-9);
  const double t_half = 120.0 + 5.0;
  EXPECT_NEAR(g_at(t_half, s), 0.5 * (-22.5 + 90.0 * std::sin(40.0 * t_half)), 1e-12);
}

TEST(Schedule, NoFrmAmplitudeGivesConstantMean) {
  Schedule s;
  s.g1f = 0.0;
  for (double t = 130.0; t < 200.0; t += 0.37) EXPECT_EQ(g_at(t, s), -22.5);
}

TEST(Schedule, CoefficientsAreContinuous) {
  const Schedule s;
  const double h = 1e-11;
  for (double tb : {s.t1, s.t2, s.t3, s.t4}) {
    EXPECT_NEAR(g_at(tb - h, s), g_at(tb + h, s), 1e-6) << "g at " << tb;
    EXPECT_NEAR(epsilon_at(tb - h, s), epsilon_at(tb + h, s), 1e-6) << "eps at " << tb;
    EXPECT_NEAR(omega_perp_at(tb - h, s), omega_perp_at(tb + h, s), 1e-6) << "omega at " << tb;
  }
}

TEST(Schedule, FrmPeriodAverage) {
  const Schedule s;
  // the rectangle rule is exact up to round-off for a trigonometric polynomial over one period
  const int n = 64;
  const double period = s.frm_period();
  for (double t0 : {130.0, 200.3, 417.9}) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += g_at(t0 + period * i / n, s);
    EXPECT_NEAR(sum / n, -22.5, 1e-10);
  }
}

TEST(Schedule, MonotoneRamps) {
  const Schedule s;
  double eps_prev = -1.0, om_prev = 1e9;
  for (double t = 0.0; t <= 200.0; t += 0.25) {
    EXPECT_GE(epsilon_at(t, s), eps_prev);
    EXPECT_LE(omega_perp_at(t, s), om_prev);
    eps_prev = epsilon_at(t, s);
    om_prev = omega_perp_at(t, s);
  }
}

TEST(Potential, Examples) {
  const Schedule s;
  const Endcap cap{1e3, 2.5 * kPi};
  EXPECT_EQ(potential_at(0.0, 0.0, 140.0, s, cap), 0.0);
  EXPECT_NEAR(potential_at(0.0, 0.5 * kPi, 100.0, s, cap), 50.0, 1e-12);
  EXPECT_NEAR(potential_at(2.0, 0.0, 0.0, s, cap), 0.18, 1e-15);
  EXPECT_NEAR(potential_at(0.0, 2.5 * kPi, 0.0, s, cap), 1e3, 1e-12);
  EXPECT_EQ(potential_at(0.0, 3.0, 0.0, s, Endcap::none()), 0.0);
}

TEST(Schedule, Validation) {
  Schedule s;
  EXPECT_NO_THROW(validate(s));
  s.t2 = 20.0;
  EXPECT_THROW(validate(s), std::invalid_argument);
  s = Schedule{};
  s.g0f_abs = 0.0;
  EXPECT_THROW(validate(s), std::invalid_argument);
  s = Schedule{};
  s.omega_frm = 0.0;
  EXPECT_THROW(validate(s), std::invalid_argument);
  s = Schedule{};
  s.t3 = s.t4;
  EXPECT_THROW(validate(s), std::invalid_argument);
}
