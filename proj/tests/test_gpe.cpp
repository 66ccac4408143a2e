#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "frmsol/gpe.hpp"
#include "frmsol/variational.hpp"

using namespace frmsol;

namespace {

Field gaussian(const Grid& g, double s_rho, double s_z) {
  return sample_field(g, [&](double r, double z) {
    return std::exp(-r * r / (2 * s_rho * s_rho) - z * z / (2 * s_z * s_z));
  });
}

double l2_distance(const Field& a, const Field& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    num += std::norm(a.values[i] - b.values[i]);
    den += std::norm(b.values[i]);
  }
  return std::sqrt(num / den);
}

double parity_defect(const Field& f) {
  const Grid& g = f.grid;
  double num = 0.0, den = 0.0;
  for (int j = 0; j < g.n_rho; ++j) {
    for (int k = 0; k < g.n_z; ++k) {
      num += std::norm(f(j, k) - f(j, g.n_z - 1 - k)) * g.rho(j);
      den += std::norm(f(j, k)) * g.rho(j);
    }
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST(Propagator, FreeGaussianSpreading) {
  // |psi|^2 ~ exp(-x^2 / s(t)^2) per Cartesian direction, s(t)^2 = s0^2 (1 + t^2 / s0^4)
  const double s0 = 1.0;
  const Grid g = make_grid(256, 512, 12.0, 4 * pi);
  Field f = gaussian(g, s0, s0);
  Propagator prop(g, 1e-3, Endcap::none());
  const auto o0 = observables(f);
  for (int n = 1; n <= 1000; ++n) {
    prop.step(f, Coefficients{});
    if (n % 250 == 0) {
      const double t = n * 1e-3;
      const double growth = std::sqrt(1.0 + t * t / std::pow(s0, 4));
      const auto o = observables(f);
      EXPECT_NEAR(o.rms_rho / o0.rms_rho, growth, 0.005 * growth) << "t = " << t;
      EXPECT_NEAR(o.rms_z / o0.rms_z, growth, 0.005 * growth) << "t = " << t;
    }
  }
}

TEST(Propagator, OscillatorGroundStateIsStationary) {
  // exp(-rho^2/2) in a unit trap times the lowest Dirichlet mode along z;
  // the sampled Gaussian differs from the discrete eigenstate at O(d_rho^2)
  const Grid g = make_grid(3072, 16, 6.0, pi);
  Field f = sample_field(g, [&](double r, double z) {
    return std::exp(-0.5 * r * r) * std::cos(0.5 * pi * z / g.z_max);
  });
  std::vector<double> before(f.values.size());
  for (std::size_t i = 0; i < before.size(); ++i) before[i] = std::abs(f.values[i]);
  const double dt = 2 * pi / 8000;
  Propagator prop(g, dt, Endcap::none());
  double worst = 0.0;
  for (int n = 0; n < 8000; ++n) {
    prop.step(f, Coefficients{0.0, 0.0, 1.0});
    if (n % 1000 == 999) {
      for (std::size_t i = 0; i < before.size(); ++i)
        worst = std::max(worst, std::abs(std::abs(f.values[i]) - before[i]));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Propagator, StepPreservesNorm) {
  const Grid g = make_grid(48, 256, 8.0, 4 * pi);
  Field f = gaussian(g, 1.2, 1.5);
  const double n0 = norm(f);
  const Schedule s;
  step(f, 140.0, 2e-3, s, Endcap{1e3, 3.5 * pi});
  EXPECT_NEAR(norm(f) / n0, 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(f.time, 140.002);
}

TEST(Propagator, StepRejectsNonFiniteField) {
  const Grid g = make_grid(16, 64, 4.0, 2 * pi);
  Field f = gaussian(g, 1.0, 1.0);
  f(3, 7) = cplx(NAN, 0.0);
  EXPECT_THROW(step(f, 0.0, 1e-3, Schedule{}, Endcap::none()), std::runtime_error);
}

TEST(Propagator, ParityIsPreserved) {
  const Grid g = make_grid(48, 256, 8.0, 4 * pi);
  Schedule s;
  Field f = gaussian(g, 1.0, 0.5);
  scale(f, std::sqrt(0.2 * std::pow(pi, 1.5) / norm(f)));
  f.time = 120.0;
  Propagator prop(g, 2e-3, Endcap{1e3, 3.5 * pi});
  prop.advance(f, 120.0, 10000, s);
  EXPECT_LT(parity_defect(f), 1e-8);
}

TEST(Propagator, SecondOrderInTime) {
  // a short window with every coefficient changing: trap release + FRM switch-on
  const Grid g = make_grid(32, 128, 6.0, 2 * pi);
  const Schedule s;
  Field init = gaussian(g, 1.0, 1.0);
  scale(init, std::sqrt(0.3 * std::pow(pi, 1.5) / norm(init)));
  init.time = 124.0;
  auto run = [&](double dt) {
    Field f = init;
    Propagator prop(g, dt, Endcap::none());
    prop.advance(f, 124.0, std::lround(0.5 / dt), s);
    return f;
  };
  const Field ref = run(0.5 / 12800);
  const double e1 = l2_distance(run(0.5 / 400), ref);
  const double e2 = l2_distance(run(0.5 / 800), ref);
  const double e3 = l2_distance(run(0.5 / 1600), ref);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.2);
  EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.2);
}

TEST(Propagator, FusedAdvanceMatchesSingleSteps) {
  const Grid g = make_grid(16, 64, 4.0, 2 * pi);
  const Schedule s;
  Field a = gaussian(g, 1.0, 0.8);
  a.time = 125.0;
  Field b = a;
  Propagator prop(g, 1e-3, Endcap::none());
  for (int n = 0; n < 50; ++n) prop.step(a, 125.0 + n * 1e-3, s);
  prop.advance(b, 125.0, 50, s);
  EXPECT_LT(l2_distance(b, a), 1e-12);
}

TEST(Propagator, AgreesWithWidthEquationsForLinearDynamics) {
  // g = 0, unit trap, no lattice: the Gaussian ansatz is exact and rms_rho = W;
  // the radial grid has to resolve the W = 0.5 waist at t = 3 pi / 2
  const Grid g = make_grid(384, 64, 12.0, 4 * pi);
  Field f = gaussian(g, 2.0, 2.0);
  const Coefficients c{0.0, 0.0, 1.0};
  Propagator prop(g, 2e-3, Endcap::none());
  const auto traj = va_integrate(VaState{2.0, 2.0, 0.0, 0.0},
                                 VaParams{1.0, constant_coefficients(c), 0.0}, 5.0, 2e-3, 250);
  ASSERT_EQ(traj.samples.size(), 11u);
  EXPECT_NEAR(observables(f).rms_rho, 2.0, 0.02 * 2.0);
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    for (int n = 0; n < 250; ++n) prop.step(f, c);
    const double w = traj.samples[i].state.w;
    EXPECT_NEAR(observables(f).rms_rho, w, 0.02 * w) << "t = " << traj.samples[i].t;
  }
}

TEST(GroundState, RadialOscillatorProfile) {
  // no interaction, no caps: exp(-w rho^2 / 2) times the lowest axial Dirichlet mode
  const Grid g = make_grid(64, 64, 8.0, 2 * pi);
  Schedule s;
  s.g_init = 0.0;
  SolverConfig cfg;
  const Field f = prepare_initial_state(g, s, 0.5, cfg, Endcap::none());
  EXPECT_EQ(f.time, 0.0);
  Field ref = sample_field(g, [&](double r, double z) {
    return std::exp(-0.15 * r * r) * std::cos(0.5 * pi * z / g.z_max);
  });
  scale(ref, std::sqrt(norm(f) / norm(ref)));
  // fix the global phase
  cplx overlap = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) overlap += std::conj(ref.values[i]) * f.values[i];
  Field aligned = f;
  for (auto& v : aligned.values) v *= std::conj(overlap) / std::abs(overlap);
  EXPECT_LT(l2_distance(aligned, ref), 0.01);
}

TEST(GroundState, ConvergedAndNormalised) {
  const Grid g = make_grid(32, 128, 8.0, 4 * pi);
  const Schedule s;
  SolverConfig cfg;
  const Endcap cap = default_endcap(g);
  const double target = 0.2 * std::pow(pi, 1.5);
  const Field f = prepare_initial_state(g, s, 0.2, cfg, cap);
  EXPECT_NEAR(norm(f) / target, 1.0, 1e-13);

  const Coefficients c0 = coefficients_at(0.0, s);
  const Propagator probe(g, cfg.dt, cap);
  const double e0 = probe.energy(f, c0);
  const auto again = relax(f, c0, cap, target, cfg.imag_dt, cfg.imag_time_tol, cfg.max_imag_iters);
  EXPECT_LT(std::abs(again.energy - e0) / std::abs(e0), cfg.imag_time_tol);
}

TEST(GroundState, NonConvergenceIsAnError) {
  const Grid g = make_grid(32, 128, 8.0, 4 * pi);
  SolverConfig cfg;
  cfg.max_imag_iters = 3;
  EXPECT_THROW(prepare_initial_state(g, Schedule{}, 0.2, cfg, default_endcap(g)), std::runtime_error);
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  const Schedule s;
  EXPECT_NO_THROW(validate(c, &s));
  c.dt = s.frm_period() / 10.0;
  EXPECT_THROW(validate(c, &s), std::invalid_argument);
  c = SolverConfig{};
  c.snapshot_times = {50.0, 20.0};
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.snapshot_times = {20.0, 600.0};
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(Evolve, SnapshotsAndSeries) {
  const Grid g = make_grid(16, 64, 6.0, 2 * pi);
  const Schedule s;
  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 2.0;
  cfg.sample_stride = 10;
  cfg.snapshot_times = {0.0, 0.55, 2.0};
  const std::string dir = std::string(FRMSOL_TEST_TMP) + "/evolve_snap";
  std::filesystem::remove_all(dir);
  cfg.snapshot_dir = dir;
  const Endcap cap = default_endcap(g);
  const auto rec = evolve(prepare_initial_state(g, s, 0.2, cfg, cap), s, cfg, cap);

  ASSERT_EQ(rec.snapshots.size(), 3u);
  EXPECT_NEAR(rec.snapshots[1].time, 0.55, 1e-12);
  for (double t : cfg.snapshot_times) EXPECT_TRUE(std::filesystem::exists(dir + "/" + snapshot_name(t)));
  EXPECT_EQ(rec.series.size(), 21u);
  for (std::size_t i = 1; i < rec.series.size(); ++i) EXPECT_GT(rec.series[i].t, rec.series[i - 1].t);
  EXPECT_NEAR(rec.final_field.time, 2.0, 1e-12);
  // the record ends long before t4
  EXPECT_EQ(rec.verdict, Verdict::Indeterminate);

  const Field back = read_snapshot(dir + "/" + snapshot_name(0.55));
  EXPECT_EQ(back.values, rec.snapshots[1].values);

  const std::string csv = std::string(FRMSOL_TEST_TMP) + "/series.csv";
  write_series_csv(csv, rec);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,peak,norm,E,rms_rho,rms_z,cell_-2,cell_-1,cell_0,cell_1,cell_2");
}

TEST(Evolve, NonFiniteFieldAbortsAsCollapse) {
  const Grid g = make_grid(16, 64, 6.0, 2 * pi);
  Field f = gaussian(g, 1.0, 1.0);
  f(2, 30) = cplx(INFINITY, 0.0);
  f.time = 130.0;
  SolverConfig cfg;
  cfg.t_end = 131.0;
  const auto rec = evolve(f, Schedule{}, cfg, default_endcap(g));
  EXPECT_TRUE(rec.aborted);
  EXPECT_EQ(rec.verdict, Verdict::Collapse);
}
