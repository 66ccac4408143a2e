#include <gtest/gtest.h>

#include "frmsol/config.hpp"

using namespace frmsol;

namespace {

const std::string kFig2 = std::string(FRMSOL_SOURCE_DIR) + "/configs/fig2.cfg";

std::string error_of(const std::string& text, const std::vector<std::string>& ov = {}) {
  try {
    parse_config_text(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ReferenceFile) {
  const Config c = parse_config(kFig2);
  EXPECT_EQ(c.schedule.g0f_abs, 22.5);
  EXPECT_EQ(c.schedule.g1f, 90.0);
  EXPECT_EQ(c.schedule.eps_f, 25.0);
  EXPECT_EQ(c.schedule.omega_frm, 40.0);
  EXPECT_EQ(c.schedule.omega_perp0, 0.3);
  EXPECT_EQ(c.schedule.t1, 30.0);
  EXPECT_EQ(c.schedule.t4, 130.0);
  EXPECT_EQ(c.grid.n_rho, 64);
  EXPECT_EQ(c.grid.n_z, 512);
  EXPECT_DOUBLE_EQ(c.grid.z_max, 8 * pi);
  EXPECT_DOUBLE_EQ(c.endcap.z_cap, 2.5 * pi);
  EXPECT_EQ(c.solver.dt, 2e-3);
  EXPECT_EQ(c.solver.t_end, 500.0);
  EXPECT_EQ(c.isolation.cells, (std::vector<int>{-2, -1, 1, 2}));
  EXPECT_FALSE(c.sweep.has_value());
}

TEST(Config, OverridesApplyAfterFile) {
  const Config c = parse_config(kFig2, {"schedule.eps_f=0", "e_number=0.7", "solver.t_end=600"});
  EXPECT_EQ(c.schedule.eps_f, 0.0);
  EXPECT_EQ(c.e_number, 0.7);
  EXPECT_EQ(c.solver.t_end, 600.0);
  EXPECT_EQ(c.schedule.g1f, 90.0);
}

TEST(Config, UnknownKeyIsNamed) {
  const auto msg = error_of("[schedule]\nepsilon_f = 25\n");
  EXPECT_NE(msg.find("schedule.epsilon_f"), std::string::npos) << msg;
  EXPECT_NE(error_of("", {"schedule.epsilon_f=3"}).find("schedule.epsilon_f"), std::string::npos);
  EXPECT_NE(error_of("bogus = 1\n").find("bogus"), std::string::npos);
}

TEST(Config, UnknownSection) {
  EXPECT_NE(error_of("[lattice]\ndepth = 3\n").find("lattice"), std::string::npos);
}

TEST(Config, TypeMismatch) {
  const auto msg = error_of("[grid]\nn_rho = sixty\n");
  EXPECT_NE(msg.find("grid.n_rho"), std::string::npos) << msg;
  EXPECT_NE(error_of("[schedule]\ng1f = 9O\n").find("schedule.g1f"), std::string::npos);
}

TEST(Config, InvariantViolations) {
  EXPECT_NE(error_of("[schedule]\nt1 = 150\n").find("schedule"), std::string::npos);
  EXPECT_NE(error_of("[grid]\nz_max = 10\n").find("grid"), std::string::npos);
  EXPECT_NE(error_of("[solver]\ndt = 0.05\n").find("solver"), std::string::npos);
  EXPECT_NE(error_of("[solver]\nboundary = periodic\n").find("boundary"), std::string::npos);
  EXPECT_NE(error_of("e_number = -1\n").find("e_number"), std::string::npos);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(parse_config("/nonexistent/run.cfg"), ConfigError);
}

TEST(Config, PiMultiples) {
  const Config c = parse_config_text("[grid]\nz_max = 3pi\n[endcap]\nz_cap = 2.5*pi\n");
  EXPECT_DOUBLE_EQ(c.grid.z_max, 3 * pi);
  EXPECT_DOUBLE_EQ(c.endcap.z_cap, 2.5 * pi);
  const Config d = parse_config_text("[grid]\nz_max = pi\nn_z = 64\n");
  EXPECT_DOUBLE_EQ(d.grid.z_max, pi);
  EXPECT_DOUBLE_EQ(d.endcap.z_cap, 0.5 * pi);
}

TEST(Config, SweepSection) {
  const Config c = parse_config_text(
      "e_number = 1\n"
      "[sweep]\n"
      "x_name = g0f_abs\nx_min = 0.5\nx_max = 3\nx_count = 11\n"
      "y_name = omega_frm\ny_min = 10\ny_max = 100\ny_count = 10\n"
      "runner = va\nlinks = g1f=4*g0f_abs\n");
  ASSERT_TRUE(c.sweep.has_value());
  const auto& s = *c.sweep;
  EXPECT_EQ(s.x.count, 11);
  EXPECT_EQ(s.y.max, 100.0);
  EXPECT_EQ(s.runner, Runner::VA);
  ASSERT_EQ(s.derived_links.size(), 1u);
  EXPECT_EQ(s.derived_links[0].target, "g1f");
  EXPECT_EQ(s.derived_links[0].source, "g0f_abs");
  EXPECT_EQ(s.derived_links[0].factor, 4.0);
  EXPECT_EQ(s.grid.n_rho, 48);
  EXPECT_EQ(s.grid.n_z, 384);
  EXPECT_EQ(s.base_solver.t_end, 400.0);

  EXPECT_NE(error_of("[sweep]\nx_name = g0f_abs\ny_name = nope\n").find("nope"), std::string::npos);
  EXPECT_NE(error_of("[sweep]\nx_name = g0f_abs\ny_name = omega_frm\nrunner = fast\n").find("runner"),
            std::string::npos);
}
