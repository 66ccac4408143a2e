#pragma once

// Strict INI-style configuration: named sections of typed scalars. Unknown
// sections or keys are errors. Reals may be written with a trailing "pi"
// ("8pi", "2.5pi", "pi") so that lattice-aligned extents are exact.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frmsol/analysis.hpp"
#include "frmsol/gpe.hpp"
#include "frmsol/schedule.hpp"
#include "frmsol/sweep.hpp"

namespace frmsol {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IsolationSettings {
  std::vector<int> cells;
  double horizon = 200.0;
  int observation_cell = 0;
};

struct Config {
  double e_number = 1.0;
  Schedule schedule;
  Grid grid = make_grid(64, 512, 8.0, 8.0 * pi);
  Endcap endcap = default_endcap(grid);
  SolverConfig solver;
  StabilityCriteria criteria;
  VaRunSettings va;
  IsolationSettings isolation;
  std::optional<SweepSpec> sweep;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& raw, const std::string& where) {
  std::string s = trim(raw);
  double factor = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    factor = pi;
    s = trim(s.substr(0, s.size() - 2));
    if (s.empty()) return pi;
    if (s.back() == '*') s = trim(s.substr(0, s.size() - 1));
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where + ": expected a real number, got '" + raw + "'");
  }
  return v * factor;
}

inline long parse_int(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(where + ": expected an integer, got '" + raw + "'");
  }
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// "g1f=4*g0f_abs" or "g1f=g0f_abs"
inline DerivedLink parse_link(const std::string& raw, const std::string& where) {
  const auto eq = raw.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": link '" + raw + "' must look like target=factor*source");
  DerivedLink l;
  l.target = trim(raw.substr(0, eq));
  const std::string rhs = trim(raw.substr(eq + 1));
  const auto star = rhs.find('*');
  if (star == std::string::npos) {
    l.source = rhs;
  } else {
    l.factor = parse_real(rhs.substr(0, star), where);
    l.source = trim(rhs.substr(star + 1));
  }
  return l;
}

/// Typed reader over one ptree section that remembers which keys were used.
class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }
  void real(const std::string& key, double& out) {
    if (auto v = raw(key)) out = parse_real(*v, where(key));
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (auto v = raw(key)) out = static_cast<Int>(parse_int(*v, where(key)));
  }
  void reals(const std::string& key, std::vector<double>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split(*v, ',')) out.push_back(parse_real(item, where(key)));
    }
  }
  void integers(const std::string& key, std::vector<int>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split(*v, ',')) out.push_back(static_cast<int>(parse_int(item, where(key))));
    }
  }
  std::string where(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }
  /// Throws on any key present in the section but never read.
  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& kv : *tree_) {
      if (!name_.empty() || kv.second.empty()) {
        if (!used_.count(kv.first)) throw ConfigError("unknown key '" + where(kv.first) + "'");
      }
    }
  }

 private:
  const boost::property_tree::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

template <class Fn>
void checked(const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace detail

/// Parses INI text (already loaded) plus `section.key=value` overrides.
inline Config parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {},
                                const std::string& origin = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + ov + "' must look like section.key=value");
    const std::string lhs = detail::trim(ov.substr(0, eq));
    const std::string value = detail::trim(ov.substr(eq + 1));
    const auto dot = lhs.find('.');
    if (dot == std::string::npos) {
      tree.put(pt::ptree::path_type(lhs, '\0'), value);
    } else {
      const std::string section = lhs.substr(0, dot);
      const std::string key = lhs.substr(dot + 1);
      auto child = tree.get_child_optional(pt::ptree::path_type(section, '\0'));
      if (!child) tree.add_child(pt::ptree::path_type(section, '\0'), pt::ptree());
      tree.get_child(pt::ptree::path_type(section, '\0')).put(pt::ptree::path_type(key, '\0'), value);
    }
  }

  static const std::set<std::string> known_sections = {"schedule", "grid",   "endcap",   "solver",
                                                       "criteria", "va",     "isolation", "sweep"};
  for (const auto& kv : tree) {
    if (!kv.second.empty() && !known_sections.count(kv.first))
      throw ConfigError("unknown section '" + kv.first + "'");
  }
  auto section = [&](const std::string& name) {
    return detail::Section(tree.get_child_optional(pt::ptree::path_type(name, '\0')).get_ptr(), name);
  };

  Config c;
  detail::Section root(&tree, "");
  root.real("e_number", c.e_number);
  root.reject_unknown();
  if (!(c.e_number > 0.0)) throw ConfigError("e_number must be positive");

  auto s = section("schedule");
  s.real("g_init", c.schedule.g_init);
  s.real("g0f_abs", c.schedule.g0f_abs);
  s.real("g1f", c.schedule.g1f);
  s.real("omega_frm", c.schedule.omega_frm);
  s.real("eps_f", c.schedule.eps_f);
  s.real("omega_perp0", c.schedule.omega_perp0);
  s.real("t1", c.schedule.t1);
  s.real("t2", c.schedule.t2);
  s.real("t3", c.schedule.t3);
  s.real("t4", c.schedule.t4);
  s.reject_unknown();
  detail::checked("schedule", [&] { validate(c.schedule); });

  auto g = section("grid");
  int n_rho = c.grid.n_rho, n_z = c.grid.n_z;
  double rho_max = c.grid.rho_max, z_max = c.grid.z_max;
  g.integer("n_rho", n_rho);
  g.integer("n_z", n_z);
  g.real("rho_max", rho_max);
  g.real("z_max", z_max);
  g.reject_unknown();
  detail::checked("grid", [&] { c.grid = make_grid(n_rho, n_z, rho_max, z_max); });

  auto e = section("endcap");
  c.endcap = default_endcap(c.grid);
  e.real("u_cap", c.endcap.u_cap);
  e.real("z_cap", c.endcap.z_cap);
  e.reject_unknown();
  if (c.endcap.u_cap < 0.0 || !(c.endcap.z_cap > 0.0) || c.endcap.z_cap > c.grid.z_max)
    throw ConfigError("endcap: need u_cap >= 0 and 0 < z_cap <= z_max");

  auto so = section("solver");
  so.real("dt", c.solver.dt);
  so.real("t_end", c.solver.t_end);
  so.reals("snapshot_times", c.solver.snapshot_times);
  so.real("imag_time_tol", c.solver.imag_time_tol);
  so.real("imag_dt", c.solver.imag_dt);
  so.integer("max_imag_iters", c.solver.max_imag_iters);
  so.integer("sample_stride", c.solver.sample_stride);
  if (auto b = so.raw("boundary"); b && detail::trim(*b) != "dirichlet")
    throw ConfigError("solver.boundary: only 'dirichlet' is supported, got '" + *b + "'");
  so.reject_unknown();
  detail::checked("solver", [&] { validate(c.solver, &c.schedule); });

  auto cr = section("criteria");
  cr.real("window_fraction", c.criteria.window_fraction);
  cr.real("max_breathing_ratio", c.criteria.max_breathing_ratio);
  cr.real("min_cell_retention", c.criteria.min_cell_retention);
  cr.real("max_trend", c.criteria.max_trend);
  cr.real("collapse_factor", c.criteria.collapse_factor);
  cr.integer("min_samples", c.criteria.min_samples);
  cr.reject_unknown();
  detail::checked("criteria", [&] { validate(c.criteria); });

  auto va = section("va");
  va.real("t_end", c.va.t_end);
  va.real("dt", c.va.dt);
  va.real("window_fraction", c.va.window_fraction);
  if (auto st = va.raw("start")) {
    const std::string v = detail::trim(*st);
    if (v == "predicted") c.va.start = VaStart::Predicted;
    else if (v == "protocol") c.va.start = VaStart::Protocol;
    else throw ConfigError("va.start: expected 'predicted' or 'protocol', got '" + v + "'");
  }
  va.reject_unknown();
  if (!(c.va.t_end > 0.0) || !(c.va.dt > 0.0)) throw ConfigError("va: t_end and dt must be positive");
  if (!(c.va.window_fraction > 0.0 && c.va.window_fraction < 1.0))
    throw ConfigError("va.window_fraction must lie in (0, 1)");

  auto iso = section("isolation");
  iso.integers("cells", c.isolation.cells);
  iso.real("horizon", c.isolation.horizon);
  iso.integer("observation_cell", c.isolation.observation_cell);
  iso.reject_unknown();

  if (tree.get_child_optional(pt::ptree::path_type("sweep", '\0'))) {
    auto sw = section("sweep");
    SweepSpec spec;
    spec.base_schedule = c.schedule;
    spec.base_solver = c.solver;
    spec.e_number = c.e_number;
    spec.criteria = c.criteria;
    spec.va = c.va;
    spec.base_solver.t_end = 400.0;
    for (auto* axis : {&spec.x, &spec.y}) {
      const std::string p = axis == &spec.x ? "x_" : "y_";
      auto name = sw.raw(p + "name");
      if (!name) throw ConfigError("sweep." + p + "name is required");
      axis->name = detail::trim(*name);
      sw.real(p + "min", axis->min);
      sw.real(p + "max", axis->max);
      sw.integer(p + "count", axis->count);
    }
    if (auto r = sw.raw("runner")) {
      const std::string v = detail::trim(*r);
      if (v == "va") spec.runner = Runner::VA;
      else if (v == "gpe") spec.runner = Runner::GPE;
      else throw ConfigError("sweep.runner: expected 'va' or 'gpe', got '" + v + "'");
    }
    if (auto l = sw.raw("links")) {
      for (const auto& item : detail::split(*l, ';')) spec.derived_links.push_back(detail::parse_link(item, "sweep.links"));
    }
    int gn_rho = 48, gn_z = 384;
    sw.integer("gpe_n_rho", gn_rho);
    sw.integer("gpe_n_z", gn_z);
    sw.real("gpe_t_end", spec.base_solver.t_end);
    sw.reject_unknown();
    detail::checked("sweep", [&] {
      spec.grid = make_grid(gn_rho, gn_z, c.grid.rho_max, c.grid.z_max);
      spec.endcap = c.endcap;
      validate(spec);
    });
    c.sweep = spec;
  }
  return c;
}

inline Config parse_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides, path);
}

}  // namespace frmsol
