#pragma once

// Command-line front end: threshold | va | gpe | sweep | isolate.
//
// Exit status: 0 success, 1 validation failure, 2 runtime failure,
// 3 only Indeterminate verdicts while --strict is given.

#include <CLI11.hpp>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "frmsol/config.hpp"
#include "frmsol/gpe.hpp"
#include "frmsol/isolation.hpp"
#include "frmsol/sweep.hpp"
#include "frmsol/variational.hpp"

namespace frmsol {

namespace cli_detail {

struct Options {
  std::string config;
  std::string out = ".";
  std::vector<std::string> overrides;
  int jobs = 1;
  bool strict = false;
  double epsilon = 25.0;
  double e_number = 1.0;
  std::string snapshot;
};

inline void add_common(CLI::App* sub, Options& o, bool needs_config) {
  auto* c = sub->add_option("--config", o.config, "Configuration file (INI sections)");
  if (needs_config) c->required();
  sub->add_option("--out", o.out, "Output directory for machine-readable results");
  sub->add_option("--override", o.overrides, "Override a value, section.key=value (repeatable)");
  sub->add_flag("--strict", o.strict, "Exit 3 when every verdict is Indeterminate");
}

inline std::filesystem::path out_dir(const Options& o) {
  std::filesystem::path p(o.out);
  std::filesystem::create_directories(p);
  return p;
}

inline int strict_status(const Options& o, const std::vector<Verdict>& verdicts) {
  if (!o.strict || verdicts.empty()) return 0;
  for (Verdict v : verdicts) {
    if (v != Verdict::Indeterminate) return 0;
  }
  return 3;
}

inline int cmd_threshold(const Options& o, std::ostream& out) {
  out << std::setprecision(6);
  out << "epsilon_thr = " << epsilon_threshold() << '\n';
  const auto roots = solve_v0(o.epsilon);
  out << "epsilon = " << o.epsilon << ", E = " << o.e_number << '\n';
  if (roots.empty()) {
    out << "V0 roots: none (lattice below threshold)\n";
    return 0;
  }
  out << "V0 roots:";
  for (double r : roots) out << ' ' << std::fixed << std::setprecision(4) << r;
  out << '\n' << std::defaultfloat << std::setprecision(6);
  if (o.epsilon > epsilon_threshold()) {
    out << "g0_min = " << std::fixed << std::setprecision(4) << g0_min(o.epsilon, o.e_number) << '\n';
  }
  return 0;
}

inline int cmd_va(const Options& o, std::ostream& out) {
  const Config c = parse_config(o.config, o.overrides);
  const PointParams p{c.schedule, c.solver, c.e_number};
  const auto traj = va_point_trajectory(p, c.va);
  const Verdict v = va_classify(traj, c.va.window_fraction);
  const auto dir = out_dir(o);
  write_trajectory_csv((dir / "va_trajectory.csv").string(), traj);
  out << "va: " << traj.samples.size() << " samples to t = " << traj.samples.back().t << '\n';
  out << "verdict: " << to_string(v) << '\n';
  return strict_status(o, {v});
}

inline int cmd_gpe(const Options& o, std::ostream& out) {
  Config c = parse_config(o.config, o.overrides);
  const auto dir = out_dir(o);
  c.solver.snapshot_dir = (dir / "snapshots").string();
  Field init = prepare_initial_state(c.grid, c.schedule, c.e_number, c.solver, c.endcap);
  const RunRecord rec = evolve(std::move(init), c.schedule, c.solver, c.endcap, c.criteria);
  write_series_csv((dir / "observables.csv").string(), rec);
  write_snapshot((dir / "final.bin").string(), rec.final_field);
  const auto a = assess_run(rec, c.criteria);
  out << "gpe: " << rec.series.size() << " samples, " << rec.snapshots.size() << " snapshots, t_final = "
      << rec.final_field.time << '\n';
  out << "verdict: " << to_string(a.verdict) << " (peak ratio " << a.peak_ratio << ", trend " << a.trend
      << ", retention " << a.retention << ", norm drift " << rec.norm_drift << ")\n";
  if (!a.diagnostic.empty()) out << "note: " << a.diagnostic << '\n';
  return strict_status(o, {a.verdict});
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
  const Config c = parse_config(o.config, o.overrides);
  if (!c.sweep) throw ConfigError("sweep: configuration has no [sweep] section");
  const StabilityMap map = run_sweep(*c.sweep, o.jobs);
  const auto dir = out_dir(o);
  write_map_csv(map, (dir / "stability_map.csv").string());
  std::map<std::string, int> counts;
  for (Verdict v : map.verdicts) counts[std::string(to_string(v))]++;
  out << "sweep: " << map.verdicts.size() << " points (" << c.sweep->x.name << " x " << c.sweep->y.name << ")\n";
  for (const auto& [k, n] : counts) out << "  " << k << ": " << n << '\n';
  return strict_status(o, map.verdicts);
}

inline int cmd_isolate(const Options& o, std::ostream& out) {
  const Config c = parse_config(o.config, o.overrides);
  if (o.snapshot.empty()) throw ConfigError("isolate: --snapshot is required");
  const Field field = read_snapshot(o.snapshot);
  if (!(field.grid == c.grid)) throw ConfigError("isolate: snapshot grid differs from the configured grid");
  const auto report = cell_isolation_experiment(field, c.isolation.cells, c.schedule, c.solver, c.endcap,
                                                c.isolation.horizon, c.isolation.observation_cell, c.criteria);
  const auto dir = out_dir(o);
  write_isolation_csv((dir / "isolation.csv").string(), report);
  out << "isolate: observation cell " << report.observation_cell << ", max relative deviation "
      << report.max_rel_dev << '\n';
  out << "verdicts: reference " << to_string(report.verdict_ref) << ", perturbed "
      << to_string(report.verdict_perturbed) << '\n';
  return strict_status(o, {report.verdict_perturbed});
}

}  // namespace cli_detail

inline int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  Options o;
  CLI::App app{"Lattice + FRM soliton simulation suite", "frmsol"};
  app.require_subcommand(1);

  auto* thr = app.add_subcommand("threshold", "Lattice threshold, axial roots and minimum |g0f|");
  thr->add_option("--epsilon", o.epsilon, "Lattice strength")->capture_default_str();
  thr->add_option("--E", o.e_number, "Norm parameter E")->capture_default_str();

  auto* va = app.add_subcommand("va", "Integrate and classify one reduced-model trajectory");
  add_common(va, o, true);

  auto* gpe = app.add_subcommand("gpe", "Full-protocol propagation with snapshots");
  add_common(gpe, o, true);

  auto* sweep = app.add_subcommand("sweep", "Stability map over two parameters");
  add_common(sweep, o, true);
  sweep->add_option("--jobs", o.jobs, "Maximum number of worker threads")->check(CLI::PositiveNumber);

  auto* iso = app.add_subcommand("isolate", "Cell-isolation experiment on a saved snapshot");
  add_common(iso, o, true);
  iso->add_option("--snapshot", o.snapshot, "Snapshot file to continue from")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    // help() follows the selected subcommand
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*thr) return cmd_threshold(o, out);
    if (*va) return cmd_va(o, out);
    if (*gpe) return cmd_gpe(o, out);
    if (*sweep) return cmd_sweep(o, out);
    if (*iso) return cmd_isolate(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace frmsol
