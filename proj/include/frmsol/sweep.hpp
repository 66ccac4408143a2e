#pragma once

// Stability maps over a two-parameter plane, with either the reduced width
// equations or the full propagator deciding each point.

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "frmsol/analysis.hpp"
#include "frmsol/gpe.hpp"
#include "frmsol/schedule.hpp"
#include "frmsol/variational.hpp"

namespace frmsol {

struct SweepAxis {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  int count = 2;

  double value(int i) const {
    if (count == 1) return min;
    return min + (max - min) * i / (count - 1);
  }
};

/// target = factor * source, applied after the axis values are set.
struct DerivedLink {
  std::string target;
  std::string source;
  double factor = 1.0;
};

enum class Runner { VA, GPE };

/// How a reduced-model point is started.
enum class VaStart {
  Predicted,  // averaged breather width, narrow axial root, zero velocities
  Protocol,   // trap equilibrium at t3, then the loading protocol from t3 on
};

struct VaRunSettings {
  double t_end = 500.0;  // on the protocol clock; a point starts at t3 or t4
  double dt = 0.01;  // capped at T_frm / 40 per point
  double window_fraction = 0.25;
  VaStart start = VaStart::Protocol;
};

struct PointParams {
  Schedule schedule;
  SolverConfig solver;
  double e_number = 1.0;
};

inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names = {
      "g_init", "g0f_abs", "g1f", "omega_frm", "eps_f", "omega_perp0", "t1", "t2",
      "t3",     "t4",      "e_number", "dt", "t_end"};
  return names;
}

inline double& parameter_ref(PointParams& p, const std::string& name) {
  Schedule& s = p.schedule;
  if (name == "g_init") return s.g_init;
  if (name == "g0f_abs") return s.g0f_abs;
  if (name == "g1f") return s.g1f;
  if (name == "omega_frm") return s.omega_frm;
  if (name == "eps_f") return s.eps_f;
  if (name == "omega_perp0") return s.omega_perp0;
  if (name == "t1") return s.t1;
  if (name == "t2") return s.t2;
  if (name == "t3") return s.t3;
  if (name == "t4") return s.t4;
  if (name == "e_number") return p.e_number;
  if (name == "dt") return p.solver.dt;
  if (name == "t_end") return p.solver.t_end;
  throw std::invalid_argument("sweep: unknown parameter '" + name + "'");
}

struct SweepSpec {
  SweepAxis x;
  SweepAxis y;
  Runner runner = Runner::VA;
  Schedule base_schedule;
  SolverConfig base_solver;
  std::vector<DerivedLink> derived_links;
  double e_number = 1.0;
  Grid grid = make_grid(48, 384, 8.0, 8.0 * pi);
  Endcap endcap{1.0e3, 2.5 * pi};
  StabilityCriteria criteria;
  VaRunSettings va;
};

inline void validate(const SweepSpec& spec) {
  for (const auto* a : {&spec.x, &spec.y}) {
    if (a->count < 1) throw std::invalid_argument("sweep: axis '" + a->name + "' needs count >= 1");
    PointParams probe;
    parameter_ref(probe, a->name);
  }
  if (spec.x.name == spec.y.name) throw std::invalid_argument("sweep: both axes name '" + spec.x.name + "'");
  for (const auto& l : spec.derived_links) {
    PointParams probe;
    parameter_ref(probe, l.target);
    parameter_ref(probe, l.source);
    if (l.target == spec.x.name || l.target == spec.y.name)
      throw std::invalid_argument("sweep: link target '" + l.target + "' is also a sweep axis");
    for (const auto& other : spec.derived_links) {
      if (other.source == l.target)
        throw std::invalid_argument("sweep: link chain through '" + l.target + "' (links must not feed links)");
    }
  }
}

struct StabilityMap {
  SweepSpec spec;
  std::vector<Verdict> verdicts;  // x-major: index = ix * y.count + iy
  std::vector<double> runtimes;
  std::vector<std::string> diagnostics;

  Verdict at(int ix, int iy) const { return verdicts[static_cast<std::size_t>(ix * spec.y.count + iy)]; }
};

inline PointParams point_params(const SweepSpec& spec, int ix, int iy) {
  PointParams p{spec.base_schedule, spec.base_solver, spec.e_number};
  parameter_ref(p, spec.x.name) = spec.x.value(ix);
  parameter_ref(p, spec.y.name) = spec.y.value(iy);
  for (const auto& l : spec.derived_links) parameter_ref(p, l.target) = l.factor * parameter_ref(p, l.source);
  return p;
}

/// Reduced-model trajectory for one parameter point. Sample times are
/// measured from the start of the integration (t4 for Predicted, t3 for
/// Protocol).
inline VaTrajectory va_point_trajectory(const PointParams& p, const VaRunSettings& va) {
  const Schedule& s = p.schedule;
  const double dt = std::min(va.dt, s.frm_period() / 40.0);
  VaParams params{p.e_number, nullptr, s.omega_frm};
  VaState init;
  double t_start = s.t4;
  if (va.start == VaStart::Predicted) {
    init = va_scan_initial_state(s, p.e_number);
    params.coefficients = frm_coefficients(s);
  } else {
    // Radial trap equilibrium at g = 0, axial width at the lattice root.
    const auto roots = solve_v0(s.eps_f);
    init.w = 1.0 / std::sqrt(std::max(s.omega_perp0, 1e-3));
    init.v = roots.empty() ? 1.0 : roots.front();
    t_start = s.t3;
    params.coefficients = [s, t_start](double t) { return coefficients_at(t + t_start, s); };
  }
  if (!(va.t_end > t_start))
    throw std::invalid_argument("va: t_end " + format_real(va.t_end) + " must exceed the start time " +
                                format_real(t_start));
  return va_integrate(init, params, va.t_end - t_start, dt, 4);
}

inline Verdict va_point_verdict(const PointParams& p, const VaRunSettings& va) {
  return va_classify(va_point_trajectory(p, va), va.window_fraction);
}

/// Ground states shared between points that only differ in post-loading
/// parameters.
class InitialStateCache {
 public:
  Field get(const Grid& g, const Schedule& s, double e_number, const SolverConfig& cfg, const Endcap& cap) {
    const std::string key = format_real(s.g_init) + '|' + format_real(s.omega_perp0) + '|' +
                            format_real(e_number) + '|' + format_real(cfg.imag_dt) + '|' +
                            format_real(cfg.imag_time_tol);
    std::shared_future<Field> fut;
    bool compute = false;
    std::promise<Field> promise;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it == cache_.end()) {
        fut = promise.get_future().share();
        cache_.emplace(key, fut);
        compute = true;
      } else {
        fut = it->second;
      }
    }
    if (compute) {
      try {
        promise.set_value(prepare_initial_state(g, s, e_number, cfg, cap));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_future<Field>> cache_;
};

inline RunRecord gpe_point_record(const SweepSpec& spec, const PointParams& p, InitialStateCache& cache) {
  validate(p.schedule);
  SolverConfig cfg = p.solver;
  cfg.snapshot_times.clear();
  cfg.snapshot_dir.clear();
  validate(cfg, &p.schedule);
  Field init = cache.get(spec.grid, p.schedule, p.e_number, cfg, spec.endcap);
  return evolve(std::move(init), p.schedule, cfg, spec.endcap, spec.criteria);
}

/// Evaluates every point of the plane; `jobs` workers consume points from a
/// shared counter and write into pre-sized slots, so the result does not
/// depend on scheduling.
inline StabilityMap run_sweep(const SweepSpec& spec, int jobs = 1) {
  validate(spec);
  StabilityMap map;
  map.spec = spec;
  const int n = spec.x.count * spec.y.count;
  map.verdicts.assign(n, Verdict::Failed);
  map.runtimes.assign(n, 0.0);
  map.diagnostics.assign(n, "");
  InitialStateCache cache;
  std::atomic<int> next{0};

  auto worker = [&]() {
    for (int i = next++; i < n; i = next++) {
      const int ix = i / spec.y.count;
      const int iy = i % spec.y.count;
      const auto start = std::chrono::steady_clock::now();
      try {
        const PointParams p = point_params(spec, ix, iy);
        validate(p.schedule);
        if (spec.runner == Runner::VA) {
          map.verdicts[i] = va_point_verdict(p, spec.va);
        } else {
          const RunRecord rec = gpe_point_record(spec, p, cache);
          map.verdicts[i] = rec.verdict;
          map.diagnostics[i] = assess_run(rec, spec.criteria).diagnostic;
        }
      } catch (const std::exception& e) {
        map.verdicts[i] = Verdict::Failed;
        map.diagnostics[i] = e.what();
      }
      map.runtimes[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };

  const int n_workers = std::max(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return map;
}

/// One row per point, x-major, header `<x name>,<y name>,verdict,runtime_s`.
inline void write_map_csv(const StabilityMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open stability map for writing: " + path);
  const auto& spec = map.spec;
  out << spec.x.name << ',' << spec.y.name << ",verdict,runtime_s\n";
  for (int ix = 0; ix < spec.x.count; ++ix) {
    for (int iy = 0; iy < spec.y.count; ++iy) {
      const auto i = static_cast<std::size_t>(ix * spec.y.count + iy);
      out << format_real(spec.x.value(ix)) << ',' << format_real(spec.y.value(iy)) << ','
          << to_string(map.verdicts[i]) << ',' << format_real(map.runtimes[i]) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace frmsol
