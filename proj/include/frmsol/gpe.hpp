#pragma once

// Axisymmetric split-step propagation of
//
//   i psi_t = [ -(1/2) laplacian + V(rho, z, t) + g(t) |psi|^2 ] psi
//
// Strang splitting: half a local phase step, a Crank-Nicolson step of the
// Laplacian along rho and then along z (the two directional operators commute
// on a tensor grid), and the second local half step. The same machinery runs
// in imaginary time for ground-state preparation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frmsol/analysis.hpp"
#include "frmsol/core.hpp"
#include "frmsol/schedule.hpp"

namespace frmsol {

enum class AxialBoundary { Dirichlet };

struct SolverConfig {
  double dt = 2e-3;
  double t_end = 500.0;
  std::vector<double> snapshot_times;
  AxialBoundary boundary = AxialBoundary::Dirichlet;
  double imag_time_tol = 1e-10;
  double imag_dt = 0.05;
  long max_imag_iters = 100000;
  int sample_stride = 25;
  std::string snapshot_dir;  // empty: keep snapshots in memory only
};

inline void validate(const SolverConfig& c, const Schedule* s = nullptr) {
  if (!(c.dt > 0.0)) throw std::invalid_argument("solver: dt must be positive");
  if (!(c.t_end > 0.0)) throw std::invalid_argument("solver: t_end must be positive");
  if (!(c.imag_dt > 0.0)) throw std::invalid_argument("solver: imag_dt must be positive");
  if (!(c.imag_time_tol > 0.0)) throw std::invalid_argument("solver: imag_time_tol must be positive");
  if (c.sample_stride < 1) throw std::invalid_argument("solver: sample_stride must be >= 1");
  if (!std::is_sorted(c.snapshot_times.begin(), c.snapshot_times.end()))
    throw std::invalid_argument("solver: snapshot_times must be sorted");
  for (double t : c.snapshot_times) {
    if (t < 0.0 || t > c.t_end) throw std::invalid_argument("solver: snapshot time outside [0, t_end]");
  }
  if (s && c.dt > s->frm_period() / 20.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("solver: dt = " + format_real(c.dt) +
                                " does not resolve the FRM period (need <= T/20)");
  }
}

/// Default end caps: a wall one half lattice period inside the domain edge.
inline Endcap default_endcap(const Grid& g) { return Endcap{1.0e3, g.z_max - 0.5 * pi}; }

namespace detail {

/// Precomputed Thomas factorisation of (I + alpha L) for a fixed tridiagonal L.
struct TridiagonalFactor {
  std::vector<cplx> lower;      // alpha * L_{i,i-1}
  std::vector<cplx> c_prime;    // modified super-diagonal
  std::vector<cplx> inv_denom;
  // explicit half: (I - alpha L)
  std::vector<cplx> ex_lower, ex_diag, ex_upper;

  TridiagonalFactor(const std::vector<double>& lo, const std::vector<double>& di,
                    const std::vector<double>& up, cplx alpha) {
    const std::size_t n = di.size();
    lower.resize(n);
    c_prime.resize(n);
    inv_denom.resize(n);
    ex_lower.resize(n);
    ex_diag.resize(n);
    ex_upper.resize(n);
    cplx prev_c{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const cplx a = alpha * lo[i];
      const cplx b = 1.0 + alpha * di[i];
      const cplx c = alpha * up[i];
      const cplx denom = b - a * prev_c;
      lower[i] = a;
      inv_denom[i] = 1.0 / denom;
      c_prime[i] = c * inv_denom[i];
      prev_c = c_prime[i];
      ex_lower[i] = -a;
      ex_diag[i] = 1.0 - alpha * di[i];
      ex_upper[i] = -c;
    }
  }
};

}  // namespace detail

enum class TimeMode { Real, Imaginary };

/// Propagator for a fixed grid, step size and end caps. For TimeMode::Imaginary
/// `dt` is the imaginary-time step and the field is not renormalised here.
class Propagator {
 public:
  Propagator(const Grid& g, double dt, const Endcap& cap, TimeMode mode = TimeMode::Real)
      : grid_(g),
        dt_(dt),
        mode_(mode),
        rho_factor_(rho_operator(g, alpha(dt, mode))),
        z_factor_(z_operator(g, alpha(dt, mode))),
        lattice_(static_cast<std::size_t>(g.n_z)),
        cap_(static_cast<std::size_t>(g.n_z)),
        rho2_(static_cast<std::size_t>(g.n_rho)),
        scratch_(g.size()) {
    for (int k = 0; k < g.n_z; ++k) {
      lattice_[k] = lattice_profile(g.z(k));
      cap_[k] = cap(g.z(k));
    }
    for (int j = 0; j < g.n_rho; ++j) rho2_[j] = g.rho(j) * g.rho(j);
  }

  const Grid& grid() const { return grid_; }
  double dt() const { return dt_; }

  /// One full Strang step with coefficients held at `c`.
  void step(Field& f, const Coefficients& c) {
    local(f, c, 0.5 * dt_);
    linear(f);
    local(f, c, 0.5 * dt_);
    f.time += mode_ == TimeMode::Real ? dt_ : 0.0;
  }

  /// One step from t to t + dt with schedule coefficients at the midpoint.
  void step(Field& f, double t, const Schedule& s) {
    step(f, coefficients_at(t + 0.5 * dt_, s));
    if (mode_ == TimeMode::Real) f.time = t + dt_;
  }

  /// Real-time steps from t to t + n dt. The trailing local half step of each
  /// step and the leading one of the next are merged into one phase rotation
  /// (both leave |psi| unchanged, so they commute).
  void advance(Field& f, double t, long n, const Schedule& s) {
    if (n <= 0) return;
    auto coeff = [&](long i) { return coefficients_at(t + (i + 0.5) * dt_, s); };
    Coefficients cur = coeff(0);
    local(f, cur, 0.5 * dt_);
    for (long i = 0; i < n; ++i) {
      linear(f);
      if (i + 1 < n) {
        const Coefficients nxt = coeff(i + 1);
        const Coefficients sum{cur.g + nxt.g, cur.epsilon + nxt.epsilon,
                               std::sqrt(cur.omega_perp * cur.omega_perp + nxt.omega_perp * nxt.omega_perp)};
        local(f, sum, 0.5 * dt_, 2.0);
        cur = nxt;
      } else {
        local(f, cur, 0.5 * dt_);
      }
    }
    f.time = t + n * dt_;
  }

  /// exp(-i h (V + g |psi|^2)) in real time, exp(-h (...)) in imaginary time;
  /// the end-cap term is weighted by `cap_weight`.
  void local(Field& f, const Coefficients& c, double h, double cap_weight = 1.0) const {
    const double half_w2 = 0.5 * c.omega_perp * c.omega_perp;
    for (int j = 0; j < grid_.n_rho; ++j) {
      const double radial = half_w2 * rho2_[j];
      cplx* p = &f.values[grid_.index(j, 0)];
      for (int k = 0; k < grid_.n_z; ++k) {
        const double v =
            c.epsilon * lattice_[k] + radial + cap_weight * cap_[k] + c.g * std::norm(p[k]);
        if (mode_ == TimeMode::Real) {
          const double phase = -h * v;
          p[k] *= cplx(std::cos(phase), std::sin(phase));
        } else {
          p[k] *= std::exp(-h * v);
        }
      }
    }
  }

  /// Crank-Nicolson along rho, then along z.
  void linear(Field& f) {
    sweep_rho(f);
    sweep_z(f);
  }

  /// <psi| H |psi> for the coefficients `c`, using the same discrete Laplacian.
  double energy(const Field& f, const Coefficients& c) const {
    const Grid& g = grid_;
    const auto rho_op = radial_stencil(g);
    const auto z_op = axial_stencil(g);
    const double half_w2 = 0.5 * c.omega_perp * c.omega_perp;
    double total = 0.0;
    for (int j = 0; j < g.n_rho; ++j) {
      const double r = g.rho(j);
      double row = 0.0;
      for (int k = 0; k < g.n_z; ++k) {
        const cplx psi = f(j, k);
        cplx lap = rho_op.di[j] * psi + z_op.di[k] * psi;
        if (j > 0) lap += rho_op.lo[j] * f(j - 1, k);
        if (j + 1 < g.n_rho) lap += rho_op.up[j] * f(j + 1, k);
        if (k > 0) lap += z_op.lo[k] * f(j, k - 1);
        if (k + 1 < g.n_z) lap += z_op.up[k] * f(j, k + 1);
        const double a2 = std::norm(psi);
        const double v = c.epsilon * lattice_[k] + half_w2 * rho2_[j] + cap_[k];
        row += (std::conj(psi) * lap).real() + v * a2 + 0.5 * c.g * a2 * a2;
      }
      total += row * r;
    }
    return 2.0 * pi * total * g.d_rho * g.d_z;
  }

  struct Stencil {
    std::vector<double> lo, di, up;
  };

  /// -(1/2)(d_rr + rho^{-1} d_r) in flux form; regular at the axis, psi = 0 at rho_max.
  static Stencil radial_stencil(const Grid& g) {
    Stencil s;
    const int n = g.n_rho;
    s.lo.assign(n, 0.0);
    s.di.assign(n, 0.0);
    s.up.assign(n, 0.0);
    const double h2 = g.d_rho * g.d_rho;
    for (int j = 0; j < n; ++j) {
      const double r = g.rho(j);
      const double r_minus = j * g.d_rho;
      const double r_plus = (j + 1) * g.d_rho;
      s.lo[j] = -0.5 * r_minus / (r * h2);
      s.up[j] = -0.5 * r_plus / (r * h2);
      s.di[j] = -(s.lo[j] + s.up[j]);
    }
    // antisymmetric ghost node puts the zero on the outer face
    s.di[n - 1] -= s.up[n - 1];
    s.up[n - 1] = 0.0;
    return s;
  }

  /// -(1/2) d_zz with psi = 0 on the faces z = +-z_max.
  static Stencil axial_stencil(const Grid& g) {
    Stencil s;
    const int n = g.n_z;
    const double c = 0.5 / (g.d_z * g.d_z);
    s.lo.assign(n, -c);
    s.up.assign(n, -c);
    s.di.assign(n, 2.0 * c);
    s.lo[0] = 0.0;
    s.up[n - 1] = 0.0;
    s.di[0] += c;
    s.di[n - 1] += c;
    return s;
  }

 private:
  static cplx alpha(double dt, TimeMode mode) {
    return mode == TimeMode::Real ? cplx(0.0, 0.5 * dt) : cplx(0.5 * dt, 0.0);
  }
  static detail::TridiagonalFactor rho_operator(const Grid& g, cplx a) {
    const auto s = radial_stencil(g);
    return {s.lo, s.di, s.up, a};
  }
  static detail::TridiagonalFactor z_operator(const Grid& g, cplx a) {
    const auto s = axial_stencil(g);
    return {s.lo, s.di, s.up, a};
  }

  // Systems along rho are solved for all z columns at once (rows are contiguous in z).
  void sweep_rho(Field& f) {
    const int nr = grid_.n_rho;
    const std::size_t nz = static_cast<std::size_t>(grid_.n_z);
    const auto& F = rho_factor_;
    cplx* psi = f.values.data();
    cplx* rhs = scratch_.data();
    for (int j = 0; j < nr; ++j) {
      const cplx* cur = psi + j * nz;
      cplx* out = rhs + j * nz;
      const cplx d = F.ex_diag[j];
      const cplx inv = F.inv_denom[j];
      if (j == 0) {
        const cplx u = F.ex_upper[j];
        const cplx* above = cur + nz;
        for (std::size_t k = 0; k < nz; ++k) out[k] = (d * cur[k] + u * above[k]) * inv;
        continue;
      }
      const cplx l = F.ex_lower[j];
      const cplx a = F.lower[j];
      const cplx* below = cur - nz;
      const cplx* prev = out - nz;
      if (j + 1 == nr) {
        for (std::size_t k = 0; k < nz; ++k) out[k] = (d * cur[k] + l * below[k] - a * prev[k]) * inv;
        continue;
      }
      const cplx u = F.ex_upper[j];
      const cplx* above = cur + nz;
      for (std::size_t k = 0; k < nz; ++k) {
        out[k] = (d * cur[k] + l * below[k] + u * above[k] - a * prev[k]) * inv;
      }
    }
    std::copy(rhs + (nr - 1) * nz, rhs + nr * nz, psi + (nr - 1) * nz);
    for (int j = nr - 2; j >= 0; --j) {
      cplx* cur = psi + j * nz;
      const cplx* next = cur + nz;
      const cplx* r = rhs + j * nz;
      const cplx cp = F.c_prime[j];
      for (std::size_t k = 0; k < nz; ++k) cur[k] = r[k] - cp * next[k];
    }
  }

  void sweep_z(Field& f) {
    const int nr = grid_.n_rho;
    const int nz = grid_.n_z;
    const auto& F = z_factor_;
    cplx* r = scratch_.data();
    for (int j = 0; j < nr; ++j) {
      cplx* psi = f.values.data() + static_cast<std::size_t>(j) * nz;
      r[0] = (F.ex_diag[0] * psi[0] + F.ex_upper[0] * psi[1]) * F.inv_denom[0];
      for (int k = 1; k + 1 < nz; ++k) {
        r[k] = (F.ex_lower[k] * psi[k - 1] + F.ex_diag[k] * psi[k] + F.ex_upper[k] * psi[k + 1] -
                F.lower[k] * r[k - 1]) *
               F.inv_denom[k];
      }
      const int e = nz - 1;
      r[e] = (F.ex_lower[e] * psi[e - 1] + F.ex_diag[e] * psi[e] - F.lower[e] * r[e - 1]) * F.inv_denom[e];
      psi[e] = r[e];
      for (int k = nz - 2; k >= 0; --k) psi[k] = r[k] - F.c_prime[k] * psi[k + 1];
    }
  }

  Grid grid_;
  double dt_;
  TimeMode mode_;
  detail::TridiagonalFactor rho_factor_;
  detail::TridiagonalFactor z_factor_;
  std::vector<double> lattice_;
  std::vector<double> cap_;
  std::vector<double> rho2_;
  std::vector<cplx> scratch_;
};

/// Single step from t to t + dt (builds a propagator; use Propagator in loops).
inline void step(Field& f, double t, double dt, const Schedule& s, const Endcap& cap) {
  Propagator prop(f.grid, dt, cap);
  prop.step(f, t, s);
  if (!is_finite(f)) throw std::runtime_error("step: non-finite field at t = " + format_real(t + dt));
}

struct GroundState {
  Field field;
  double energy = 0.0;
  long iterations = 0;
};

/// Imaginary-time relaxation under fixed coefficients, renormalising to
/// `target_norm` after every step. Converged when, for relax_quiet_steps
/// consecutive steps, both the relative energy change and the geometric
/// estimate of the change still to come lie below `tol`. The slowest mode of a
/// long box decays slowly, and with a finite tau the energy can pass through a
/// shallow extremum, so a single small change says little.
inline constexpr int relax_quiet_steps = 20;

inline GroundState relax(Field f, const Coefficients& c, const Endcap& cap, double target_norm,
                         double tau, double tol, long max_iters) {
  if (!(target_norm > 0.0)) throw std::invalid_argument("relax: target norm must be positive");
  Propagator prop(f.grid, tau, cap, TimeMode::Imaginary);
  auto renormalise = [&](Field& x) {
    const double n = norm(x);
    if (!(n > 0.0) || !std::isfinite(n)) throw std::runtime_error("relax: field vanished");
    scale(x, std::sqrt(target_norm / n));
  };
  renormalise(f);
  double e_prev = prop.energy(f, c);
  double d_prev = 0.0;
  int quiet = 0;
  for (long it = 1; it <= max_iters; ++it) {
    prop.step(f, c);
    renormalise(f);
    const double e = prop.energy(f, c);
    const double d = e - e_prev;
    const double bound = tol * std::abs(e);
    // remaining change if successive changes shrink by a fixed ratio
    const double ratio = d_prev != 0.0 ? d / d_prev : 1.0;
    const double remaining = ratio > 0.0 && ratio < 1.0 ? std::abs(d) * ratio / (1.0 - ratio) : 0.0;
    const bool small = std::abs(d) <= bound && (remaining <= bound || std::abs(d) <= 1e-3 * bound);
    quiet = small ? quiet + 1 : 0;
    if (quiet >= relax_quiet_steps) return {std::move(f), e, it};
    e_prev = e;
    d_prev = d;
  }
  throw std::runtime_error("relax: imaginary-time iteration did not converge in " +
                           std::to_string(max_iters) + " steps");
}

/// Ground state of the t = 0 Hamiltonian (no lattice, radial trap, end caps,
/// repulsive g_init) holding E = e_number_target atoms (norm = E pi^{3/2}).
inline Field prepare_initial_state(const Grid& g, const Schedule& s, double e_number_target,
                                   const SolverConfig& cfg, const Endcap& cap) {
  if (!(e_number_target > 0.0)) throw std::invalid_argument("prepare_initial_state: E must be positive");
  const double w0 = std::max(s.omega_perp0, 1e-3);
  const double half_length = cap.u_cap > 0.0 ? cap.z_cap : g.z_max;
  Field guess = sample_field(g, [&](double r, double z) {
    const double axial = std::abs(z) < half_length ? std::cos(0.5 * pi * z / half_length) : 0.0;
    return std::exp(-0.5 * w0 * r * r) * axial;
  });
  auto gs = relax(std::move(guess), coefficients_at(0.0, s), cap,
                  e_number_target * std::pow(pi, 1.5), cfg.imag_dt, cfg.imag_time_tol,
                  cfg.max_imag_iters);
  gs.field.time = 0.0;
  return std::move(gs.field);
}

inline std::string snapshot_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snapshot_t%010.3f.bin", t);
  return buf;
}

/// Runs the protocol from field.time to cfg.t_end. Observables are sampled
/// every cfg.sample_stride steps; snapshots are kept in memory and, if
/// cfg.snapshot_dir is set, written there.
inline RunRecord evolve(Field field, const Schedule& s, const SolverConfig& cfg,
                        const Endcap& cap, const StabilityCriteria& criteria = {}) {
  validate(cfg);
  RunRecord rec;
  rec.t_settled = s.t4;
  const auto cells = lattice_cells(field.grid);
  Propagator prop(field.grid, cfg.dt, cap);

  const double t0 = field.time;
  const auto n_steps = static_cast<long>(std::llround((cfg.t_end - t0) / cfg.dt));
  std::size_t next_snap = 0;
  while (next_snap < cfg.snapshot_times.size() &&
         cfg.snapshot_times[next_snap] < t0 - 0.5 * cfg.dt)
    ++next_snap;

  auto take_snapshot = [&](const Field& f) {
    rec.snapshots.push_back(f);
    if (!cfg.snapshot_dir.empty()) {
      std::filesystem::create_directories(cfg.snapshot_dir);
      write_snapshot((std::filesystem::path(cfg.snapshot_dir) / snapshot_name(f.time)).string(), f);
    }
  };
  auto maybe_snapshot = [&](const Field& f) {
    while (next_snap < cfg.snapshot_times.size() &&
           std::abs(cfg.snapshot_times[next_snap] - f.time) <= 0.5 * cfg.dt) {
      take_snapshot(f);
      ++next_snap;
    }
  };

  double peak_settled = -1.0;
  double norm_settled = -1.0;
  auto record = [&](const Field& f) {
    rec.series.push_back({f.time, observables(f, cells)});
    const auto& o = rec.series.back().obs;
    if (f.time >= s.t4 - 1e-12) {
      if (peak_settled < 0.0) {
        peak_settled = o.peak_amplitude;
        norm_settled = o.norm;
      }
      rec.norm_drift = std::max(rec.norm_drift, std::abs(o.norm - norm_settled) / norm_settled);
      if (o.peak_amplitude > criteria.collapse_factor * peak_settled) rec.collapse_guard = true;
    }
  };

  record(field);
  maybe_snapshot(field);
  long done = 0;
  while (done < n_steps) {
    // advance to the next sample or snapshot, whichever comes first
    long chunk = std::min<long>(cfg.sample_stride - done % cfg.sample_stride, n_steps - done);
    if (next_snap < cfg.snapshot_times.size()) {
      const long snap_step = std::llround((cfg.snapshot_times[next_snap] - t0) / cfg.dt);
      if (snap_step > done) chunk = std::min(chunk, snap_step - done);
    }
    prop.advance(field, t0 + done * cfg.dt, chunk, s);
    done += chunk;
    if (done == n_steps || done % cfg.sample_stride == 0) {
      if (!is_finite(field)) {
        rec.aborted = true;
        rec.diagnostic = "non-finite field at t = " + format_real(field.time);
        break;
      }
      record(field);
      if (rec.collapse_guard) {
        rec.diagnostic = "peak exceeded collapse bound at t = " + format_real(field.time);
        break;
      }
    }
    maybe_snapshot(field);
  }
  rec.final_field = std::move(field);
  rec.verdict = classify_run(rec, criteria);
  return rec;
}

/// Observable series as CSV: t,peak,norm,E,rms_rho,rms_z,cell_-2..cell_2.
inline void write_series_csv(const std::string& path, const RunRecord& rec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open series file: " + path);
  out << "t,peak,norm,E,rms_rho,rms_z,cell_-2,cell_-1,cell_0,cell_1,cell_2\n";
  for (const auto& x : rec.series) {
    const auto& o = x.obs;
    out << format_real(x.t) << ',' << format_real(o.peak_amplitude) << ',' << format_real(o.norm)
        << ',' << format_real(o.e_number) << ',' << format_real(o.rms_rho) << ','
        << format_real(o.rms_z);
    for (int m = -2; m <= 2; ++m) out << ',' << format_real(o.cell_norm(m));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace frmsol
