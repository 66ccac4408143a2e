#pragma once

// Reduced dynamics of a Gaussian ansatz with radial width W and axial width V:
//
//   W'' = 1/W^3 - omega_perp^2 W + E g / (sqrt(8) W^3 V)
//   V'' = 1/V^3 - 4 eps V exp(-V^2) + E g / (sqrt(8) W^2 V^2)
//
// plus the static predictions that follow from averaging over the fast FRM
// oscillation: the axial width V0, the lattice threshold, the minimum mean
// attraction and the mean radial width of the breather.

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "frmsol/core.hpp"
#include "frmsol/schedule.hpp"
#include "frmsol/verdict.hpp"

namespace frmsol {

inline constexpr double va_w_min = 1e-4;
inline constexpr double va_w_escape = 1e3;

struct VaState {
  double w = 1.0;
  double v = 1.0;
  double w_dot = 0.0;
  double v_dot = 0.0;
};

using CoefficientFn = std::function<Coefficients(double)>;

struct VaParams {
  double e_number = 1.0;
  CoefficientFn coefficients;
  double frm_omega = 0.0;  // fastest modulation frequency, 0 if none
};

/// Coefficients following the full loading protocol.
inline CoefficientFn protocol_coefficients(const Schedule& s) {
  return [s](double t) { return coefficients_at(t, s); };
}

/// Coefficients of the settled regime after t4: full lattice, trap off, FRM on.
inline CoefficientFn frm_coefficients(const Schedule& s) {
  return [s](double t) { return Coefficients{frm_at(t, s), s.eps_f, 0.0}; };
}

inline CoefficientFn constant_coefficients(Coefficients c) {
  return [c](double) { return c; };
}

struct VaDerivative {
  double w_dot = 0.0;
  double v_dot = 0.0;
  double w_ddot = 0.0;
  double v_ddot = 0.0;
  bool collapse = false;  // a width is at or below va_w_min
};

inline VaDerivative va_rhs(const VaState& s, const Coefficients& c, double e_number) {
  VaDerivative d;
  d.w_dot = s.w_dot;
  d.v_dot = s.v_dot;
  if (s.w <= va_w_min || s.v <= va_w_min) {
    d.collapse = true;
    return d;
  }
  const double w3 = s.w * s.w * s.w;
  const double v3 = s.v * s.v * s.v;
  const double eg = e_number * c.g / std::numbers::sqrt2 / 2.0;  // E g / sqrt(8)
  d.w_ddot = 1.0 / w3 - c.omega_perp * c.omega_perp * s.w + eg / (w3 * s.v);
  d.v_ddot = 1.0 / v3 - 4.0 * c.epsilon * s.v * std::exp(-s.v * s.v) +
             eg / (s.w * s.w * s.v * s.v);
  return d;
}

inline VaDerivative va_rhs(const VaState& s, double t, const VaParams& p) {
  return va_rhs(s, p.coefficients(t), p.e_number);
}

enum class VaTermination { Completed, Collapse, Expand };

struct VaSample {
  double t;
  VaState state;
};

struct VaTrajectory {
  std::vector<VaSample> samples;
  VaTermination termination = VaTermination::Completed;
  double t_end = 0.0;  // requested end time
};

/// Fixed-step classical RK4. Samples are stored every `record_stride` steps
/// (and always at the final step).
inline VaTrajectory va_integrate(const VaState& init, const VaParams& p, double t_end, double dt,
                                 int record_stride = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("va_integrate: dt must be positive");
  if (!(p.e_number > 0.0)) throw std::invalid_argument("va_integrate: e_number must be positive");
  if (p.frm_omega > 0.0 && dt > 2.0 * pi / p.frm_omega / 20.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("va_integrate: dt does not resolve the FRM period (need <= T/20)");
  }
  if (init.w <= 0.0 || init.v <= 0.0) throw std::invalid_argument("va_integrate: widths must be positive");

  VaTrajectory traj;
  traj.t_end = t_end;
  const auto n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  traj.samples.reserve(static_cast<std::size_t>(n_steps / std::max(record_stride, 1) + 2));
  VaState y = init;
  traj.samples.push_back({0.0, y});

  auto axpy = [](const VaState& base, const VaDerivative& k, double h) {
    return VaState{base.w + h * k.w_dot, base.v + h * k.v_dot, base.w_dot + h * k.w_ddot,
                   base.v_dot + h * k.v_ddot};
  };

  for (long n = 0; n < n_steps; ++n) {
    const double t = n * dt;
    const double h = std::min(dt, t_end - t);
    const auto k1 = va_rhs(y, t, p);
    const auto k2 = va_rhs(axpy(y, k1, h / 2), t + h / 2, p);
    const auto k3 = va_rhs(axpy(y, k2, h / 2), t + h / 2, p);
    const auto k4 = va_rhs(axpy(y, k3, h), t + h, p);
    if (k1.collapse || k2.collapse || k3.collapse || k4.collapse) {
      traj.termination = VaTermination::Collapse;
      traj.samples.push_back({t, y});
      return traj;
    }
    y.w += h / 6 * (k1.w_dot + 2 * k2.w_dot + 2 * k3.w_dot + k4.w_dot);
    y.v += h / 6 * (k1.v_dot + 2 * k2.v_dot + 2 * k3.v_dot + k4.v_dot);
    y.w_dot += h / 6 * (k1.w_ddot + 2 * k2.w_ddot + 2 * k3.w_ddot + k4.w_ddot);
    y.v_dot += h / 6 * (k1.v_ddot + 2 * k2.v_ddot + 2 * k3.v_ddot + k4.v_ddot);

    if (!std::isfinite(y.w) || !std::isfinite(y.v) || !std::isfinite(y.w_dot) ||
        !std::isfinite(y.v_dot)) {
      throw std::runtime_error("va_integrate: non-finite state at t = " + format_real(t + h));
    }
    const bool last = n + 1 == n_steps;
    if (y.w < va_w_min || y.v < va_w_min) {
      traj.termination = VaTermination::Collapse;
    } else if (y.w > va_w_escape || y.v > va_w_escape) {
      traj.termination = VaTermination::Expand;
    }
    if (traj.termination != VaTermination::Completed || last ||
        (n + 1) % std::max(record_stride, 1) == 0) {
      traj.samples.push_back({t + h, y});
    }
    if (traj.termination != VaTermination::Completed) return traj;
  }
  return traj;
}

/// Roots of 4 eps V^4 exp(-V^2) = 1 on (0, inf), ascending. The left-hand side
/// rises on (0, sqrt 2) and falls afterwards, so each branch holds at most one.
inline std::vector<double> solve_v0(double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("solve_v0: epsilon must be non-negative");
  if (epsilon == 0.0) return {};
  // h(V) = log f(V); same sign structure as f - 1 and better conditioned.
  const double log4e = std::log(4.0 * epsilon);
  auto h = [&](double v) { return log4e + 4.0 * std::log(v) - v * v; };
  const double v_peak = std::numbers::sqrt2;
  const double h_peak = h(v_peak);
  if (std::abs(h_peak) <= 1e-12) return {v_peak};
  if (h_peak < 0.0) return {};

  auto bisect = [&](double lo, double hi) {
    // h(lo) and h(hi) have opposite signs
    const bool rising = h(lo) < 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      if ((h(mid) < 0.0) == rising) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  double lo = v_peak;
  while (h(lo) > 0.0) lo *= 0.5;
  double hi = v_peak;
  while (h(hi) > 0.0) hi *= 2.0;
  return {bisect(lo, v_peak), bisect(v_peak, hi)};
}

inline double epsilon_threshold() { return std::exp(2.0) / 16.0; }

/// Smallest |g0f| admitting a breather: sqrt(8) V0 / E with the narrow root V0.
inline double g0_min(double epsilon, double e_number) {
  if (!(e_number > 0.0)) throw std::invalid_argument("g0_min: e_number must be positive");
  const auto roots = solve_v0(epsilon);
  if (epsilon <= epsilon_threshold() || roots.empty()) {
    throw std::domain_error("g0_min: epsilon = " + format_real(epsilon) +
                            " is not above the lattice threshold");
  }
  return 2.0 * std::numbers::sqrt2 * roots.front() / e_number;
}

struct WBarPrediction {
  double w_bar = 0.0;
  double w1 = 0.0;
  double v0 = 0.0;
  bool valid = false;  // false when the formula degenerates (g1f = 0)
};

inline WBarPrediction w_bar_prediction(double epsilon, double e_number, double g0f_abs, double g1f,
                                       double omega_frm) {
  if (!(omega_frm > 0.0)) throw std::invalid_argument("w_bar_prediction: omega_frm must be positive");
  const auto roots = solve_v0(epsilon);
  if (epsilon <= epsilon_threshold() || roots.empty()) {
    throw std::domain_error("w_bar_prediction: epsilon is not above the lattice threshold");
  }
  const double v0 = roots.front();
  const double sqrt8 = 2.0 * std::numbers::sqrt2;
  const double excess = e_number * g0f_abs - sqrt8 * v0;
  if (!(excess > 0.0)) {
    throw std::domain_error("w_bar_prediction: |g0f| does not exceed the minimum " +
                            format_real(sqrt8 * v0 / e_number));
  }
  const double drive = e_number * g1f / omega_frm;
  const double w4 = 3.0 / (4.0 * std::numbers::sqrt2 * v0) * drive * drive / excess;
  WBarPrediction out;
  out.v0 = v0;
  out.w_bar = std::pow(w4, 0.25);
  out.valid = out.w_bar > 0.0 && std::isfinite(out.w_bar);
  if (out.valid) {
    out.w1 = -e_number * g1f /
             (sqrt8 * out.w_bar * out.w_bar * out.w_bar * v0 * omega_frm * omega_frm);
  }
  return out;
}

inline Verdict va_classify(const VaTrajectory& traj, double window_fraction = 0.25) {
  if (traj.termination == VaTermination::Collapse) return Verdict::Collapse;
  if (traj.termination == VaTermination::Expand) return Verdict::Expand;
  if (traj.samples.empty()) return Verdict::Indeterminate;
  const double t_last = traj.samples.back().t;
  const double t_from = t_last * (1.0 - window_fraction);
  const double lo = va_w_min * 10.0;
  const double hi = va_w_escape / 10.0;
  double w_min = INFINITY, w_max = 0.0;
  double w_first = 0.0;
  for (const auto& s : traj.samples) {
    if (s.t < t_from) continue;
    if (w_first == 0.0) w_first = s.state.w;
    if (s.state.w < lo || s.state.w > hi || s.state.v < lo || s.state.v > hi) {
      return s.state.w < lo || s.state.v < lo ? Verdict::Collapse : Verdict::Expand;
    }
    w_min = std::min(w_min, s.state.w);
    w_max = std::max(w_max, s.state.w);
  }
  if (w_max == 0.0) return Verdict::Indeterminate;
  if (w_max / w_min < 10.0) return Verdict::Stable;
  // Unbounded breathing: report the direction the width is heading.
  return traj.samples.back().state.w > w_first ? Verdict::Expand : Verdict::Collapse;
}

/// Initial state used for stability scans: the predicted breather if the
/// averaged theory applies, otherwise W = 1 with the narrow axial root.
inline VaState va_scan_initial_state(const Schedule& s, double e_number) {
  VaState init;
  const auto roots = solve_v0(s.eps_f);
  init.v = roots.empty() ? 1.0 : roots.front();
  init.w = 1.0;
  try {
    const auto pred = w_bar_prediction(s.eps_f, e_number, s.g0f_abs, s.g1f, s.omega_frm);
    if (pred.valid) init.w = pred.w_bar;
  } catch (const std::exception&) {
    // outside the averaged theory's domain: keep the fallback width
  }
  return init;
}

inline void write_trajectory_csv(const std::string& path, const VaTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trajectory file: " + path);
  out << "t,W,V,Wdot,Vdot\n";
  for (const auto& s : traj.samples) {
    out << format_real(s.t) << ',' << format_real(s.state.w) << ',' << format_real(s.state.v) << ','
        << format_real(s.state.w_dot) << ',' << format_real(s.state.v_dot) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace frmsol
