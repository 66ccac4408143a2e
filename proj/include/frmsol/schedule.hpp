#pragma once

// Time-dependent coefficients of the loading protocol: lattice ramp-up,
// nonlinearity ramp-down, Feshbach-resonance-management (FRM) switch-on and
// release of the radial trap.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace frmsol {

struct Schedule {
  double g_init = 10.0;      // nonlinear coefficient before t1 (repulsive)
  double g0f_abs = 22.5;     // magnitude of the final (negative) mean of g
  double g1f = 90.0;         // FRM amplitude
  double omega_frm = 40.0;   // FRM frequency
  double eps_f = 25.0;       // final lattice strength
  double omega_perp0 = 0.3;  // initial radial trap frequency
  double t1 = 30.0;
  double t2 = 100.0;
  double t3 = 120.0;
  double t4 = 130.0;

  double frm_period() const { return 2.0 * std::acos(-1.0) / omega_frm; }
};

inline void validate(const Schedule& s) {
  if (!(s.t1 > 0.0 && s.t1 < s.t2 && s.t2 <= s.t3 && s.t3 < s.t4)) {
    throw std::invalid_argument("schedule: breakpoints must satisfy 0 < t1 < t2 <= t3 < t4");
  }
  if (!(s.omega_frm > 0.0)) throw std::invalid_argument("schedule: omega_frm must be positive");
  if (!(s.g0f_abs > 0.0)) throw std::invalid_argument("schedule: g0f_abs must be positive");
  if (s.g1f < 0.0) throw std::invalid_argument("schedule: g1f must be non-negative");
  if (s.eps_f < 0.0) throw std::invalid_argument("schedule: eps_f must be non-negative");
  if (s.omega_perp0 < 0.0) throw std::invalid_argument("schedule: omega_perp0 must be non-negative");
}

inline double epsilon_at(double t, const Schedule& s) {
  return s.eps_f * std::clamp(t / s.t2, 0.0, 1.0);
}

inline double omega_perp_at(double t, const Schedule& s) {
  if (t <= s.t3) return s.omega_perp0;
  if (t >= s.t4) return 0.0;
  return s.omega_perp0 * (s.t4 - t) / (s.t4 - s.t3);
}

/// Oscillating FRM part -|g0f| + g1f sin(Omega t), without any envelope.
inline double frm_at(double t, const Schedule& s) {
  return -s.g0f_abs + s.g1f * std::sin(s.omega_frm * t);
}

inline double g_at(double t, const Schedule& s) {
  if (t <= s.t1) return s.g_init;
  if (t <= s.t2) return s.g_init * (s.t2 - t) / (s.t2 - s.t1);
  if (t <= s.t3) return 0.0;
  if (t < s.t4) return (t - s.t3) / (s.t4 - s.t3) * frm_at(t, s);
  return frm_at(t, s);
}

/// Step-shaped axial end caps: u_cap for |z| >= z_cap, zero inside.
struct Endcap {
  double u_cap = 1.0e3;
  double z_cap = 0.0;

  static Endcap none() { return {0.0, 0.0}; }
  double operator()(double z) const { return std::abs(z) >= z_cap ? u_cap : 0.0; }
};

/// The three scalar multipliers that fully determine the Hamiltonian at time t.
struct Coefficients {
  double g = 0.0;
  double epsilon = 0.0;
  double omega_perp = 0.0;
};

inline Coefficients coefficients_at(double t, const Schedule& s) {
  return {g_at(t, s), epsilon_at(t, s), omega_perp_at(t, s)};
}

inline double lattice_profile(double z) { return 1.0 - std::cos(2.0 * z); }

inline double potential(double rho, double z, const Coefficients& c, const Endcap& cap) {
  return c.epsilon * lattice_profile(z) + 0.5 * c.omega_perp * c.omega_perp * rho * rho + cap(z);
}

inline double potential_at(double rho, double z, double t, const Schedule& s, const Endcap& cap) {
  return potential(rho, z, coefficients_at(t, s), cap);
}

}  // namespace frmsol
