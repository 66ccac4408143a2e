#pragma once

// Cylindrical (rho, z) grids, axisymmetric complex fields and the observables
// shared by the propagator and the analysis layer.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace frmsol {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// Cell-centred cylindrical grid. Radial nodes sit at (j + 1/2) d_rho, axial
/// nodes at -z_max + (k + 1/2) d_z, so the axial grid is symmetric about z = 0.
struct Grid {
  int n_rho = 0;
  int n_z = 0;
  double rho_max = 0.0;
  double z_max = 0.0;
  double d_rho = 0.0;
  double d_z = 0.0;

  double rho(int j) const { return (j + 0.5) * d_rho; }
  double z(int k) const { return -z_max + (k + 0.5) * d_z; }
  std::size_t size() const { return static_cast<std::size_t>(n_rho) * n_z; }
  std::size_t index(int j, int k) const {
    return static_cast<std::size_t>(j) * n_z + k;
  }
  /// Number of whole lattice periods contained in [0, z_max].
  int half_cells() const { return static_cast<int>(std::lround(z_max / pi)); }

  bool operator==(const Grid&) const = default;
};

inline Grid make_grid(int n_rho, int n_z, double rho_max, double z_max) {
  if (n_rho < 8) throw std::invalid_argument("grid: n_rho must be >= 8");
  if (n_z < 16) throw std::invalid_argument("grid: n_z must be >= 16");
  if (!(rho_max > 0.0)) throw std::invalid_argument("grid: rho_max must be positive");
  if (!(z_max > 0.0)) throw std::invalid_argument("grid: z_max must be positive");
  const double cells = z_max / pi;
  if (std::abs(cells - std::round(cells)) > 1e-12 * std::max(1.0, cells)) {
    throw std::invalid_argument("grid: z_max = " + std::to_string(z_max) +
                                " is not an integer multiple of pi");
  }
  Grid g;
  g.n_rho = n_rho;
  g.n_z = n_z;
  g.rho_max = rho_max;
  g.z_max = z_max;
  g.d_rho = rho_max / n_rho;
  g.d_z = 2.0 * z_max / n_z;
  return g;
}

/// Complex wave function sampled on a Grid, row-major with rho outermost.
struct Field {
  Grid grid;
  std::vector<cplx> values;
  double time = 0.0;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(g.size(), cplx{0.0, 0.0}) {}

  cplx& operator()(int j, int k) { return values[grid.index(j, k)]; }
  const cplx& operator()(int j, int k) const { return values[grid.index(j, k)]; }
};

inline bool is_finite(const Field& f) {
  return std::all_of(f.values.begin(), f.values.end(), [](const cplx& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

/// Fills a field from a callable psi(rho, z).
template <class Fn>
Field sample_field(const Grid& g, Fn&& psi) {
  Field f(g);
  for (int j = 0; j < g.n_rho; ++j) {
    const double r = g.rho(j);
    for (int k = 0; k < g.n_z; ++k) f(j, k) = cplx(psi(r, g.z(k)));
  }
  return f;
}

/// Midpoint quadrature of 2 pi \int |psi|^2 rho d rho d z.
inline double norm(const Field& f) {
  const Grid& g = f.grid;
  double total = 0.0;
  for (int j = 0; j < g.n_rho; ++j) {
    double row = 0.0;
    const cplx* p = &f.values[g.index(j, 0)];
    for (int k = 0; k < g.n_z; ++k) row += std::norm(p[k]);
    total += row * g.rho(j);
  }
  return 2.0 * pi * total * g.d_rho * g.d_z;
}

inline void scale(Field& f, double factor) {
  for (auto& v : f.values) v *= factor;
}

/// Axial partition into lattice cells [m pi - pi/2, m pi + pi/2]; the two
/// outermost cells are truncated by the domain edge.
struct CellPartition {
  int first = 0;               // index m of the leftmost cell
  std::vector<double> edges;   // size = cell count + 1
  std::vector<int> cell_of_node;

  int count() const { return static_cast<int>(edges.size()) - 1; }
  int last() const { return first + count() - 1; }
};

inline CellPartition lattice_cells(const Grid& g) {
  CellPartition p;
  const int m_max = g.half_cells();
  p.first = -m_max;
  p.edges.push_back(-g.z_max);
  for (int m = -m_max; m < m_max; ++m) p.edges.push_back((m + 0.5) * pi);
  p.edges.push_back(g.z_max);
  p.cell_of_node.resize(g.n_z);
  for (int k = 0; k < g.n_z; ++k) {
    const double z = g.z(k);
    const int m = static_cast<int>(std::floor(z / pi + 0.5));
    p.cell_of_node[k] = std::clamp(m, -m_max, m_max);
  }
  return p;
}

struct Observables {
  double peak_amplitude = 0.0;
  double norm = 0.0;
  double e_number = 0.0;
  double rms_rho = 0.0;
  double rms_z = 0.0;
  int first_cell = 0;
  std::vector<double> cell_norms;
  std::vector<double> cell_peaks;

  double cell_norm(int m) const { return at(cell_norms, m); }
  double cell_peak(int m) const { return at(cell_peaks, m); }

 private:
  double at(const std::vector<double>& v, int m) const {
    const int i = m - first_cell;
    if (i < 0 || i >= static_cast<int>(v.size())) return 0.0;
    return v[static_cast<std::size_t>(i)];
  }
};

inline Observables observables(const Field& f, const CellPartition& cells) {
  const Grid& g = f.grid;
  Observables o;
  o.first_cell = cells.first;
  o.cell_norms.assign(static_cast<std::size_t>(cells.count()), 0.0);
  o.cell_peaks.assign(static_cast<std::size_t>(cells.count()), 0.0);

  std::vector<double> axial(g.n_z, 0.0);  // \int |psi|^2 rho d rho per node
  double rho2 = 0.0;
  double peak2 = 0.0;
  for (int j = 0; j < g.n_rho; ++j) {
    const double r = g.rho(j);
    const cplx* p = &f.values[g.index(j, 0)];
    double row = 0.0;
    for (int k = 0; k < g.n_z; ++k) {
      const double a2 = std::norm(p[k]);
      axial[k] += a2 * r;
      row += a2;
      peak2 = std::max(peak2, a2);
      const auto c = static_cast<std::size_t>(cells.cell_of_node[k] - cells.first);
      o.cell_peaks[c] = std::max(o.cell_peaks[c], a2);
    }
    rho2 += row * r * r * r;
  }
  const double w = 2.0 * pi * g.d_rho * g.d_z;
  double total = 0.0;
  double z1 = 0.0;
  for (int k = 0; k < g.n_z; ++k) {
    total += axial[k];
    z1 += axial[k] * g.z(k);
    const auto c = static_cast<std::size_t>(cells.cell_of_node[k] - cells.first);
    o.cell_norms[c] += axial[k] * w;
  }
  o.norm = total * w;
  o.e_number = o.norm * std::pow(pi, -1.5);
  o.peak_amplitude = std::sqrt(peak2);
  for (auto& c : o.cell_peaks) c = std::sqrt(c);
  if (total > 0.0) {
    const double zc = z1 / total;
    double z2 = 0.0;
    for (int k = 0; k < g.n_z; ++k) z2 += axial[k] * (g.z(k) - zc) * (g.z(k) - zc);
    o.rms_z = std::sqrt(z2 / total);
    o.rms_rho = std::sqrt(rho2 / total);
  }
  return o;
}

inline Observables observables(const Field& f) {
  return observables(f, lattice_cells(f.grid));
}

/// Formats a double with 17 significant digits (round-trip exact).
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_le_double(std::ostream& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline double read_le_double(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

/// Snapshot format: four text lines (n_rho / n_z / rho_max z_max / time)
/// followed by n_rho * n_z little-endian float64 (re, im) pairs, rho outermost.
inline void write_snapshot(const std::string& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open snapshot for writing: " + path);
  const Grid& g = f.grid;
  out << g.n_rho << '\n'
      << g.n_z << '\n'
      << format_real(g.rho_max) << ' ' << format_real(g.z_max) << '\n'
      << format_real(f.time) << '\n';
  for (const auto& v : f.values) {
    detail::write_le_double(out, v.real());
    detail::write_le_double(out, v.imag());
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Field read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  int n_rho = 0, n_z = 0;
  double rho_max = 0, z_max = 0, time = 0;
  std::string line;
  auto next = [&]() -> std::string {
    if (!std::getline(in, line)) throw std::runtime_error("truncated snapshot header: " + path);
    return line;
  };
  try {
    n_rho = std::stoi(next());
    n_z = std::stoi(next());
    const std::string ext = next();
    std::size_t pos = 0;
    rho_max = std::stod(ext, &pos);
    z_max = std::stod(ext.substr(pos));
    time = std::stod(next());
  } catch (const std::logic_error&) {
    throw std::runtime_error("malformed snapshot header: " + path);
  }
  Field f(make_grid(n_rho, n_z, rho_max, z_max));
  f.time = time;
  for (auto& v : f.values) {
    const double re = detail::read_le_double(in);
    const double im = detail::read_le_double(in);
    v = cplx(re, im);
  }
  if (!in) throw std::runtime_error("truncated snapshot payload: " + path);
  return f;
}

}  // namespace frmsol
