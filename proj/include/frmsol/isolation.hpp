#pragma once

// Cell-removal experiment: empty a subset of lattice cells and check that the
// localized state in the observed cell does not notice.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "frmsol/gpe.hpp"

namespace frmsol {

struct IsolationRow {
  double t = 0.0;
  double peak_ref = 0.0;
  double peak_perturbed = 0.0;
  double rel_dev = 0.0;
};

struct IsolationReport {
  std::vector<IsolationRow> rows;
  double max_rel_dev = 0.0;
  int observation_cell = 0;
  Verdict verdict_ref = Verdict::Indeterminate;
  Verdict verdict_perturbed = Verdict::Indeterminate;
};

/// Multiplies psi by a mask that vanishes inside the listed cells. The mask
/// rises as a half cosine over one axial grid spacing on each side of every
/// boundary between a cleared and a kept cell.
inline void clear_cells(Field& f, const std::vector<int>& cells_to_clear) {
  if (cells_to_clear.empty()) return;
  const Grid& g = f.grid;
  const auto part = lattice_cells(g);
  const std::set<int> cleared(cells_to_clear.begin(), cells_to_clear.end());
  auto is_cleared = [&](int m) { return cleared.count(m) > 0; };

  // faces separating a cleared cell from a kept one
  std::vector<double> faces;
  for (int m = part.first; m < part.last(); ++m) {
    if (is_cleared(m) != is_cleared(m + 1)) faces.push_back(part.edges[m - part.first + 1]);
  }
  std::vector<double> mask(g.n_z, 1.0);
  for (int k = 0; k < g.n_z; ++k) {
    const double z = g.z(k);
    double d = INFINITY;  // distance to nearest cleared/kept face
    for (double face : faces) d = std::min(d, std::abs(z - face));
    const double signed_d = is_cleared(part.cell_of_node[k]) ? d : -d;
    const double s = std::clamp(0.5 - signed_d / (2.0 * g.d_z), 0.0, 1.0);
    mask[k] = 0.5 * (1.0 - std::cos(pi * s));
  }
  for (int j = 0; j < g.n_rho; ++j) {
    for (int k = 0; k < g.n_z; ++k) f(j, k) *= mask[k];
  }
}

/// Continues `field` for `horizon` time units with and without clearing
/// `cells_to_clear`, and compares the peak amplitude of `observation_cell`.
inline IsolationReport cell_isolation_experiment(const Field& field, const std::vector<int>& cells_to_clear,
                                                 const Schedule& s, const SolverConfig& cfg,
                                                 const Endcap& cap, double horizon = 200.0,
                                                 int observation_cell = 0,
                                                 const StabilityCriteria& criteria = {}) {
  if (std::find(cells_to_clear.begin(), cells_to_clear.end(), observation_cell) != cells_to_clear.end()) {
    throw std::invalid_argument("cell isolation: cannot clear the observation cell " +
                                std::to_string(observation_cell));
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("cell isolation: horizon must be positive");
  const auto part = lattice_cells(field.grid);
  for (int m : cells_to_clear) {
    if (m < part.first || m > part.last())
      throw std::invalid_argument("cell isolation: cell " + std::to_string(m) + " is outside the grid");
  }

  SolverConfig run = cfg;
  run.t_end = field.time + horizon;
  run.snapshot_times.clear();
  run.snapshot_dir.clear();

  Field perturbed = field;
  clear_cells(perturbed, cells_to_clear);

  const RunRecord ref = evolve(field, s, run, cap, criteria);
  const RunRecord pert = evolve(std::move(perturbed), s, run, cap, criteria);

  IsolationReport report;
  report.observation_cell = observation_cell;
  report.verdict_ref = ref.verdict;
  report.verdict_perturbed = pert.verdict;
  const std::size_t n = std::min(ref.series.size(), pert.series.size());
  for (std::size_t i = 0; i < n; ++i) {
    IsolationRow row;
    row.t = ref.series[i].t;
    row.peak_ref = ref.series[i].obs.cell_peak(observation_cell);
    row.peak_perturbed = pert.series[i].obs.cell_peak(observation_cell);
    row.rel_dev = row.peak_ref > 0.0 ? std::abs(row.peak_perturbed - row.peak_ref) / row.peak_ref : 0.0;
    report.max_rel_dev = std::max(report.max_rel_dev, row.rel_dev);
    report.rows.push_back(row);
  }
  if (ref.series.size() != pert.series.size()) report.max_rel_dev = INFINITY;
  return report;
}

inline void write_isolation_csv(const std::string& path, const IsolationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open isolation report: " + path);
  out << "t,peak_ref,peak_perturbed,rel_dev\n";
  for (const auto& row : r.rows) {
    out << format_real(row.t) << ',' << format_real(row.peak_ref) << ','
        << format_real(row.peak_perturbed) << ',' << format_real(row.rel_dev) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace frmsol
