#pragma once

// Run records produced by the propagator and their stability verdicts.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "frmsol/core.hpp"
#include "frmsol/verdict.hpp"

namespace frmsol {

struct StabilityCriteria {
  double window_fraction = 0.25;
  double max_breathing_ratio = 3.0;
  double min_cell_retention = 0.5;
  double max_trend = 0.1;
  double collapse_factor = 50.0;  // peak growth over its value at t4 that counts as collapse
  int min_samples = 100;          // samples after t4 required for a verdict
};

inline void validate(const StabilityCriteria& c) {
  if (!(c.window_fraction > 0.0 && c.window_fraction < 1.0))
    throw std::invalid_argument("criteria: window_fraction must lie in (0, 1)");
  if (!(c.max_breathing_ratio > 1.0))
    throw std::invalid_argument("criteria: max_breathing_ratio must exceed 1");
  if (!(c.min_cell_retention > 0.0 && c.min_cell_retention < 1.0))
    throw std::invalid_argument("criteria: min_cell_retention must lie in (0, 1)");
  if (!(c.max_trend > 0.0)) throw std::invalid_argument("criteria: max_trend must be positive");
  if (!(c.collapse_factor > 1.0)) throw std::invalid_argument("criteria: collapse_factor must exceed 1");
}

struct ObservableSample {
  double t = 0.0;
  Observables obs;
};

struct RunRecord {
  std::vector<ObservableSample> series;
  Field final_field;
  std::vector<Field> snapshots;
  double t_settled = 0.0;  // t4: end of the last protocol ramp
  bool aborted = false;    // solver hit a non-finite value
  bool collapse_guard = false;  // run stopped early on runaway peak growth
  std::string diagnostic;
  Verdict verdict = Verdict::Indeterminate;
  double norm_drift = 0.0;
};

struct RunAssessment {
  Verdict verdict = Verdict::Indeterminate;
  double peak_ratio = 0.0;   // max/min of the peak over the trailing window
  double trend = 0.0;        // |slope| * window length / mean, trailing window
  double retention = 0.0;    // central-cell norm at the end over its value at t4
  double peak_growth = 0.0;  // max peak after t4 over the peak at t4
  std::string diagnostic;
};

/// Least-squares slope of y against t.
inline double linear_slope(const std::vector<double>& t, const std::vector<double>& y) {
  const auto n = static_cast<double>(t.size());
  if (t.size() < 2) return 0.0;
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i];
    ym += y[i];
  }
  tm /= n;
  ym /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += (t[i] - tm) * (y[i] - ym);
    den += (t[i] - tm) * (t[i] - tm);
  }
  return den > 0.0 ? num / den : 0.0;
}

inline RunAssessment assess_run(const RunRecord& record, const StabilityCriteria& c = {}) {
  RunAssessment a;
  const auto& s = record.series;
  auto settled = std::find_if(s.begin(), s.end(),
                              [&](const ObservableSample& x) { return x.t >= record.t_settled; });
  const auto n_after = std::distance(settled, s.end());

  if (record.aborted) {
    a.verdict = Verdict::Collapse;
    a.diagnostic = "solver aborted: " + record.diagnostic;
    return a;
  }
  if (settled == s.end()) {
    a.diagnostic = "record ends before t4";
    return a;
  }
  const double peak0 = settled->obs.peak_amplitude;
  double peak_max = 0.0;
  for (auto it = settled; it != s.end(); ++it) peak_max = std::max(peak_max, it->obs.peak_amplitude);
  a.peak_growth = peak0 > 0.0 ? peak_max / peak0 : 0.0;
  if (record.collapse_guard || a.peak_growth > c.collapse_factor) {
    a.verdict = Verdict::Collapse;
    a.diagnostic = "peak grew by a factor " + format_real(a.peak_growth) + " after t4";
    return a;
  }
  if (n_after < c.min_samples) {
    a.diagnostic = "too few samples after t4 (" + std::to_string(n_after) + ")";
    return a;
  }
  const double cell0 = settled->obs.cell_norm(0);
  a.retention = cell0 > 0.0 ? s.back().obs.cell_norm(0) / cell0 : 0.0;
  if (a.retention < c.min_cell_retention) {
    a.verdict = Verdict::Decay;
    a.diagnostic = "central cell kept " + format_real(a.retention) + " of its population";
    return a;
  }

  const double t_last = s.back().t;
  const double t_from = t_last - c.window_fraction * (t_last - s.front().t);
  std::vector<double> tw, pw;
  for (const auto& x : s) {
    if (x.t >= t_from) {
      tw.push_back(x.t);
      pw.push_back(x.obs.peak_amplitude);
    }
  }
  const auto [lo, hi] = std::minmax_element(pw.begin(), pw.end());
  double mean = 0.0;
  for (double p : pw) mean += p;
  mean /= static_cast<double>(pw.size());
  a.peak_ratio = *lo > 0.0 ? *hi / *lo : INFINITY;
  a.trend = mean > 0.0 ? std::abs(linear_slope(tw, pw)) * (tw.back() - tw.front()) / mean : INFINITY;
  if (a.peak_ratio < c.max_breathing_ratio && a.trend < c.max_trend) {
    a.verdict = Verdict::Stable;
  } else {
    a.verdict = Verdict::Indeterminate;
    a.diagnostic = "breathing ratio " + format_real(a.peak_ratio) + ", trend " + format_real(a.trend);
  }
  return a;
}

inline Verdict classify_run(const RunRecord& record, const StabilityCriteria& c = {}) {
  return assess_run(record, c).verdict;
}

}  // namespace frmsol
