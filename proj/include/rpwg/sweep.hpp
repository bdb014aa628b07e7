#pragma once

#include "rpwg/core.hpp"
#include "rpwg/geometry.hpp"
#include "rpwg/identification.hpp"

#include <map>
#include <optional>
#include <string>

namespace rpwg {

/// Mesh policy used by sweeps: strip width eps/8, passage at least 4 x 8
/// elements, room width b/16 (the first and last come from the geometry
/// defaults; only the passage depth is raised here).
MeshControl sweep_mesh_defaults();

struct SweepConfig {
  GeometryParams base;            // eps field ignored; eps_list drives the sweep
  std::vector<double> eps_list;   // strictly decreasing
  MeshControl mesh = sweep_mesh_defaults();
  double cutoff = 60;             // eigenvalue window for the spectral metric
  bool do_resolvent = true;
  bool do_dual = false;
  bool do_spectral = true;
  bool do_quasi = false;
  bool do_lemmas = false;
  int lemma_samples = 100;
  std::uint64_t seed = 0x51ab3a7dULL;
  int workers = 0;                // 0 = hardware concurrency
};

struct MetricEntry {
  bool present = false;
  double value = 0;       // finer of the two resolutions
  double coarse = 0;      // coarser resolution
  double mesh_error = 0;  // |value - coarse|, a conservative error estimate
  bool flagged = false;   // mesh_error > 25% of |value|: excluded from fits
};

struct SweepRow {
  double eps = 0;
  bool ok = false;
  std::string error;       // populated when ok is false
  int dofs = 0, dofs_fine = 0;
  MetricEntry resolvent, dual, spectral, quasi;
  double truncation_bound = 0;  // included additively in spectral.value
  std::optional<LemmaRatios> lemmas;  // fine mesh only
  double wall_seconds = 0;
};

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;  // rms log-space residual
  int points = 0;
};

struct ConvergenceReport {
  GeometryParams base;
  std::vector<SweepRow> rows;
  std::map<std::string, SlopeFit> fits;       // keyed by metric name
  std::map<std::string, double> expected;     // theoretical rate per metric
};

/// Least squares of ln(value) against ln(eps). Rows with non-positive values
/// are dropped (they carry no slope information); fewer than 3 usable rows is
/// an error.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& eps_value);

/// Full convergence study: per eps, meshes at two resolutions, assembles the
/// operators and identification maps, computes the selected metrics with a
/// two-resolution mesh-error estimate, then fits log-log slopes over the
/// unflagged rows. Per-eps failures are recorded in the row and the sweep
/// continues.
ConvergenceReport run_sweep(const SweepConfig& cfg);

}  // namespace rpwg
