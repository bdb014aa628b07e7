#include "rpwg/kronig_penney.hpp"

#include "rpwg/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace rpwg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dispersion(double k, double gamma, double period) {
  return std::cos(k * period) + gamma * std::sin(k * period) / (2 * k);
}

}  // namespace

std::vector<Band> kp_band_edges(double gamma, int n_bands, double period) {
  if (gamma < 0) throw validation_error("kp_band_edges: gamma must be nonnegative");
  if (n_bands < 1) throw validation_error("kp_band_edges: need n_bands >= 1");
  if (!(period > 0)) throw validation_error("kp_band_edges: period must be positive");

  std::vector<Band> bands;
  bands.reserve(n_bands);
  const double cell = kPi / period;
  for (int m = 1; m <= n_bands; ++m) {
    const double left = (m - 1) * cell, right = m * cell;
    const double sigma = (m % 2 == 1) ? 1.0 : -1.0;
    // D equals sigma exactly at the left lattice point and overshoots past it
    // inside the gap; probe for the overshoot, then bisect back to the edge.
    double start = left;
    double probe = -1;
    for (double x = cell * 1e-12; x < cell * 0.75; x *= 2) {
      if ((dispersion(left + x, gamma, period) - sigma) * sigma > 1e-14) {
        probe = left + x;
        break;
      }
    }
    if (probe > 0) {
      double lo = probe, hi = right;  // f*sigma > 0 at lo, = -2 at hi
      while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        if ((dispersion(mid, gamma, period) - sigma) * sigma > 0)
          lo = mid;
        else
          hi = mid;
      }
      start = 0.5 * (lo + hi);
    }
    Band b;
    b.k_lo = start;
    b.k_hi = right;
    b.lambda_lo = start * start;
    b.lambda_hi = right * right;
    bands.push_back(b);
  }
  return bands;
}

void validate_periodic(const PeriodicSpec& spec) {
  if (!(spec.period > 0))
    throw validation_error("periodic spec: period must be positive");
  if (spec.n_cells < 1)
    throw validation_error("periodic spec: need at least one cell");
  if (!(spec.gamma > 0))
    throw validation_error("periodic spec: gamma must be positive");
  GeometryParams p = spec.p;
  p.gamma = spec.gamma;
  p.ell_minus = -spec.n_cells * spec.period / 2;
  p.ell_plus = spec.n_cells * spec.period / 2;
  DerivedScales sc = validate_params(p);
  if (!(sc.b < spec.period - sc.d))
    throw validation_error(
        "periodic spec: rooms of neighbouring cells overlap (b >= period - d)");
}

std::vector<double> periodic_sites(const PeriodicSpec& spec) {
  std::vector<double> sites(spec.n_cells);
  for (int j = 0; j < spec.n_cells; ++j)
    sites[j] = (j - 0.5 * (spec.n_cells - 1)) * spec.period;
  return sites;
}

Spectrum truncated_2d_spectrum(const PeriodicSpec& spec, double cutoff,
                               const MeshControl& ctrl) {
  validate_periodic(spec);
  if (spec.n_cells < 4)
    throw validation_error("truncated_2d_spectrum: need n_cells >= 4");
  GeometryParams p = spec.p;
  p.gamma = spec.gamma;
  p.ell_minus = -spec.n_cells * spec.period / 2;
  p.ell_plus = spec.n_cells * spec.period / 2;
  Mesh2D mesh = build_waveguide_mesh(p, ctrl, periodic_sites(spec));
  DiscreteOperatorPair pair = assemble_2d(mesh, PotentialSpec::none());
  EigsOptions opts;
  opts.cutoff = cutoff;
  return eigs_lowest(pair, opts).spectrum;
}

DiscreteOperatorPair comb_1d_pair(double gamma, int n_sites, double period,
                                  int nodes_per_cell) {
  if (n_sites < 1 || nodes_per_cell < 2)
    throw validation_error("comb_1d_pair: need n_sites >= 1, nodes_per_cell >= 2");
  if (nodes_per_cell % 2 != 0)
    throw validation_error("comb_1d_pair: nodes_per_cell must be even");
  const double L = n_sites * period;
  const int n = n_sites * nodes_per_cell;
  std::vector<double> grid(n + 1);
  for (int i = 0; i <= n; ++i) grid[i] = -L / 2 + L * (static_cast<double>(i) / n);
  grid.front() = -L / 2;
  grid.back() = L / 2;
  DiscreteOperatorPair pair = assemble_1d(grid, PotentialSpec::none(), 0.0);
  for (int j = 0; j < n_sites; ++j) {
    // Site j sits nodes_per_cell/2 intervals past the cell's left edge.
    int idx = j * nodes_per_cell + nodes_per_cell / 2;
    pair.K.coeffRef(idx, idx) += gamma;
  }
  return pair;
}

GapEvidenceReport gap_evidence(const PeriodicSpec& spec,
                               const std::vector<double>& eps_list, double cutoff,
                               const MeshControl& ctrl) {
  if (eps_list.empty())
    throw validation_error("gap_evidence: need at least one eps value");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (!(eps_list[i + 1] < eps_list[i]))
      throw validation_error("gap_evidence: eps list must be strictly decreasing");
  if (!(cutoff > 0)) throw validation_error("gap_evidence: cutoff must be positive");

  GapEvidenceReport rep;
  rep.cutoff = cutoff;
  // Enough bands to cover [0, cutoff]: band m ends at (m pi / period)^2.
  int n_bands =
      static_cast<int>(std::ceil(std::sqrt(cutoff) * spec.period / kPi)) + 1;
  rep.bands = kp_band_edges(spec.gamma, n_bands, spec.period);
  const double threshold = rep.bands.front().lambda_lo / 2;

  auto distance_to_bands = [&](double lam) {
    double best = lam;  // distance to the appended limit point 0
    for (const Band& b : rep.bands) {
      if (lam >= b.lambda_lo && lam <= b.lambda_hi) return 0.0;
      best = std::min(best, std::min(std::abs(lam - b.lambda_lo),
                                     std::abs(lam - b.lambda_hi)));
    }
    return best;
  };
  auto hosting_gap_width = [&](double lam) {
    double prev_hi = 0.0;
    for (const Band& b : rep.bands) {
      if (lam < b.lambda_lo) return b.lambda_lo - prev_hi;
      prev_hi = b.lambda_hi;
    }
    return std::numeric_limits<double>::infinity();
  };

  auto run_one = [&](double eps) {
    PeriodicSpec s = spec;
    s.p.eps = eps;
    Spectrum sp = truncated_2d_spectrum(s, cutoff, ctrl);
    GapEvidenceRow row;
    row.eps = eps;
    row.cluster_threshold = threshold;
    row.n_eigenvalues = static_cast<int>(sp.values.size());
    for (double lam : sp.values) {
      if (lam < threshold) {
        ++row.cluster_size;
        continue;
      }
      double dist = distance_to_bands(lam);
      if (dist > row.max_intrusion) row.max_intrusion = dist;
      double width = hosting_gap_width(lam);
      if (dist > 0 && std::isfinite(width))
        row.max_relative_intrusion =
            std::max(row.max_relative_intrusion, dist / width);
    }
    return row;
  };

  std::vector<std::future<GapEvidenceRow>> futures;
  futures.reserve(eps_list.size());
  for (double eps : eps_list)
    futures.push_back(std::async(std::launch::async, run_one, eps));
  for (auto& f : futures) rep.rows.push_back(f.get());

  rep.intrusion_decreasing = true;
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
    if (rep.rows[i + 1].max_intrusion > rep.rows[i].max_intrusion + 1e-12)
      rep.intrusion_decreasing = false;
  return rep;
}

}  // namespace rpwg
