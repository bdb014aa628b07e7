#pragma once

#include "rpwg/core.hpp"
#include "rpwg/fem.hpp"
#include "rpwg/geometry.hpp"

namespace rpwg {

/// One spectral band of the delta-comb on the line, in both scales
/// (wavenumber k and eigenvalue lambda = k^2).
struct Band {
  double k_lo = 0, k_hi = 0;
  double lambda_lo = 0, lambda_hi = 0;
};

/// Band edges of the periodic delta-comb with uniform strength gamma >= 0 and
/// the given lattice spacing. Derived from the monodromy-matrix dispersion
/// function D(k) = cos(k L) + gamma sin(k L) / (2k): a value k belongs to a
/// band iff |D(k)| <= 1. Band m ends exactly at k = m pi / L; the start is the
/// other |D| = 1 crossing, found by bisection to 1e-10. With gamma = 0 the
/// bands tile [0, inf) with zero-width gaps.
std::vector<Band> kp_band_edges(double gamma, int n_bands, double period = 1.0);

/// Periodic waveguide truncation: n_cells copies of the room-and-passage cell
/// on a strip of length n_cells * period, sites at cell centers, Neumann ends.
/// The comb strength gamma overrides p.gamma so the 1D and 2D sides of the
/// comparison cannot drift apart.
struct PeriodicSpec {
  double period = 1.0;
  double gamma = 1.0;
  int n_cells = 8;
  GeometryParams p;
};

/// Throws validation_error unless the cell geometry is admissible, rooms of
/// neighbouring cells are disjoint (b < period - d), and n_cells >= 1.
void validate_periodic(const PeriodicSpec& spec);

/// Site positions of the truncation, centered at zero.
std::vector<double> periodic_sites(const PeriodicSpec& spec);

/// Neumann spectrum of the truncated 2D waveguide below the cutoff.
Spectrum truncated_2d_spectrum(const PeriodicSpec& spec, double cutoff,
                               const MeshControl& ctrl = {});

/// Neumann truncation of the 1D comb itself: n_sites cells, delta couplings of
/// strength gamma at the cell centers, nodes_per_cell grid intervals per cell
/// (dyadic counts keep the site coordinates exact).
DiscreteOperatorPair comb_1d_pair(double gamma, int n_sites, double period = 1.0,
                                  int nodes_per_cell = 16);

struct GapEvidenceRow {
  double eps = 0;
  int n_eigenvalues = 0;     // below the cutoff
  int cluster_size = 0;      // near-0 room cluster (below half the band-1 start)
  double cluster_threshold = 0;
  double max_intrusion = 0;  // largest distance from a non-cluster eigenvalue
                             // to the band set
  double max_relative_intrusion = 0;  // same, relative to the hosting gap width
};

struct GapEvidenceReport {
  std::vector<Band> bands;  // covering [0, cutoff]
  double cutoff = 0;
  std::vector<GapEvidenceRow> rows;
  bool intrusion_decreasing = false;  // non-increasing along the eps sequence
};

/// For each eps (strictly decreasing), computes the truncated spectrum and the
/// worst gap intrusion relative to the comb bands.
GapEvidenceReport gap_evidence(const PeriodicSpec& spec,
                               const std::vector<double>& eps_list, double cutoff,
                               const MeshControl& ctrl = {});

}  // namespace rpwg
