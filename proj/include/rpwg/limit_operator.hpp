#pragma once

#include "rpwg/core.hpp"
#include "rpwg/fem.hpp"

#include <vector>

namespace rpwg {

/// The limit of the waveguide family: a 1D Schrodinger operator on a finite
/// interval with Neumann ends and a delta coupling of strength gamma at 0,
/// direct-summed with a zero operator on a single extra scalar degree of
/// freedom (the vanished room keeps its constant mode, at eigenvalue 0).
struct LimitSpec {
  double ell_minus = -1.0;
  double ell_plus = 1.0;
  double gamma = 1.0;
  PotentialSpec V = PotentialSpec::none();
};

void validate_limit_spec(const LimitSpec& spec);

/// 1D grid on (ell_minus, ell_plus) with ~n nodes and a node exactly at 0.
std::vector<double> limit_grid(const LimitSpec& spec, int n);

/// Analytic route, V = 0 only. Eigenvalues are lambda = k^2 where k solves
///   k sin(k(l+ - l-)) = gamma cos(k l-) cos(k l+),
/// the matching determinant of cosine branches obeying the Neumann ends,
/// continuity at 0 and the derivative jump f'(0+) - f'(0-) = gamma f(0).
/// Roots are bracketed on a k-grid and bisected; the scan is repeated with a
/// halved step until the root count stabilizes. k = 0 (lambda = 0) belongs to
/// the interval part iff gamma = 0; the scalar-summand 0 is always appended
/// and flagged.
Spectrum secular_spectrum(const LimitSpec& spec, double k_max);

/// Galerkin route, arbitrary potential: P1 discretization with n dofs,
/// lowest k eigenvalues, plus the appended scalar zero.
Spectrum galerkin_spectrum(const LimitSpec& spec, int n, int k);

/// The discrete pair (stiffness incl. delta term, mass) on an explicit grid.
/// Exposed so the identification maps can reuse the exact same dof layout.
DiscreteOperatorPair limit_pair(const LimitSpec& spec, const std::vector<double>& grid);

}  // namespace rpwg
