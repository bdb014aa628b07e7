#pragma once

#include "rpwg/core.hpp"

#include <random>
#include <utility>

namespace rpwg {

/// A pair of finite-dimensional form spaces with identification maps between
/// them. A and At are nonnegative forms, M and Mt the inner products of the
/// two spaces; J and J1 map the first space into the second, Jt and Jt1 map
/// back. Norm scale per space: |f|^2 = f'Mf, |f|_1^2 = f'(A+M)f, and the
/// second-order norm |f|_2 = |M^{-1}(A+M)f| taken in the M inner product.
struct AbstractInstance {
  Mat A, M;    // first space
  Mat At, Mt;  // second space
  Mat J, J1;   // first -> second
  Mat Jt, Jt1; // second -> first

  int dim() const { return static_cast<int>(A.rows()); }
  int dim_t() const { return static_cast<int>(At.rows()); }
  /// Shape, symmetry, and definiteness checks; throws validation_error.
  void validate() const;
};

/// Optimal constants of the four closeness conditions:
///   map:     |J f - J1 f|        vs |f|_1
///   map_t:   |Jt u - Jt1 u|      vs |u|_1 (second space)
///   pairing: |(Jf, u) - (f, Jt u)| vs |f| |u|
///   forms:   |at[J1 f, u] - a[f, Jt1 u]| vs |f|_2 |u|_1
struct DeltaParts {
  double map = 0, map_t = 0, pairing = 0, forms = 0;
  double max_delta() const;
};

DeltaParts measure_delta_parts(const AbstractInstance& inst);

/// Smallest delta for which all four closeness conditions hold.
double measure_delta(const AbstractInstance& inst);

struct ConstantsBundle {
  double delta = 0;
  double eta = 0, eta_t = 0;  // resolvent defect norms, both directions
  double mu = 1, nu = 0;      // |f|^2 <= mu |Jf|^2 + nu a[f]
  double mu_t = 1, nu_t = 0;  // |u|^2 <= mu_t |Jt u|^2 + nu_t at[u]
  double kappa = 0.5, kappa_t = 0.5;
};

/// Measures eta/eta_t directly and picks (mu, nu) pairs on a nu grid,
/// minimizing the spectral-distance bound at the given kappa values.
ConstantsBundle measure_constants(const AbstractInstance& inst, double kappa = 0.5,
                                  double kappa_t = 0.5);

struct TheoremCheck {
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};

/// lhs = |R~ J - J R| (first-space mass to second-space mass), rhs = 4 delta.
TheoremCheck verify_thm_A1(const AbstractInstance& inst);

/// lhs = Hausdorff distance of the resolvent spectra (with the spectral point
/// 0 appended to both, the finite-dimensional stand-in for unboundedness),
/// rhs = max{eta sqrt(mu/kappa), nu/(1-kappa), eta_t sqrt(mu_t/kappa_t),
/// nu_t/(1-kappa_t)}.
TheoremCheck verify_thm_A2(const AbstractInstance& inst, const ConstantsBundle& c);

/// Closed-form domination pair (mu, nu) = (1 + 4d/(2-3d), d/(2-3d)) valid for
/// quasi-unitary identifications with defect d < 2/3; rejects d >= 2/3.
std::pair<double, double> quasi_unitary_constants(double delta);

/// Eigenvalues of (A + M)^{-1} M, i.e. (1 + lambda)^{-1} over the pencil
/// spectrum, sorted ascending; optionally with 0 appended.
std::vector<double> resolvent_spectrum(const Mat& A, const Mat& M, bool append_zero);

/// sup |D x|_{G_dst} / |x|_{G_src} for a dense map (exact, via a generalized
/// symmetric eigensolve).
double weighted_op_norm_dense(const Mat& D, const Mat& G_src, const Mat& G_dst);

/// Random instance: block-extended trivial pair (exact intertwining, delta 0)
/// plus independent perturbations of scale `spread` on the couplings and the
/// second-space form. dim_t >= dim required.
AbstractInstance random_instance(std::mt19937_64& rng, int dim, int dim_t,
                                 double spread);

/// Randomized property campaign: per draw checks the resolvent-difference
/// bound, the spectral-distance bound, and the same-space comparison
/// d_H <= |R - R~|. Margins are rhs - lhs (negative = violation beyond 1e-10).
struct SuiteSummary {
  int draws = 0;
  int violations = 0;
  double min_a1_margin = 0;
  double min_a2_margin = 0;
  double min_hn_margin = 0;
  double max_delta_seen = 0;
};

SuiteSummary run_property_suite(int draws, std::uint64_t seed);

}  // namespace rpwg
