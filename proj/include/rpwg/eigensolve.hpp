#pragma once

#include "rpwg/core.hpp"

#include <functional>
#include <memory>

namespace rpwg {

struct EigsOptions {
  int k = 6;                     // number of lowest eigenvalues (ignored with cutoff)
  std::optional<double> cutoff;  // return all eigenvalues below this, certified
  std::optional<double> shift;   // shift-invert target, default chosen automatically
  double tol = 1e-9;             // residual tolerance, scaled by (1 + |lambda|)
  int max_subspace = 0;          // 0 = automatic
  std::uint64_t seed = 0x2545f4914f6cdd1dULL;
  bool want_vectors = false;
};

struct EigsResult {
  Spectrum spectrum;
  Mat vectors;                    // M-orthonormal columns when requested
  std::vector<double> residuals;  // |K x - lambda M x|_{M^{-1}} per pair
};

/// Lowest eigenvalues of K x = lambda M x (K sym. psd, M spd). Small problems
/// are solved densely; larger ones by shift-invert Lanczos with full
/// reorthogonalization. Completeness of the returned set is certified by the
/// inertia (negative-pivot count) of an LDLT factorization of K - t M, with
/// deflated restarts until the count matches, so clustered and multiple
/// eigenvalues are not silently dropped.
EigsResult eigs_lowest(const DiscreteOperatorPair& pair, const EigsOptions& opts = {});

/// Number of eigenvalues of (K, M) strictly below t, via LDLT inertia.
int inertia_below(const DiscreteOperatorPair& pair, double t);

/// Factorized handle for (K + M)^{-1}.
class ResolventHandle {
 public:
  explicit ResolventHandle(const DiscreteOperatorPair& pair);
  /// Resolvent applied to a state: solves (K + M) x = M rhs.
  Vec apply(const Vec& rhs) const;
  /// Solves (K + M) x = b for an already-assembled load b.
  Vec solve_load(const Vec& b) const;
  const SpMat& mass() const { return *M_; }
  int dim() const { return dim_; }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  const SpMat* M_;
  int dim_ = 0;
};

/// General linear map between two discretized spaces, with plain transpose.
struct LinearMap {
  int rows = 0, cols = 0;
  std::function<Vec(const Vec&)> apply;
  std::function<Vec(const Vec&)> apply_t;

  static LinearMap from_sparse(const SpMat& A);
};

struct OpNormOptions {
  double rel_tol = 1e-6;
  int max_iter = 50000;
  int restarts = 2;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

struct OpNormResult {
  double value = 0;
  bool converged = false;
  int iterations = 0;
};

/// Weighted operator norm sup_x |L x|_{G_dst} / |x|_{G_src} by power iteration
/// on the G-adjoint composition. G_src and G_dst are SPD Gram matrices (mass
/// or form matrices).
OpNormResult op_norm(const LinearMap& L, const SpMat& G_src, const SpMat& G_dst,
                     const OpNormOptions& opts = {});

}  // namespace rpwg
