#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpwg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Thrown when input parameters fail admissibility checks.
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative or factorization step fails to certify its result.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Which Hilbert space a discrete operator pair lives on.
enum class SpaceTag { HEps, H0 };

/// Stiffness/mass pair for a generalized symmetric eigenproblem K x = lambda M x.
struct DiscreteOperatorPair {
  SpMat K;
  SpMat M;
  int dim = 0;
  SpaceTag space_tag = SpaceTag::HEps;
  /// For assemblies that eliminate dofs (Dirichlet traces), maps kept dof -> mesh node.
  std::vector<int> dof_to_node;
};

/// A finite set of eigenvalues, sorted ascending, with completeness certificate.
struct Spectrum {
  std::vector<double> values;
  /// All eigenvalues below this cutoff are present (certified); nullopt = only k lowest.
  std::optional<double> cutoff;
  /// True when the spectrum carries the extra zero of a decoupled one-dimensional
  /// component (L^2 + C product space).
  bool appended_zero = false;
  /// cluster_id[i] == cluster_id[j] marks near-degenerate values reported separately.
  std::vector<int> cluster_id;
};

}  // namespace rpwg
