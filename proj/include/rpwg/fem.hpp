#pragma once

#include "rpwg/core.hpp"
#include "rpwg/geometry.hpp"

#include <functional>

namespace rpwg {

/// Nonnegative potential on the strip coordinate. The two-dimensional operator
/// applies it as V(x1) on strip elements and 0 on passage/room; the limit
/// operator applies it on the interval directly.
struct PotentialSpec {
  std::function<double(double)> fn;
  bool zero = true;

  static PotentialSpec none() { return {nullptr, true}; }
  static PotentialSpec constant(double c);
  static PotentialSpec of(std::function<double(double)> f);

  double operator()(double x) const { return zero ? 0.0 : fn(x); }
};

enum class BoundaryCondition {
  AllNeumann,
  /// Keeps only strip+passage elements and imposes a zero trace on the passage
  /// top (the decoupled forward component).
  DirichletOnDPlus,
};

/// P1 stiffness/mass pair on the waveguide mesh. Stiffness includes the
/// potential term; quadrature is closed-form for the P1 products and midpoint
/// (centroid) for the potential factor. For AllNeumann, dof i == mesh node i.
DiscreteOperatorPair assemble_2d(const Mesh2D& mesh, const PotentialSpec& V,
                                 BoundaryCondition bc = BoundaryCondition::AllNeumann);

/// P1 pair over the elements of a single region with natural boundary
/// conditions (used for the decoupled room comparison).
DiscreteOperatorPair assemble_region_neumann(const Mesh2D& mesh, Region region);

/// P1 pair on a sorted 1D grid: form integral of f' g' + V f g plus a delta
/// coupling of strength gamma at the grid node at delta_pos (must be a node).
DiscreteOperatorPair assemble_1d(const std::vector<double>& grid,
                                 const PotentialSpec& V, double gamma,
                                 double delta_pos = 0.0);

struct InequalityCheck {
  double lhs = 0;
  double rhs = 0;
  bool holds = false;
  double ratio = 0;  // lhs / rhs
};

/// sup-norm bound |f|_inf^2 <= coth(|I|/2) * (|f'|^2 + |f|^2) for P1 functions
/// on the grid (max attained at nodes).
InequalityCheck check_sobolev_1d(const std::vector<double>& grid, const Vec& f);

/// |f|^2 <= (|I|/pi)^2 |f'|^2 for P1 functions vanishing at both ends.
InequalityCheck check_poincare_dirichlet(const std::vector<double>& grid, const Vec& f);

/// |u|^2 <= |I| <u>^2 + (|I|/pi)^2 |u'|^2 (mean-value variant on an interval).
InequalityCheck check_poincare_mean(const std::vector<double>& grid, const Vec& u);

/// |u|^2_{L2(R)} <= |R| <u>_R^2 + (b/pi)^2 |grad u|^2_{L2(R)} on the room,
/// u given by mesh nodal values.
InequalityCheck check_poincare_mean_room(const Mesh2D& mesh, const Vec& u);

/// Exact P1 integrals on a 1D grid.
double integral_fg_1d(const std::vector<double>& grid, const Vec& f, const Vec& g);
double integral_dfdg_1d(const std::vector<double>& grid, const Vec& f, const Vec& g);

/// Per-element geometry of the P1 basis: vertex ids, area, centroid and the
/// (constant) gradient components of each barycentric basis function.
struct ElementGeometry {
  std::array<int, 3> v;
  double area = 0;
  double cx = 0, cy = 0;
  std::array<double, 3> gx, gy;
};
ElementGeometry element_geometry(const Mesh2D& mesh, int t);

}  // namespace rpwg
