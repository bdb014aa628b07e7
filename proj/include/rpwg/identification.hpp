#pragma once

#include "rpwg/core.hpp"
#include "rpwg/eigensolve.hpp"
#include "rpwg/fem.hpp"
#include "rpwg/geometry.hpp"

#include <Eigen/SparseCholesky>

#include <array>
#include <memory>
#include <vector>

namespace rpwg {

/// Piecewise-linear squeeze of the interval onto itself that flattens the
/// passage mouth around a site at 0: identity outside |x| >= eps/2, zero on
/// |x| <= d/2, linear with slope in [1, 2] in between.
double squeeze_map(double x, double eps, double d);

/// Region-wise refinement of the nodal space: one block of dofs per region
/// with the interface nodes duplicated. The injection maps below land here so
/// that a vector supported on one region block has exactly zero mass overlap
/// with the other regions; that is what makes the algebraic identities exact
/// instead of holding only up to interface-element quadrature.
struct BrokenSpace {
  std::array<std::vector<int>, 3> nodes;  // mesh node per region-local dof
  std::array<int, 3> offset{};            // block start in broken indexing
  int dim = 0;
  int n_cont = 0;
  SpMat E;    // continuous nodal vector -> broken vector (inclusion)
  SpMat M_b;  // block-diagonal broken mass; E^T M_b E equals the usual mass
};

BrokenSpace build_broken_space(const Mesh2D& mesh);

/// The discrete transplantation operators between the limit space (interval
/// dofs on the strip x-lines plus one scalar dof per room) and the waveguide
/// space. J injects (scaled) interval values on the strip block and room
/// constants on the room block, zero on the passage. J1 is the form-domain
/// compatible variant: the interval factor is pulled back through the squeeze
/// map and the passage carries the linear vertical blend between the two
/// sides. Jt is the exact mass adjoint of J, realized as a factorized solve
/// with the limit mass; by construction Jt J is the identity.
struct IdMaps {
  BrokenSpace broken;
  SpMat J;        // limit dofs -> broken dofs
  SpMat J1;       // limit dofs -> broken dofs
  SpMat Jt_load;  // J^T M_b E : continuous dofs -> limit load vectors
  DiscreteOperatorPair pair0;  // (interval form incl. couplings) + scalar block
  std::vector<double> grid;    // interval dofs, identical to strip x-lines
  std::vector<int> site_dof;   // interval dof index of each site
  int n1d = 0;
  int n_rooms = 0;
  double eps = 0, d = 0, h = 0, b = 0;
  std::vector<double> sites;

  Vec apply_Jt(const Vec& u_cont) const;
  Vec apply_Jt_broken(const Vec& u_broken) const;
  Vec m0_solve(const Vec& rhs) const;

  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> m0;
};

/// Build the maps on a waveguide mesh (tensor strip required; the interval
/// dof layout is the mesh's strip x-line set). The potential enters the limit
/// pair's stiffness exactly as it enters the 2D strip assembly.
IdMaps build_maps(const Mesh2D& mesh, const PotentialSpec& V = PotentialSpec::none());

/// Operator norm (limit mass -> waveguide mass) of
///   f |-> Resolvent2d(J f) - J Resolvent0(f),
/// both resolvents at spectral point -1. pair2d must be the all-Neumann
/// assembly on the same mesh the maps were built on.
double resolvent_defect(const IdMaps& maps, const DiscreteOperatorPair& pair2d,
                        const DiscreteOperatorPair& pair0,
                        const OpNormOptions& opts = {});

/// Same defect measured through the adjoint direction u |-> Jt R u - R0 Jt u
/// on broken data; equals resolvent_defect exactly in exact arithmetic.
double resolvent_defect_dual(const IdMaps& maps, const DiscreteOperatorPair& pair2d,
                             const DiscreteOperatorPair& pair0,
                             const OpNormOptions& opts = {});

/// Largest value of |u - J Jt u|_(mass) / |u|_(form+mass) over the continuous
/// space: how far J Jt is from the identity, measured H1 -> L2.
double quasi_unitarity_defect(const IdMaps& maps, const DiscreteOperatorPair& pair2d,
                              const OpNormOptions& opts = {});

/// Measured ratios lhs / (declared eps-power * rhs) for the trace and
/// passage-smallness estimates that drive the convergence proof. Randomized
/// candidates plus crafted near-worst-case ones (log spikes at the passage
/// corners); honest lower bounds on the sharp constants.
struct LemmaRatios {
  double mean_dplus_room = 0;    // |<u>_D+ - <u>_room| vs |ln eps|^{1/2} |grad u|_room
  double mean_dminus_below = 0;  // |<u>_D- - <u>_Y| vs |ln eps|^{1/2} |grad u|_Y
  double mean_dminus_dzero = 0;  // |<u>_D- - <u>_D0| vs |ln eps|^{1/2} |grad u|_Y
  double passage_l2 = 0;         // |u|_P^2 vs eps^{2a}(|u|^2_S + |grad u|^2_S + |grad u|^2_P)
  double map_mismatch = 0;       // |J f - J1 f|_mass vs eps^{min{1,a}} |f|_{H1_0}
};

LemmaRatios lemma_checks(const IdMaps& maps, const Mesh2D& mesh, int n_samples,
                         uint64_t seed);

struct DiscrepancyReport {
  double epsilon = 0;
  double norm_resolvent_defect = 0;
  double norm_resolvent_defect_dual = 0;
  double quasi_unitarity_defect = 0;
  LemmaRatios lemma_constants;
};

}  // namespace rpwg
