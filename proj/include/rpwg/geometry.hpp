#pragma once

#include "rpwg/core.hpp"

#include <array>
#include <map>

namespace rpwg {

/// Parameters of the room-and-passage family. The strip has height eps over
/// the interval (ell_minus, ell_plus); passage width/height and room side are
/// the derived scales d = gamma * eps^(alpha+1), h = eps^alpha, b = eps^beta.
struct GeometryParams {
  double eps = 0.1;
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 6.0;
  double gamma = 1.0;
  double ell_minus = -1.0;
  double ell_plus = 1.0;
};

struct DerivedScales {
  double d = 0;  // passage width
  double h = 0;  // passage height
  double b = 0;  // room side
  double eps_max = 0;  // smallest admissibility bound for this (alpha,beta,gamma,ells)
};

/// Checks the admissibility bounds
///   eps < min{(2 gamma)^(-1/alpha), |ell_minus|, ell_plus},
///   eps < gamma^(-1/(alpha+1-beta)),
///   eps < min{gamma, 1/gamma},
/// plus basic ranges (alpha > 0, 0 < beta < 1/2, gamma > 0, ell_minus < 0 < ell_plus,
/// finite interval only). Throws validation_error naming the violated bound.
DerivedScales validate_params(const GeometryParams& p);

enum class Region : std::uint8_t { Strip = 0, Passage = 1, Room = 2 };

enum class EdgeTag : std::uint8_t {
  Neumann,  // outer boundary
  DPlus,    // passage top trace (interior interface, y = h)
  DMinus,   // passage bottom trace (interior interface, y = 0)
  DZero,    // vertical strip trace at a passage center line
};

struct TaggedEdge {
  int a = 0, b = 0;
  EdgeTag tag = EdgeTag::Neumann;
};

struct MeshControl {
  double strip_h = 0;   // target strip element width; 0 = eps/8
  int n_d = 4;          // minimum elements across the passage width (even)
  int n_h = 4;          // minimum elements across the passage height
  double grading = 1.5; // geometric growth ratio of the corner fans
  double room_h = 0;    // target room element size; 0 = b/16
  int strip_layers = 0; // vertical strip subdivisions; 0 = auto (aspect-capped)
};

/// Conforming triangle mesh of the waveguide. Strip elements form a tensor grid
/// strip_x_lines x strip_y_lines so that column averages are exact per line.
struct Mesh2D {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> tris;      // CCW vertex indices
  std::vector<Region> region;                // per triangle
  std::vector<TaggedEdge> boundary_edges;    // outer boundary, tag Neumann
  std::vector<TaggedEdge> dplus_edges;       // interior trace y = h over passages
  std::vector<TaggedEdge> dminus_edges;      // interior trace y = 0 over passages
  std::vector<TaggedEdge> dzero_edges;       // vertical traces at passage centers
  std::vector<double> strip_x_lines;         // sorted strip column coordinates
  std::vector<double> strip_y_lines;         // sorted, from -eps to 0
  std::map<Region, double> h_by_region;      // max element diameter per region
  std::vector<double> sites;                 // passage center x-positions
  GeometryParams params;
  DerivedScales scales;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_tris() const { return static_cast<int>(tris.size()); }
};

/// Meshes the single-bump domain (one passage/room centered at x = 0).
Mesh2D build_mesh(const GeometryParams& p, const MeshControl& ctrl = {});

/// Meshes a waveguide with passage/room copies translated to the given
/// x-positions (used by the periodic truncations). Sites must be sorted and
/// separated by more than b + eps.
Mesh2D build_waveguide_mesh(const GeometryParams& p, const MeshControl& ctrl,
                            const std::vector<double>& sites);

/// Structured rectangle benchmark mesh (single region tag, all-Neumann).
Mesh2D build_rect_mesh(double x0, double y0, double lx, double ly, int nx, int ny);

/// Sum of signed element areas (exact assembly of |Omega|).
double mesh_area(const Mesh2D& mesh);

}  // namespace rpwg
