#include "rpwg/fem.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>

namespace rpwg {

PotentialSpec PotentialSpec::constant(double c) {
  if (c < 0) throw validation_error("PotentialSpec: potential must be nonnegative");
  if (c == 0) return none();
  return {[c](double) { return c; }, false};
}

PotentialSpec PotentialSpec::of(std::function<double(double)> f) {
  if (!f) return none();
  return {std::move(f), false};
}

namespace {

struct ElementMats {
  double K[3][3];
  double M[3][3];
  double centroid_x;
  double area;
};

ElementMats p1_element(const Mesh2D& mesh, int t) {
  const auto& a = mesh.nodes[mesh.tris[t][0]];
  const auto& b = mesh.nodes[mesh.tris[t][1]];
  const auto& c = mesh.nodes[mesh.tris[t][2]];
  double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  double area = 0.5 * det;
  assert(area > 0);
  // Gradient of the barycentric basis: grad l_i = perp(edge opposite i) / det.
  double gx[3] = {(b[1] - c[1]) / det, (c[1] - a[1]) / det, (a[1] - b[1]) / det};
  double gy[3] = {(c[0] - b[0]) / det, (a[0] - c[0]) / det, (b[0] - a[0]) / det};
  ElementMats e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      e.K[i][j] = area * (gx[i] * gx[j] + gy[i] * gy[j]);
      e.M[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
    }
  e.centroid_x = (a[0] + b[0] + c[0]) / 3.0;
  e.area = area;
  return e;
}

DiscreteOperatorPair assemble_elements(const Mesh2D& mesh,
                                       const std::vector<int>& elements,
                                       const PotentialSpec& V,
                                       const std::set<int>& dirichlet_nodes) {
  // Collect dofs: nodes of the selected elements minus constrained ones.
  std::set<int> used;
  for (int t : elements)
    for (int v : mesh.tris[t]) used.insert(v);
  std::vector<int> dof_to_node;
  std::vector<int> node_to_dof(mesh.n_nodes(), -1);
  for (int v : used) {
    if (dirichlet_nodes.count(v)) continue;
    node_to_dof[v] = static_cast<int>(dof_to_node.size());
    dof_to_node.push_back(v);
  }
  const int n = static_cast<int>(dof_to_node.size());

  std::vector<Triplet> kt, mt;
  kt.reserve(elements.size() * 9);
  mt.reserve(elements.size() * 9);
  for (int t : elements) {
    ElementMats e = p1_element(mesh, t);
    double v_val = 0;
    if (!V.zero && mesh.region[t] == Region::Strip) v_val = V(e.centroid_x);
    if (v_val < 0) throw validation_error("assemble_2d: potential must be nonnegative");
    for (int i = 0; i < 3; ++i) {
      int gi = node_to_dof[mesh.tris[t][i]];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        int gj = node_to_dof[mesh.tris[t][j]];
        if (gj < 0) continue;
        kt.emplace_back(gi, gj, e.K[i][j] + v_val * e.M[i][j]);
        mt.emplace_back(gi, gj, e.M[i][j]);
      }
    }
  }
  DiscreteOperatorPair pair;
  pair.dim = n;
  pair.space_tag = SpaceTag::HEps;
  pair.K.resize(n, n);
  pair.M.resize(n, n);
  pair.K.setFromTriplets(kt.begin(), kt.end());
  pair.M.setFromTriplets(mt.begin(), mt.end());
  pair.dof_to_node = std::move(dof_to_node);
  return pair;
}

}  // namespace

DiscreteOperatorPair assemble_2d(const Mesh2D& mesh, const PotentialSpec& V,
                                 BoundaryCondition bc) {
  std::vector<int> elements;
  std::set<int> dirichlet;
  if (bc == BoundaryCondition::AllNeumann) {
    elements.resize(mesh.n_tris());
    for (int t = 0; t < mesh.n_tris(); ++t) elements[t] = t;
    DiscreteOperatorPair pair = assemble_elements(mesh, elements, V, dirichlet);
    // With no constraints the dof order is the node order.
    for (int i = 0; i < pair.dim; ++i)
      if (pair.dof_to_node[i] != i)
        throw numerical_error("assemble_2d: disconnected nodes in mesh");
    return pair;
  }
  for (int t = 0; t < mesh.n_tris(); ++t)
    if (mesh.region[t] != Region::Room) elements.push_back(t);
  for (const auto& e : mesh.dplus_edges) {
    dirichlet.insert(e.a);
    dirichlet.insert(e.b);
  }
  return assemble_elements(mesh, elements, V, dirichlet);
}

DiscreteOperatorPair assemble_region_neumann(const Mesh2D& mesh, Region region) {
  std::vector<int> elements;
  for (int t = 0; t < mesh.n_tris(); ++t)
    if (mesh.region[t] == region) elements.push_back(t);
  if (elements.empty()) throw validation_error("assemble_region_neumann: empty region");
  return assemble_elements(mesh, elements, PotentialSpec::none(), {});
}

DiscreteOperatorPair assemble_1d(const std::vector<double>& grid,
                                 const PotentialSpec& V, double gamma,
                                 double delta_pos) {
  const int n = static_cast<int>(grid.size());
  if (n < 2) throw validation_error("assemble_1d: need at least two grid points");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw validation_error("assemble_1d: grid must be sorted");

  std::vector<Triplet> kt, mt;
  for (int i = 0; i + 1 < n; ++i) {
    double h = grid[i + 1] - grid[i];
    if (h <= 0) throw validation_error("assemble_1d: duplicate grid points");
    double v_val = V.zero ? 0.0 : V(0.5 * (grid[i] + grid[i + 1]));
    if (v_val < 0) throw validation_error("assemble_1d: potential must be nonnegative");
    double k = 1.0 / h;
    double m_diag = h / 3.0, m_off = h / 6.0;
    kt.emplace_back(i, i, k + v_val * m_diag);
    kt.emplace_back(i + 1, i + 1, k + v_val * m_diag);
    kt.emplace_back(i, i + 1, -k + v_val * m_off);
    kt.emplace_back(i + 1, i, -k + v_val * m_off);
    mt.emplace_back(i, i, m_diag);
    mt.emplace_back(i + 1, i + 1, m_diag);
    mt.emplace_back(i, i + 1, m_off);
    mt.emplace_back(i + 1, i, m_off);
  }
  if (gamma != 0.0) {
    auto it = std::lower_bound(grid.begin(), grid.end(), delta_pos);
    if (it == grid.end() || *it != delta_pos)
      throw validation_error("assemble_1d: delta position must be a grid node");
    int i0 = static_cast<int>(it - grid.begin());
    kt.emplace_back(i0, i0, gamma);
  }
  DiscreteOperatorPair pair;
  pair.dim = n;
  pair.space_tag = SpaceTag::H0;
  pair.K.resize(n, n);
  pair.M.resize(n, n);
  pair.K.setFromTriplets(kt.begin(), kt.end());
  pair.M.setFromTriplets(mt.begin(), mt.end());
  pair.dof_to_node.resize(n);
  for (int i = 0; i < n; ++i) pair.dof_to_node[i] = i;
  return pair;
}

double integral_fg_1d(const std::vector<double>& grid, const Vec& f, const Vec& g) {
  double s = 0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    double h = grid[i + 1] - grid[i];
    s += h / 6.0 * (2 * f[i] * g[i] + f[i] * g[i + 1] + f[i + 1] * g[i] +
                    2 * f[i + 1] * g[i + 1]);
  }
  return s;
}

double integral_dfdg_1d(const std::vector<double>& grid, const Vec& f, const Vec& g) {
  double s = 0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    double h = grid[i + 1] - grid[i];
    s += (f[i + 1] - f[i]) * (g[i + 1] - g[i]) / h;
  }
  return s;
}

InequalityCheck check_sobolev_1d(const std::vector<double>& grid, const Vec& f) {
  InequalityCheck c;
  double len = grid.back() - grid.front();
  c.lhs = f.cwiseAbs().maxCoeff();
  c.lhs *= c.lhs;
  c.rhs = (1.0 / std::tanh(len / 2)) *
          (integral_dfdg_1d(grid, f, f) + integral_fg_1d(grid, f, f));
  c.holds = c.lhs <= c.rhs * (1 + 1e-12);
  c.ratio = c.rhs > 0 ? c.lhs / c.rhs : 0;
  return c;
}

InequalityCheck check_poincare_dirichlet(const std::vector<double>& grid, const Vec& f) {
  double end_tol = 1e-12 * (1.0 + f.cwiseAbs().maxCoeff());
  if (std::abs(f[0]) > end_tol || std::abs(f[f.size() - 1]) > end_tol)
    throw validation_error("check_poincare_dirichlet: f must vanish at both ends");
  InequalityCheck c;
  double len = grid.back() - grid.front();
  c.lhs = integral_fg_1d(grid, f, f);
  c.rhs = (len * len / (M_PI * M_PI)) * integral_dfdg_1d(grid, f, f);
  c.holds = c.lhs <= c.rhs * (1 + 1e-12);
  c.ratio = c.rhs > 0 ? c.lhs / c.rhs : 0;
  return c;
}

InequalityCheck check_poincare_mean(const std::vector<double>& grid, const Vec& u) {
  InequalityCheck c;
  double len = grid.back() - grid.front();
  Vec ones = Vec::Ones(u.size());
  double mean = integral_fg_1d(grid, u, ones) / len;
  c.lhs = integral_fg_1d(grid, u, u);
  c.rhs = len * mean * mean +
          (len * len / (M_PI * M_PI)) * integral_dfdg_1d(grid, u, u);
  c.holds = c.lhs <= c.rhs * (1 + 1e-12);
  c.ratio = c.rhs > 0 ? c.lhs / c.rhs : 0;
  return c;
}

ElementGeometry element_geometry(const Mesh2D& mesh, int t) {
  const auto& a = mesh.nodes[mesh.tris[t][0]];
  const auto& b = mesh.nodes[mesh.tris[t][1]];
  const auto& c = mesh.nodes[mesh.tris[t][2]];
  double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  ElementGeometry g;
  g.v = {mesh.tris[t][0], mesh.tris[t][1], mesh.tris[t][2]};
  g.area = 0.5 * det;
  g.cx = (a[0] + b[0] + c[0]) / 3.0;
  g.cy = (a[1] + b[1] + c[1]) / 3.0;
  g.gx = {(b[1] - c[1]) / det, (c[1] - a[1]) / det, (a[1] - b[1]) / det};
  g.gy = {(c[0] - b[0]) / det, (a[0] - c[0]) / det, (b[0] - a[0]) / det};
  return g;
}

InequalityCheck check_poincare_mean_room(const Mesh2D& mesh, const Vec& u) {
  if (u.size() != mesh.n_nodes())
    throw validation_error("check_poincare_mean_room: nodal vector size mismatch");
  double b = mesh.scales.b;
  double mass = 0, mean_num = 0, l2 = 0, h1 = 0;
  for (int t = 0; t < mesh.n_tris(); ++t) {
    if (mesh.region[t] != Region::Room) continue;
    ElementMats e = p1_element(mesh, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double ui = u[mesh.tris[t][i]], uj = u[mesh.tris[t][j]];
        l2 += e.M[i][j] * ui * uj;
        h1 += e.K[i][j] * ui * uj;
        mean_num += e.M[i][j] * ui;
      }
    mass += e.area;
  }
  if (mass <= 0) throw validation_error("check_poincare_mean_room: no room elements");
  double mean = mean_num / mass;
  InequalityCheck c;
  c.lhs = l2;
  c.rhs = mass * mean * mean + (b * b / (M_PI * M_PI)) * h1;
  c.holds = c.lhs <= c.rhs * (1 + 1e-12);
  c.ratio = c.rhs > 0 ? c.lhs / c.rhs : 0;
  return c;
}

}  // namespace rpwg
