#include "rpwg/identification.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace rpwg {

double squeeze_map(double x, double eps, double d) {
  if (std::abs(x) >= eps / 2) return x;
  if (std::abs(x) <= d / 2) return 0.0;
  if (x > 0) return (2 * x - d) / (2 * (eps - d)) * eps;
  return (2 * x + d) / (2 * (eps - d)) * eps;
}

BrokenSpace build_broken_space(const Mesh2D& mesh) {
  BrokenSpace bs;
  bs.n_cont = mesh.n_nodes();
  std::array<std::unordered_map<int, int>, 3> local;
  for (int t = 0; t < mesh.n_tris(); ++t) {
    auto& map = local[static_cast<int>(mesh.region[t])];
    auto& list = bs.nodes[static_cast<int>(mesh.region[t])];
    for (int v : mesh.tris[t])
      if (map.emplace(v, static_cast<int>(list.size())).second) list.push_back(v);
  }
  bs.offset[0] = 0;
  bs.offset[1] = static_cast<int>(bs.nodes[0].size());
  bs.offset[2] = bs.offset[1] + static_cast<int>(bs.nodes[1].size());
  bs.dim = bs.offset[2] + static_cast<int>(bs.nodes[2].size());

  std::vector<Triplet> et;
  et.reserve(bs.dim);
  for (int r = 0; r < 3; ++r)
    for (std::size_t i = 0; i < bs.nodes[r].size(); ++i)
      et.emplace_back(bs.offset[r] + static_cast<int>(i), bs.nodes[r][i], 1.0);
  bs.E.resize(bs.dim, bs.n_cont);
  bs.E.setFromTriplets(et.begin(), et.end());

  std::vector<Triplet> mt;
  mt.reserve(mesh.n_tris() * 9);
  for (int t = 0; t < mesh.n_tris(); ++t) {
    int r = static_cast<int>(mesh.region[t]);
    ElementGeometry g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        mt.emplace_back(bs.offset[r] + local[r][g.v[i]],
                        bs.offset[r] + local[r][g.v[j]],
                        g.area / 12.0 * (i == j ? 2.0 : 1.0));
  }
  bs.M_b.resize(bs.dim, bs.dim);
  bs.M_b.setFromTriplets(mt.begin(), mt.end());
  return bs;
}

namespace {

int find_grid_dof(const std::vector<double>& grid, double x, double tol) {
  auto it = std::lower_bound(grid.begin(), grid.end(), x - tol);
  if (it == grid.end() || std::abs(*it - x) > tol)
    throw numerical_error("identification: coordinate is not an interval dof");
  return static_cast<int>(it - grid.begin());
}

int nearest_site(const std::vector<double>& sites, double x) {
  int best = 0;
  for (std::size_t i = 1; i < sites.size(); ++i)
    if (std::abs(sites[i] - x) < std::abs(sites[best] - x)) best = static_cast<int>(i);
  return best;
}

}  // namespace

Vec IdMaps::m0_solve(const Vec& rhs) const { return m0->solve(rhs); }

Vec IdMaps::apply_Jt(const Vec& u_cont) const { return m0->solve(Jt_load * u_cont); }

Vec IdMaps::apply_Jt_broken(const Vec& u_broken) const {
  return m0->solve(J.transpose() * (broken.M_b * u_broken));
}

IdMaps build_maps(const Mesh2D& mesh, const PotentialSpec& V) {
  if (mesh.strip_x_lines.empty() || mesh.strip_y_lines.size() < 2)
    throw validation_error("build_maps: mesh has no tensor strip structure");
  IdMaps m;
  m.broken = build_broken_space(mesh);
  m.grid = mesh.strip_x_lines;
  m.n1d = static_cast<int>(m.grid.size());
  m.sites = mesh.sites;
  m.n_rooms = static_cast<int>(m.sites.size());
  m.eps = mesh.strip_y_lines.back() - mesh.strip_y_lines.front();
  m.d = mesh.scales.d;
  m.h = mesh.scales.h;
  m.b = mesh.scales.b;
  const double gamma = mesh.params.gamma;
  const int n0 = m.n1d + m.n_rooms;

  // Limit pair: interval form with one delta coupling per site, plus the
  // zero-operator scalar block (identity mass, no stiffness).
  DiscreteOperatorPair base = assemble_1d(m.grid, V, 0.0);
  const double coord_tol = 1e-12 * (1 + std::abs(m.grid.front()) + std::abs(m.grid.back()));
  for (double s : m.sites) {
    int i = find_grid_dof(m.grid, s, coord_tol);
    m.site_dof.push_back(i);
    base.K.coeffRef(i, i) += gamma;
  }
  {
    std::vector<Triplet> kt, mt;
    for (int k = 0; k < base.K.outerSize(); ++k)
      for (SpMat::InnerIterator it(base.K, k); it; ++it)
        kt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int k = 0; k < base.M.outerSize(); ++k)
      for (SpMat::InnerIterator it(base.M, k); it; ++it)
        mt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int r = 0; r < m.n_rooms; ++r) mt.emplace_back(m.n1d + r, m.n1d + r, 1.0);
    m.pair0.K.resize(n0, n0);
    m.pair0.K.setFromTriplets(kt.begin(), kt.end());
    m.pair0.M.resize(n0, n0);
    m.pair0.M.setFromTriplets(mt.begin(), mt.end());
    m.pair0.dim = n0;
    m.pair0.space_tag = SpaceTag::H0;
  }

  std::unordered_map<double, int> x_dof;
  x_dof.reserve(m.grid.size());
  for (int i = 0; i < m.n1d; ++i) x_dof.emplace(m.grid[i], i);

  const double root_eps = std::sqrt(m.eps);
  std::vector<Triplet> jt, j1t;
  // Strip block: the injected interval function, constant in the vertical.
  for (std::size_t l = 0; l < m.broken.nodes[0].size(); ++l) {
    int node = m.broken.nodes[0][l];
    int row = m.broken.offset[0] + static_cast<int>(l);
    auto hit = x_dof.find(mesh.nodes[node][0]);
    if (hit == x_dof.end())
      throw numerical_error("build_maps: strip node off the x-line grid");
    int i = hit->second;
    jt.emplace_back(row, i, 1.0 / root_eps);

    double x = m.grid[i];
    if (m.sites.empty()) {
      j1t.emplace_back(row, i, 1.0 / root_eps);
      continue;
    }
    int si = nearest_site(m.sites, x);
    double xi = x - m.sites[si];
    if (std::abs(xi) >= m.eps / 2 - coord_tol) {
      j1t.emplace_back(row, i, 1.0 / root_eps);  // squeeze map is the identity here
    } else if (std::abs(xi) <= m.d / 2 + coord_tol) {
      j1t.emplace_back(row, m.site_dof[si], 1.0 / root_eps);
    } else {
      double xp = m.sites[si] + squeeze_map(xi, m.eps, m.d);
      auto up = std::upper_bound(m.grid.begin(), m.grid.end(), xp);
      int hi = std::clamp<int>(static_cast<int>(up - m.grid.begin()), 1, m.n1d - 1);
      int lo = hi - 1;
      double w_hi = (xp - m.grid[lo]) / (m.grid[hi] - m.grid[lo]);
      w_hi = std::clamp(w_hi, 0.0, 1.0);
      if (w_hi > 0) j1t.emplace_back(row, hi, w_hi / root_eps);
      if (w_hi < 1) j1t.emplace_back(row, lo, (1 - w_hi) / root_eps);
    }
  }
  // Passage block: J vanishes; J1 blends the two sides linearly in x2.
  for (std::size_t l = 0; l < m.broken.nodes[1].size(); ++l) {
    int node = m.broken.nodes[1][l];
    int row = m.broken.offset[1] + static_cast<int>(l);
    int si = nearest_site(m.sites, mesh.nodes[node][0]);
    double t = std::clamp(mesh.nodes[node][1] / m.h, 0.0, 1.0);
    if (t < 1) j1t.emplace_back(row, m.site_dof[si], (1 - t) / root_eps);
    if (t > 0) j1t.emplace_back(row, m.n1d + si, t / m.b);
  }
  // Room block: the scaled scalar dof.
  for (std::size_t l = 0; l < m.broken.nodes[2].size(); ++l) {
    int node = m.broken.nodes[2][l];
    int row = m.broken.offset[2] + static_cast<int>(l);
    int si = nearest_site(m.sites, mesh.nodes[node][0]);
    jt.emplace_back(row, m.n1d + si, 1.0 / m.b);
    j1t.emplace_back(row, m.n1d + si, 1.0 / m.b);
  }
  m.J.resize(m.broken.dim, n0);
  m.J.setFromTriplets(jt.begin(), jt.end());
  m.J1.resize(m.broken.dim, n0);
  m.J1.setFromTriplets(j1t.begin(), j1t.end());

  SpMat mbe = m.broken.M_b * m.broken.E;
  m.Jt_load = SpMat(m.J.transpose() * mbe).pruned();
  m.m0 = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  m.m0->compute(m.pair0.M);
  if (m.m0->info() != Eigen::Success)
    throw numerical_error("build_maps: limit mass factorization failed");
  return m;
}

namespace {

struct DefectContext {
  const IdMaps& maps;
  ResolventHandle R2;   // waveguide resolvent, solves (K+M)x = load
  ResolventHandle R0;   // limit resolvent
  SpMat Q;              // E^T M_b J, limit dofs -> continuous load vectors

  DefectContext(const IdMaps& m, const DiscreteOperatorPair& pair2d,
                const DiscreteOperatorPair& pair0)
      : maps(m), R2(pair2d), R0(pair0) {
    if (pair2d.dim != m.broken.n_cont)
      throw validation_error("resolvent defect: operator pair does not match the mesh");
    Q = maps.Jt_load.transpose();
  }
};

}  // namespace

double resolvent_defect(const IdMaps& maps, const DiscreteOperatorPair& pair2d,
                        const DiscreteOperatorPair& pair0, const OpNormOptions& opts) {
  DefectContext c(maps, pair2d, pair0);
  LinearMap L;
  L.cols = pair0.dim;
  L.rows = maps.broken.dim;
  L.apply = [&](const Vec& f) {
    Vec through_2d = maps.broken.E * c.R2.solve_load(c.Q * f);
    Vec through_0 = maps.J * c.R0.apply(f);
    return Vec(through_2d - through_0);
  };
  L.apply_t = [&](const Vec& y) {
    Vec t1 = c.Q.transpose() * c.R2.solve_load(maps.broken.E.transpose() * y);
    Vec t2 = pair0.M * c.R0.solve_load(maps.J.transpose() * y);
    return Vec(t1 - t2);
  };
  OpNormResult r = op_norm(L, pair0.M, maps.broken.M_b, opts);
  if (!r.converged)
    throw numerical_error("resolvent_defect: operator norm iteration did not converge");
  return r.value;
}

double resolvent_defect_dual(const IdMaps& maps, const DiscreteOperatorPair& pair2d,
                             const DiscreteOperatorPair& pair0,
                             const OpNormOptions& opts) {
  DefectContext c(maps, pair2d, pair0);
  const SpMat& Mb = maps.broken.M_b;
  LinearMap L;
  L.cols = maps.broken.dim;
  L.rows = pair0.dim;
  L.apply = [&](const Vec& v) {
    Vec data = Mb * v;
    Vec t1 = maps.m0_solve(c.Q.transpose() *
                           c.R2.solve_load(maps.broken.E.transpose() * data));
    Vec t2 = c.R0.solve_load(maps.J.transpose() * data);
    return Vec(t1 - t2);
  };
  L.apply_t = [&](const Vec& g) {
    Vec t1 = Mb * (maps.broken.E * c.R2.solve_load(c.Q * maps.m0_solve(g)));
    Vec t2 = Mb * (maps.J * c.R0.solve_load(g));
    return Vec(t1 - t2);
  };
  OpNormResult r = op_norm(L, maps.broken.M_b, pair0.M, opts);
  if (!r.converged)
    throw numerical_error("resolvent_defect_dual: operator norm iteration did not converge");
  return r.value;
}

double quasi_unitarity_defect(const IdMaps& maps, const DiscreteOperatorPair& pair2d,
                              const OpNormOptions& opts) {
  if (pair2d.dim != maps.broken.n_cont)
    throw validation_error("quasi_unitarity_defect: operator pair does not match the mesh");
  SpMat G = pair2d.K + pair2d.M;
  LinearMap L;
  L.cols = pair2d.dim;
  L.rows = maps.broken.dim;
  L.apply = [&](const Vec& u) {
    Vec ju = maps.J * maps.m0_solve(maps.Jt_load * u);
    return Vec(maps.broken.E * u - ju);
  };
  L.apply_t = [&](const Vec& y) {
    Vec t = maps.Jt_load.transpose() * maps.m0_solve(maps.J.transpose() * y);
    return Vec(maps.broken.E.transpose() * y - t);
  };
  OpNormResult r = op_norm(L, G, maps.broken.M_b, opts);
  if (!r.converged)
    throw numerical_error("quasi_unitarity_defect: operator norm iteration did not converge");
  return r.value;
}

namespace {

struct MeanFunctional {
  Vec w;          // nodal weights; w.dot(u) is the mean of u over the set
  double measure = 0;
};

MeanFunctional edge_mean(const Mesh2D& mesh, const std::vector<TaggedEdge>& edges,
                         double x_center, double x_halfwidth) {
  MeanFunctional f;
  f.w = Vec::Zero(mesh.n_nodes());
  for (const auto& e : edges) {
    double xa = mesh.nodes[e.a][0], xb = mesh.nodes[e.b][0];
    if (std::abs(xa - x_center) > x_halfwidth || std::abs(xb - x_center) > x_halfwidth)
      continue;
    double len = std::hypot(xb - xa, mesh.nodes[e.b][1] - mesh.nodes[e.a][1]);
    f.w[e.a] += len / 2;
    f.w[e.b] += len / 2;
    f.measure += len;
  }
  if (f.measure <= 0) throw numerical_error("lemma_checks: empty trace set");
  f.w /= f.measure;
  return f;
}

MeanFunctional element_mean(const Mesh2D& mesh, const std::vector<int>& tris) {
  MeanFunctional f;
  f.w = Vec::Zero(mesh.n_nodes());
  for (int t : tris) {
    ElementGeometry g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i) f.w[g.v[i]] += g.area / 3;
    f.measure += g.area;
  }
  if (f.measure <= 0) throw numerical_error("lemma_checks: empty element set");
  f.w /= f.measure;
  return f;
}

void accumulate_forms(const Mesh2D& mesh, const std::vector<int>& tris,
                      std::vector<Triplet>& kt, std::vector<Triplet>* mt) {
  for (int t : tris) {
    ElementGeometry g = element_geometry(mesh, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        kt.emplace_back(g.v[i], g.v[j],
                        g.area * (g.gx[i] * g.gx[j] + g.gy[i] * g.gy[j]));
        if (mt)
          mt->emplace_back(g.v[i], g.v[j], g.area / 12.0 * (i == j ? 2.0 : 1.0));
      }
  }
}

SpMat from_triplets(int n, const std::vector<Triplet>& t) {
  SpMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

}  // namespace

LemmaRatios lemma_checks(const IdMaps& maps, const Mesh2D& mesh, int n_samples,
                         uint64_t seed) {
  if (maps.sites.empty())
    throw validation_error("lemma_checks: mesh has no passage/room decoration");
  const double s = maps.sites[0];
  const double eps = maps.eps, d = maps.d, h = maps.h, b = maps.b;
  const double alpha = mesh.params.alpha;
  const int n = mesh.n_nodes();
  const double tol = 1e-12 * (1 + std::abs(s));

  std::vector<int> room_tris, y_tris, strip_tris, passage_tris;
  for (int t = 0; t < mesh.n_tris(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    switch (mesh.region[t]) {
      case Region::Strip:
        strip_tris.push_back(t);
        if (std::abs(g.cx - s) < eps / 2) y_tris.push_back(t);
        break;
      case Region::Passage:
        if (std::abs(g.cx - s) < d) passage_tris.push_back(t);
        break;
      case Region::Room:
        if (std::abs(g.cx - s) < b) room_tris.push_back(t);
        break;
    }
  }

  MeanFunctional m_dplus = edge_mean(mesh, mesh.dplus_edges, s, d / 2 + tol);
  MeanFunctional m_dminus = edge_mean(mesh, mesh.dminus_edges, s, d / 2 + tol);
  MeanFunctional m_dzero = edge_mean(mesh, mesh.dzero_edges, s, tol);
  MeanFunctional m_room = element_mean(mesh, room_tris);
  MeanFunctional m_y = element_mean(mesh, y_tris);

  std::vector<Triplet> k_room_t, k_y_t, k_strip_t, m_strip_t, k_pass_t, m_pass_t;
  accumulate_forms(mesh, room_tris, k_room_t, nullptr);
  accumulate_forms(mesh, y_tris, k_y_t, nullptr);
  accumulate_forms(mesh, strip_tris, k_strip_t, &m_strip_t);
  accumulate_forms(mesh, passage_tris, k_pass_t, &m_pass_t);
  SpMat K_room = from_triplets(n, k_room_t), K_y = from_triplets(n, k_y_t);
  SpMat K_strip = from_triplets(n, k_strip_t), M_strip = from_triplets(n, m_strip_t);
  SpMat K_pass = from_triplets(n, k_pass_t), M_pass = from_triplets(n, m_pass_t);

  // Candidate pool: raw noise, resolvent-smoothed noise, and crafted
  // near-worst cases (log spikes at the passage corners, the room charge).
  DiscreteOperatorPair pair2d = assemble_2d(mesh, PotentialSpec::none());
  ResolventHandle smooth(pair2d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;

  std::vector<Vec> candidates;
  auto corner_spike = [&](double cx, double cy) {
    Vec u(n);
    for (int i = 0; i < n; ++i)
      u[i] = std::log(d / 2 + std::hypot(mesh.nodes[i][0] - cx, mesh.nodes[i][1] - cy));
    return u;
  };
  candidates.push_back(corner_spike(s - d / 2, h));
  candidates.push_back(corner_spike(s + d / 2, h));
  candidates.push_back(corner_spike(s - d / 2, 0));
  candidates.push_back(corner_spike(s + d / 2, 0));
  {
    Vec u(n);  // room charge: 1 on the room, vertical ramp in the passage
    for (int i = 0; i < n; ++i) {
      double y = mesh.nodes[i][1];
      u[i] = y >= h ? 1.0 : (y > 0 ? y / h : 0.0);
    }
    candidates.push_back(u);
    Vec vx(n), vy(n);
    for (int i = 0; i < n; ++i) {
      vx[i] = mesh.nodes[i][0] - s;
      vy[i] = mesh.nodes[i][1];
    }
    candidates.push_back(vx);
    candidates.push_back(vy);
  }
  for (int it = 0; it < n_samples; ++it) {
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = nd(rng);
    candidates.push_back(it % 2 ? Vec(smooth.apply(u)) : u);
  }

  const double ln_eps = std::sqrt(std::abs(std::log(eps)));
  LemmaRatios out;
  auto quad = [](const SpMat& A, const Vec& u) { return u.dot(A * u); };
  for (const Vec& u : candidates) {
    double g_room = std::sqrt(std::max(0.0, quad(K_room, u)));
    double g_y = std::sqrt(std::max(0.0, quad(K_y, u)));
    if (g_room > 1e-13) {
      double lhs = std::abs(m_dplus.w.dot(u) - m_room.w.dot(u));
      out.mean_dplus_room = std::max(out.mean_dplus_room, lhs / (ln_eps * g_room));
    }
    if (g_y > 1e-13) {
      double lhs2 = std::abs(m_dminus.w.dot(u) - m_y.w.dot(u));
      double lhs3 = std::abs(m_dminus.w.dot(u) - m_dzero.w.dot(u));
      out.mean_dminus_below = std::max(out.mean_dminus_below, lhs2 / (ln_eps * g_y));
      out.mean_dminus_dzero = std::max(out.mean_dminus_dzero, lhs3 / (ln_eps * g_y));
    }
    double rhs4 = quad(M_strip, u) + quad(K_strip, u) + quad(K_pass, u);
    if (rhs4 > 1e-13) {
      double lhs4 = quad(M_pass, u);
      out.passage_l2 =
          std::max(out.passage_l2, lhs4 / (std::pow(eps, 2 * alpha) * rhs4));
    }
  }

  // The map-mismatch constant is an exact extremal problem, not a sample sup:
  // largest singular value of J - J1 from the limit H1 norm to the broken mass.
  SpMat diff = maps.J - maps.J1;
  SpMat G0 = maps.pair0.K + maps.pair0.M;
  OpNormResult r = op_norm(LinearMap::from_sparse(diff), G0, maps.broken.M_b, {});
  if (!r.converged)
    throw numerical_error("lemma_checks: map mismatch norm did not converge");
  out.map_mismatch = r.value / std::pow(eps, std::min(1.0, alpha));
  return out;
}

}  // namespace rpwg
