#include "doctest.h"

#include "rpwg/fem.hpp"
#include "rpwg/geometry.hpp"
#include "rpwg/identification.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

using namespace rpwg;

namespace {

struct Lab {
  GeometryParams p;
  Mesh2D mesh;
  IdMaps maps;
  DiscreteOperatorPair pair2d;
};

Lab make_lab(double eps, double alpha, double beta, double gamma,
             const MeshControl& ctrl, const PotentialSpec& V = PotentialSpec::none()) {
  Lab lab;
  lab.p.eps = eps;
  lab.p.alpha = alpha;
  lab.p.beta = beta;
  lab.p.gamma = gamma;
  lab.mesh = build_mesh(lab.p, ctrl);
  lab.maps = build_maps(lab.mesh, V);
  lab.pair2d = assemble_2d(lab.mesh, V);
  return lab;
}

MeshControl coarse_ctrl(double eps, double b) {
  MeshControl c;
  c.strip_h = eps / 4;
  c.room_h = b / 6;
  return c;
}

Vec random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("identification");

TEST_CASE("squeeze map values and shape") {
  CHECK(squeeze_map(0.03, 0.1, 0.01) == doctest::Approx(0.05 / 0.18 * 0.1).epsilon(1e-14));
  CHECK(squeeze_map(0.004, 0.1, 0.01) == 0.0);
  CHECK(squeeze_map(-0.004, 0.1, 0.01) == 0.0);
  CHECK(squeeze_map(0.06, 0.1, 0.01) == 0.06);
  CHECK(squeeze_map(-0.2, 0.1, 0.01) == -0.2);

  // Continuity at both breakpoints and oddness.
  CHECK(squeeze_map(0.005, 0.1, 0.01) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(squeeze_map(0.05, 0.1, 0.01) == doctest::Approx(0.05).epsilon(1e-14));
  for (double x : {0.003, 0.012, 0.031, 0.047, 0.08})
    CHECK(squeeze_map(-x, 0.1, 0.01) == doctest::Approx(-squeeze_map(x, 0.1, 0.01)).epsilon(1e-15));

  // Middle piece slope lies in [1, 2] for admissible d <= eps/2.
  for (double d : {0.01, 0.03, 0.05}) {
    double lo = d / 2, hi = 0.05;
    double slope = (squeeze_map(hi, 0.1, d) - squeeze_map(lo, 0.1, d)) / (hi - lo);
    CHECK(slope >= 1.0 - 1e-12);
    CHECK(slope <= 2.0 + 1e-12);
    // Monotone on a fine grid.
    double prev = squeeze_map(-0.08, 0.1, d);
    for (int i = 1; i <= 400; ++i) {
      double cur = squeeze_map(-0.08 + 0.16 * i / 400, 0.1, d);
      CHECK(cur >= prev - 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("broken space carries the conforming mass") {
  Lab lab = make_lab(0.1, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(0.1, 0.6813));
  const BrokenSpace& bs = lab.maps.broken;
  CHECK(bs.n_cont == lab.mesh.n_nodes());
  CHECK(bs.dim >= bs.n_cont);
  CHECK(bs.dim == static_cast<int>(bs.nodes[0].size() + bs.nodes[1].size() + bs.nodes[2].size()));

  SpMat back = SpMat(bs.E.transpose() * (bs.M_b * bs.E)) - lab.pair2d.M;
  CHECK(back.norm() <= 1e-12 * lab.pair2d.M.norm());

  // E has exactly one unit entry per broken dof.
  CHECK(bs.E.nonZeros() == bs.dim);
  for (int k = 0; k < bs.E.outerSize(); ++k)
    for (SpMat::InnerIterator it(bs.E, k); it; ++it) CHECK(it.value() == 1.0);
}

TEST_CASE("transplantation is an exact mass isometry") {
  Lab lab = make_lab(0.1, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(0.1, 0.6813));
  const IdMaps& m = lab.maps;
  const int n0 = m.pair0.dim;
  REQUIRE(n0 == m.n1d + m.n_rooms);
  REQUIRE(m.n_rooms == 1);

  SpMat gram = SpMat(m.J.transpose() * (m.broken.M_b * m.J)) - m.pair0.M;
  CHECK(gram.norm() <= 1e-12 * m.pair0.M.norm());

  std::mt19937_64 rng(90210u);
  for (int trial = 0; trial < 50; ++trial) {
    Vec f = random_vec(rng, n0);
    Vec round_trip = m.apply_Jt_broken(m.J * f);
    CHECK((round_trip - f).norm() <= 1e-10 * f.norm());
  }

  // Interval ones plus a room value b: squared mass is length + b^2.
  Vec f = Vec::Ones(n0);
  f[m.n1d] = m.b;
  Vec jf = m.J * f;
  double sq = jf.dot(m.broken.M_b * jf);
  double L = m.grid.back() - m.grid.front();
  CHECK(sq == doctest::Approx(L + m.b * m.b).epsilon(1e-10));
}

TEST_CASE("Jt is the mass adjoint of J") {
  Lab lab = make_lab(0.08, 0.5, 0.25, 1.5, coarse_ctrl(0.08, std::pow(0.08, 0.25)));
  const IdMaps& m = lab.maps;
  std::mt19937_64 rng(777u);
  for (int trial = 0; trial < 30; ++trial) {
    Vec f = random_vec(rng, m.pair0.dim);
    Vec u = random_vec(rng, m.broken.n_cont);
    double lhs = (m.J * f).dot(m.broken.M_b * (m.broken.E * u));
    double rhs = f.dot(m.pair0.M * m.apply_Jt(u));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }

  // Jt of the all-ones field: root-eps on the interval, b on the room.
  Vec jt1 = m.apply_Jt(Vec::Ones(m.broken.n_cont));
  for (int i = 0; i < m.n1d; ++i)
    CHECK(jt1[i] == doctest::Approx(std::sqrt(m.eps)).epsilon(1e-10));
  CHECK(jt1[m.n1d] == doctest::Approx(m.b).epsilon(1e-10));
}

TEST_CASE("form-compatible variant is conforming and flat across the passage") {
  Lab lab = make_lab(0.1, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(0.1, 0.6813));
  const IdMaps& m = lab.maps;
  std::mt19937_64 rng(4242u);
  Vec f = random_vec(rng, m.pair0.dim);
  Vec v = m.J1 * f;

  // Duplicated interface nodes must agree: J1 lands in the conforming space.
  std::map<int, double> seen;
  double scale = v.cwiseAbs().maxCoeff();
  for (int r = 0; r < 3; ++r)
    for (std::size_t l = 0; l < m.broken.nodes[r].size(); ++l) {
      int node = m.broken.nodes[r][l];
      double val = v[m.broken.offset[r] + static_cast<int>(l)];
      auto [it, fresh] = seen.emplace(node, val);
      if (!fresh) CHECK(std::abs(it->second - val) <= 1e-12 * scale);
    }

  // Zero horizontal gradient on every passage element.
  std::map<int, int> passage_local;
  for (std::size_t l = 0; l < m.broken.nodes[1].size(); ++l)
    passage_local[m.broken.nodes[1][l]] = static_cast<int>(l);
  int checked = 0;
  for (int t = 0; t < lab.mesh.n_tris(); ++t) {
    if (lab.mesh.region[t] != Region::Passage) continue;
    ElementGeometry g = element_geometry(lab.mesh, t);
    double dx = 0;
    for (int i = 0; i < 3; ++i)
      dx += g.gx[i] * v[m.broken.offset[1] + passage_local.at(g.v[i])];
    CHECK(std::abs(dx) <= 1e-9 * scale / m.d);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("the two injections agree away from the squeeze window") {
  Lab lab = make_lab(0.1, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(0.1, 0.6813));
  const IdMaps& m = lab.maps;
  double spacing = 0;
  for (std::size_t i = 1; i < m.grid.size(); ++i)
    spacing = std::max(spacing, m.grid[i] - m.grid[i - 1]);
  double window = m.eps / 2 + 3 * spacing;

  std::mt19937_64 rng(31337u);
  Vec f = random_vec(rng, m.pair0.dim);
  f[m.n1d] = 0.0;  // no room component
  for (int i = 0; i < m.n1d; ++i)
    if (std::abs(m.grid[i] - m.sites[0]) <= window) f[i] = 0.0;
  REQUIRE(f.norm() > 0);

  Vec diff = m.J * f - m.J1 * f;
  CHECK(diff.norm() == 0.0);
}

TEST_CASE("potential enters the limit pair through the interval block") {
  MeshControl ctrl = coarse_ctrl(0.1, 0.6813);
  Lab plain = make_lab(0.1, 1.0 / 3, 1.0 / 6, 1.0, ctrl);
  Lab shifted = make_lab(0.1, 1.0 / 3, 1.0 / 6, 1.0, ctrl, PotentialSpec::constant(2.0));

  SpMat dk = shifted.maps.pair0.K - plain.maps.pair0.K;
  SpMat expect = 2.0 * plain.maps.pair0.M;
  // The room scalar block carries mass 1 but no potential.
  const int nr = plain.maps.n_rooms;
  for (int r = 0; r < nr; ++r)
    expect.coeffRef(plain.maps.n1d + r, plain.maps.n1d + r) -= 2.0;
  CHECK(SpMat(dk - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("primal and dual defect routes agree") {
  Lab lab = make_lab(0.1, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(0.1, 0.6813));
  OpNormOptions tight;
  tight.rel_tol = 1e-9;
  double primal = resolvent_defect(lab.maps, lab.pair2d, lab.maps.pair0, tight);
  double dual = resolvent_defect_dual(lab.maps, lab.pair2d, lab.maps.pair0, tight);
  CHECK(primal > 0);
  CHECK(dual == doctest::Approx(primal).epsilon(1e-5));
}

TEST_CASE("defect falls with the passage scale") {
  std::vector<double> eps_list{0.1, 0.05, 0.025};
  std::vector<double> defects;
  for (double eps : eps_list) {
    double b = std::pow(eps, 1.0 / 6);
    Lab lab = make_lab(eps, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(eps, b));
    double d = resolvent_defect(lab.maps, lab.pair2d, lab.maps.pair0);
    CHECK(d > 0);
    CHECK(d < 1);
    defects.push_back(d);
  }
  CHECK(defects[1] < defects[0]);
  CHECK(defects[2] < defects[1]);
}

TEST_CASE("defect falls under pure refinement on a plain strip") {
  std::vector<double> defects;
  for (int n : {16, 32, 64}) {
    Mesh2D mesh = build_rect_mesh(-1.0, -0.1, 2.0, 0.1, n, std::max(2, n / 8));
    IdMaps maps = build_maps(mesh);
    DiscreteOperatorPair pair2d = assemble_2d(mesh, PotentialSpec::none());
    defects.push_back(resolvent_defect(maps, pair2d, maps.pair0));
  }
  CHECK(defects[0] > 0);
  CHECK(defects[1] < defects[0]);
  CHECK(defects[2] < defects[1]);
}

TEST_CASE("near-identity quality tracks the coupling scales") {
  std::vector<double> ratios;
  for (double eps : {0.1, 0.05}) {
    double b = std::pow(eps, 1.0 / 6);
    Lab lab = make_lab(eps, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(eps, b));
    double q = quasi_unitarity_defect(lab.maps, lab.pair2d);
    CHECK(q > 0);
    CHECK(q < 1);
    ratios.push_back(q / std::pow(eps, 1.0 / 6));
  }
  double spread = std::max(ratios[0], ratios[1]) / std::min(ratios[0], ratios[1]);
  CHECK(spread < 3.0);
}

TEST_CASE("trace and smallness constants stay bounded") {
  std::vector<LemmaRatios> results;
  for (double eps : {0.1, 0.05}) {
    double b = std::pow(eps, 1.0 / 6);
    Lab lab = make_lab(eps, 1.0 / 3, 1.0 / 6, 1.0, coarse_ctrl(eps, b));
    LemmaRatios r = lemma_checks(lab.maps, lab.mesh, 40, 0xFEEDu);
    for (double v : {r.mean_dplus_room, r.mean_dminus_below, r.mean_dminus_dzero,
                     r.passage_l2, r.map_mismatch}) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0);
      CHECK(v <= 100.0);
    }
    CHECK(r.map_mismatch > 0);
    results.push_back(r);
  }
  double ratio = results[0].map_mismatch / results[1].map_mismatch;
  CHECK(ratio > 0.1);
  CHECK(ratio < 10.0);
}

TEST_CASE("maps refuse meshes without tensor strip structure") {
  Mesh2D mesh = build_rect_mesh(0, 0, 1, 1, 4, 4);
  mesh.strip_x_lines.clear();
  CHECK_THROWS_AS(build_maps(mesh), validation_error);
}

TEST_SUITE_END();
