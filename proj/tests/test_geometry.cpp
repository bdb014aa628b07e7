#include "doctest.h"

#include "rpwg/fem.hpp"
#include "rpwg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace rpwg;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("derived scales at the reference parameter point") {
  GeometryParams p;  // eps=0.1, alpha=1/3, beta=1/6, gamma=1, (-1,1)
  DerivedScales s = validate_params(p);
  CHECK(s.d == doctest::Approx(std::pow(0.1, 4.0 / 3.0)).epsilon(1e-14));
  CHECK(s.d == doctest::Approx(0.0464158883).epsilon(1e-9));
  CHECK(s.h == doctest::Approx(0.4641588834).epsilon(1e-9));
  CHECK(s.b == doctest::Approx(0.6812920691).epsilon(1e-9));
  CHECK(s.eps_max == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("eps beyond the first admissibility bound is rejected") {
  GeometryParams p;
  p.eps = 0.2;  // (2*gamma)^(-1/alpha) = 2^-3 = 0.125
  CHECK_THROWS_AS(validate_params(p), validation_error);
}

TEST_CASE("basic range violations are rejected") {
  GeometryParams p;
  SUBCASE("interval") {
    p.ell_minus = 0.5;
    CHECK_THROWS_AS(validate_params(p), validation_error);
  }
  SUBCASE("alpha") {
    p.alpha = 0;
    CHECK_THROWS_AS(validate_params(p), validation_error);
  }
  SUBCASE("beta upper") {
    p.beta = 0.5;
    CHECK_THROWS_AS(validate_params(p), validation_error);
  }
  SUBCASE("gamma") {
    p.gamma = -1;
    CHECK_THROWS_AS(validate_params(p), validation_error);
  }
  SUBCASE("infinite interval") {
    p.ell_plus = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_params(p), validation_error);
  }
  SUBCASE("degenerate passage width") {
    p.eps = 1e-11;  // d = eps^(4/3) ~ 5e-15, below resolution vs ell
    CHECK_THROWS_AS(validate_params(p), validation_error);
  }
}

TEST_CASE("passage conductance ratio is scale invariant") {
  GeometryParams p;
  p.alpha = 1.0;
  p.beta = 0.25;
  for (double eps : {0.05, 0.02, 0.01, 0.004}) {
    p.eps = eps;
    DerivedScales s = validate_params(p);
    CHECK(s.d / (s.h * eps) == doctest::Approx(p.gamma).epsilon(1e-13));
  }
}

TEST_CASE("admissibility consequences hold on random valid draws") {
  std::mt19937_64 rng(20240811u);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int valid = 0, attempts = 0;
  while (valid < 1000 && attempts < 40000) {
    ++attempts;
    GeometryParams p;
    p.ell_minus = -(1.0 + 2.0 * u01(rng));
    p.ell_plus = 1.0 + 2.0 * u01(rng);
    p.gamma = 0.2 + 2.8 * u01(rng);
    p.alpha = 0.05 + 1.95 * u01(rng);
    p.beta = 0.02 + 0.46 * u01(rng);
    p.eps = 1e-3 + 0.4 * u01(rng);
    DerivedScales s;
    try {
      s = validate_params(p);
    } catch (const validation_error&) {
      continue;
    }
    ++valid;
    CHECK(s.d <= p.eps / 2 + 1e-15);
    CHECK(s.d <= s.b + 1e-15);
    CHECK(s.b < std::min(-p.ell_minus, p.ell_plus));
  }
  REQUIRE(valid == 1000);
}

TEST_CASE("waveguide mesh reproduces the exact domain area") {
  GeometryParams p;
  DerivedScales s = validate_params(p);
  Mesh2D mesh = build_mesh(p, {});
  const double exact =
      (p.ell_plus - p.ell_minus) * p.eps + s.d * s.h + s.b * s.b;
  CHECK(mesh_area(mesh) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("mesh structure: tags, containment, orientation") {
  GeometryParams p;
  DerivedScales s = validate_params(p);
  MeshControl ctrl;
  ctrl.strip_h = 0.02;
  Mesh2D mesh = build_mesh(p, ctrl);

  int n_strip = 0, n_passage = 0, n_room = 0;
  for (int t = 0; t < mesh.n_tris(); ++t) {
    ElementGeometry g = element_geometry(mesh, t);
    CHECK(g.area > 0);
    switch (mesh.region[t]) {
      case Region::Strip:
        ++n_strip;
        CHECK(g.cy < 0);
        CHECK(g.cy > -p.eps);
        break;
      case Region::Passage:
        ++n_passage;
        CHECK(std::abs(g.cx) < s.d / 2);
        CHECK(g.cy > 0);
        CHECK(g.cy < s.h);
        break;
      case Region::Room:
        ++n_room;
        CHECK(std::abs(g.cx) < s.b / 2);
        CHECK(g.cy > s.h);
        CHECK(g.cy < s.h + s.b);
        break;
    }
  }
  CHECK(n_strip > 0);
  CHECK(n_passage >= 4 * 4);
  CHECK(n_room > 0);

  for (const TaggedEdge& e : mesh.boundary_edges)
    CHECK(e.tag == EdgeTag::Neumann);

  // The passage-top trace edges live on y = h strictly inside |x| < d/2;
  // the room floor outside the passage mouth is genuine boundary.
  CHECK(!mesh.dplus_edges.empty());
  for (const TaggedEdge& e : mesh.dplus_edges) {
    CHECK(mesh.nodes[e.a][1] == doctest::Approx(s.h).epsilon(1e-14));
    CHECK(std::abs(mesh.nodes[e.a][0]) < s.d / 2 + 1e-12);
    CHECK(std::abs(mesh.nodes[e.b][0]) < s.d / 2 + 1e-12);
  }
  CHECK(!mesh.dminus_edges.empty());
  for (const TaggedEdge& e : mesh.dminus_edges) {
    CHECK(mesh.nodes[e.a][1] == 0.0);
    CHECK(mesh.nodes[e.b][1] == 0.0);
  }

  // Strip is a tensor grid: every (x-line, y-line) pair is an actual node.
  REQUIRE(mesh.strip_y_lines.size() >= 2);
  CHECK(mesh.strip_y_lines.front() == doctest::Approx(-p.eps).epsilon(1e-14));
  CHECK(mesh.strip_y_lines.back() == 0.0);
  CHECK(std::is_sorted(mesh.strip_x_lines.begin(), mesh.strip_x_lines.end()));
}

TEST_CASE("rectangle benchmark mesh") {
  Mesh2D mesh = build_rect_mesh(0, 0, 1, 1, 8, 8);
  CHECK(mesh.n_nodes() == 81);
  CHECK(mesh.n_tris() == 128);
  CHECK(mesh_area(mesh) == doctest::Approx(1.0).epsilon(1e-14));
  for (Region r : mesh.region) CHECK(r == Region::Strip);
  for (const TaggedEdge& e : mesh.boundary_edges)
    CHECK(e.tag == EdgeTag::Neumann);
}

TEST_CASE("multi-site waveguide: translated copies of the bump") {
  GeometryParams p;
  DerivedScales s = validate_params(p);
  p.ell_minus = -2;
  p.ell_plus = 2;
  std::vector<double> sites{-1.0, 1.0};
  Mesh2D mesh = build_waveguide_mesh(p, {}, sites);
  CHECK(mesh.sites == sites);
  const double exact = (p.ell_plus - p.ell_minus) * p.eps +
                       2 * (s.d * s.h + s.b * s.b);
  CHECK(mesh_area(mesh) == doctest::Approx(exact).epsilon(1e-12));

  // Room/passage element counts split evenly between the two copies.
  int left = 0, right = 0;
  for (int t = 0; t < mesh.n_tris(); ++t) {
    if (mesh.region[t] == Region::Strip) continue;
    (element_geometry(mesh, t).cx < 0 ? left : right)++;
  }
  CHECK(left == right);
  CHECK(left > 0);
}

TEST_CASE("sites too close together are rejected") {
  GeometryParams p;  // b ~ 0.68 at eps = 0.1
  p.ell_minus = -2;
  p.ell_plus = 2;
  CHECK_THROWS_AS(build_waveguide_mesh(p, {}, {-0.2, 0.2}), validation_error);
}

TEST_SUITE_END();
