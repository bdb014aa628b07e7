#include "doctest.h"

#include "rpwg/eigensolve.hpp"
#include "rpwg/fem.hpp"
#include "rpwg/geometry.hpp"
#include "rpwg/limit_operator.hpp"
#include "rpwg/metrics.hpp"

#include <cmath>
#include <map>
#include <random>
#include <vector>

using namespace rpwg;

namespace {

const double PI = 3.14159265358979323846;

std::vector<double> uniform_grid(double a, double b, int n) {
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = a + (b - a) * i / n;
  g.back() = b;
  return g;
}

// Sorted Neumann eigenvalues pi^2 (m^2 + n^2) of the unit square below a cap.
std::vector<double> square_neumann(double cap) {
  std::vector<double> v;
  for (int m = 0; m * m * PI * PI <= cap; ++m)
    for (int n = 0; n * n * PI * PI <= cap; ++n) {
      double lam = PI * PI * (m * m + n * n);
      if (lam <= cap) v.push_back(lam);
    }
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("fem");

TEST_CASE("unit square Neumann: kernel and low spectrum") {
  Mesh2D mesh = build_rect_mesh(0, 0, 1, 1, 64, 64);
  DiscreteOperatorPair pair = assemble_2d(mesh, PotentialSpec::none());
  CHECK(pair.dim == mesh.n_nodes());
  CHECK((pair.K - SpMat(pair.K.transpose())).norm() <= 1e-14 * pair.K.norm());
  CHECK((pair.M - SpMat(pair.M.transpose())).norm() <= 1e-14 * pair.M.norm());

  EigsOptions opts;
  opts.k = 4;
  EigsResult res = eigs_lowest(pair, opts);
  REQUIRE(res.spectrum.values.size() >= 4);
  CHECK(std::abs(res.spectrum.values[0]) < 1e-8);
  // From above (min-max) and within 1%.
  std::vector<double> exact{0, PI * PI, PI * PI, 2 * PI * PI};
  for (int i = 1; i < 4; ++i) {
    CHECK(res.spectrum.values[i] >= exact[i] - 1e-9);
    CHECK(res.spectrum.values[i] <= 1.01 * exact[i]);
  }
}

TEST_CASE("constant potential shifts the stiffness by c times the mass") {
  Mesh2D mesh = build_rect_mesh(0, 0, 1, 1, 12, 12);
  const double c = 2.5;
  DiscreteOperatorPair p0 = assemble_2d(mesh, PotentialSpec::none());
  DiscreteOperatorPair pc = assemble_2d(mesh, PotentialSpec::constant(c));
  SpMat diff = pc.K - p0.K - c * p0.M;
  CHECK(diff.norm() <= 1e-12 * p0.K.norm());
}

TEST_CASE("potential acts on the strip only") {
  GeometryParams p;
  Mesh2D mesh = build_mesh(p, {});
  DiscreteOperatorPair p0 = assemble_2d(mesh, PotentialSpec::none());
  DiscreteOperatorPair pc = assemble_2d(mesh, PotentialSpec::constant(1.0));
  SpMat strip_mass(p0.dim, p0.dim);
  {
    std::vector<Triplet> trip;
    for (int t = 0; t < mesh.n_tris(); ++t) {
      if (mesh.region[t] != Region::Strip) continue;
      ElementGeometry g = element_geometry(mesh, t);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          trip.emplace_back(g.v[i], g.v[j], g.area / (i == j ? 6.0 : 12.0));
    }
    strip_mass.setFromTriplets(trip.begin(), trip.end());
  }
  SpMat diff = pc.K - p0.K - strip_mass;
  CHECK(diff.norm() <= 1e-12 * p0.K.norm());
}

TEST_CASE("1d Neumann interval spectrum") {
  auto grid = uniform_grid(-1, 1, 512);
  DiscreteOperatorPair pair = assemble_1d(grid, PotentialSpec::none(), 0.0);
  EigsOptions opts;
  opts.k = 6;
  EigsResult res = eigs_lowest(pair, opts);
  for (int m = 0; m < 6; ++m) {
    double exact = (m * PI / 2) * (m * PI / 2);
    CHECK(res.spectrum.values[m] >= exact - 1e-9);
    CHECK(res.spectrum.values[m] <= exact + 0.01 * exact + 1e-9);
  }
}

TEST_CASE("delta coupling adds gamma at the zero node only") {
  auto grid = uniform_grid(-1, 1, 64);
  DiscreteOperatorPair p0 = assemble_1d(grid, PotentialSpec::none(), 0.0);
  DiscreteOperatorPair p1 = assemble_1d(grid, PotentialSpec::none(), 1.0);
  SpMat diff = p1.K - p0.K;
  CHECK(diff.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(diff.coeff(32, 32) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((p1.M - p0.M).norm() == 0.0);

  // gamma > 0 without a node at zero must be refused.
  auto shifted = uniform_grid(-1.01, 0.99, 64);
  CHECK_THROWS_AS(assemble_1d(shifted, PotentialSpec::none(), 1.0),
                  validation_error);
}

TEST_CASE("large gamma approaches the Dirichlet-at-zero spectrum from below") {
  auto grid = uniform_grid(-1, 1, 256);
  // Dirichlet at 0: even modes become cos(k(x-1)) with k = (2m+1)pi/2 on each
  // half; full spectrum equals two decoupled (0,1) mixed-end intervals.
  std::vector<double> gammas{10.0, 1e3, 1e6};
  std::vector<std::vector<double>> vals;
  for (double g : gammas) {
    DiscreteOperatorPair pair = assemble_1d(grid, PotentialSpec::none(), g);
    EigsOptions opts;
    opts.k = 4;
    vals.push_back(eigs_lowest(pair, opts).spectrum.values);
  }
  // Monotone non-decreasing in gamma, approaching ((2m+1)pi/2)^2 pairs.
  // Slack is relative: past saturation the true increments drop below the
  // eigensolver's own resolution.
  for (size_t i = 0; i + 1 < vals.size(); ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(vals[i][j] <= vals[i + 1][j] + 1e-6 * (1 + std::abs(vals[i + 1][j])));
  double k1 = PI / 2;
  CHECK(vals.back()[0] == doctest::Approx(k1 * k1).epsilon(2e-4));
  CHECK(vals.back()[1] == doctest::Approx(k1 * k1).epsilon(2e-4));
}

TEST_CASE("sup-norm bound on the interval") {
  auto grid = uniform_grid(0, 1, 100);
  const int n = static_cast<int>(grid.size());

  Vec ones = Vec::Ones(n);
  InequalityCheck c1 = check_sobolev_1d(grid, ones);
  CHECK(c1.lhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c1.rhs == doctest::Approx(1.0 / std::tanh(0.5)).epsilon(1e-12));
  CHECK(c1.rhs == doctest::Approx(2.1640).epsilon(1e-4));
  CHECK(c1.holds);

  Vec lin(n);
  for (int i = 0; i < n; ++i) lin[i] = grid[i];
  InequalityCheck c2 = check_sobolev_1d(grid, lin);
  CHECK(c2.lhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c2.rhs == doctest::Approx((1 + 1.0 / 3) / std::tanh(0.5)).epsilon(1e-6));
  CHECK(c2.rhs == doctest::Approx(2.885).epsilon(1e-3));
  CHECK(c2.holds);

  std::mt19937_64 rng(7u);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 1000; ++trial) {
    Vec f(n);
    for (int i = 0; i < n; ++i) f[i] = gauss(rng);
    CHECK(check_sobolev_1d(grid, f).holds);
  }
}

TEST_CASE("interval Poincare inequalities") {
  auto grid = uniform_grid(0, 1, 200);
  const int n = static_cast<int>(grid.size());

  Vec s(n);
  for (int i = 0; i < n; ++i) s[i] = std::sin(PI * grid[i]);
  InequalityCheck c = check_poincare_dirichlet(grid, s);
  CHECK(c.lhs == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(c.rhs == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(c.holds);
  CHECK(c.ratio > 0.99);
  CHECK(c.ratio <= 1.0 + 1e-12);

  std::mt19937_64 rng(11u);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 1000; ++trial) {
    Vec f(n);
    for (int i = 0; i < n; ++i) f[i] = gauss(rng);
    f[0] = f[n - 1] = 0;
    CHECK(check_poincare_dirichlet(grid, f).holds);
    CHECK(check_poincare_mean(grid, f).holds);
  }
}

TEST_CASE("room Poincare with mean value") {
  GeometryParams p;
  Mesh2D mesh = build_mesh(p, {});
  Vec c = Vec::Constant(mesh.n_nodes(), 3.0);
  InequalityCheck eq = check_poincare_mean_room(mesh, c);
  CHECK(eq.lhs == doctest::Approx(eq.rhs).epsilon(1e-12));
  CHECK(eq.holds);

  std::mt19937_64 rng(13u);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    Vec f(mesh.n_nodes());
    for (int i = 0; i < mesh.n_nodes(); ++i) f[i] = gauss(rng);
    CHECK(check_poincare_mean_room(mesh, f).holds);
  }
}

TEST_CASE("strip columns reproduce the interval forms exactly") {
  GeometryParams p;
  Mesh2D mesh = build_mesh(p, {});
  DiscreteOperatorPair strip = assemble_region_neumann(mesh, Region::Strip);
  const auto& xs = mesh.strip_x_lines;
  DiscreteOperatorPair line = assemble_1d(xs, PotentialSpec::none(), 0.0);

  std::map<double, int> x_index;
  for (size_t i = 0; i < xs.size(); ++i) x_index[xs[i]] = static_cast<int>(i);

  std::mt19937_64 rng(17u);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    Vec g(static_cast<int>(xs.size()));
    for (int i = 0; i < g.size(); ++i) g[i] = gauss(rng);
    Vec u(strip.dim);
    for (int dof = 0; dof < strip.dim; ++dof) {
      double x = mesh.nodes[strip.dof_to_node[dof]][0];
      auto it = x_index.find(x);
      REQUIRE(it != x_index.end());
      u[dof] = g[it->second];
    }
    double k2 = u.dot(strip.K * u);
    double m2 = u.dot(strip.M * u);
    double k1 = g.dot(line.K * g);
    double m1 = g.dot(line.M * g);
    CHECK(k2 == doctest::Approx(p.eps * k1).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(p.eps * m1).epsilon(1e-12));
  }
}

TEST_CASE("Ritz values decrease under nested refinement and stay above truth") {
  std::vector<double> exact = square_neumann(45.0);
  std::vector<std::vector<double>> levels;
  for (int n : {16, 32, 64}) {
    Mesh2D mesh = build_rect_mesh(0, 0, 1, 1, n, n);
    DiscreteOperatorPair pair = assemble_2d(mesh, PotentialSpec::none());
    EigsOptions opts;
    opts.k = 6;
    levels.push_back(eigs_lowest(pair, opts).spectrum.values);
  }
  for (int j = 1; j < 6; ++j) {
    CHECK(levels[0][j] >= levels[1][j] - 1e-10);
    CHECK(levels[1][j] >= levels[2][j] - 1e-10);
    CHECK(levels[2][j] >= exact[j] - 1e-9);
  }
}

TEST_CASE("Dirichlet passage-top variant decouples the room") {
  // Imposing a zero trace on the passage top and adding back the standalone
  // Neumann room produces a spectrum close to the full one, closer as the
  // scales shrink.
  GeometryParams p;
  p.alpha = 1.0 / 3;
  p.beta = 1.0 / 6;
  const double cutoff = 30.0;
  std::vector<double> dist;
  for (double eps : {0.1, 0.05, 0.025}) {
    p.eps = eps;
    Mesh2D mesh = build_mesh(p, {});
    EigsOptions opts;
    opts.cutoff = cutoff;

    DiscreteOperatorPair full = assemble_2d(mesh, PotentialSpec::none());
    Spectrum sf = eigs_lowest(full, opts).spectrum;

    DiscreteOperatorPair fwd = assemble_2d(mesh, PotentialSpec::none(),
                                           BoundaryCondition::DirichletOnDPlus);
    Spectrum sa = eigs_lowest(fwd, opts).spectrum;
    DiscreteOperatorPair room = assemble_region_neumann(mesh, Region::Room);
    Spectrum sb = eigs_lowest(room, opts).spectrum;

    Spectrum uni;
    uni.values = sa.values;
    uni.values.insert(uni.values.end(), sb.values.begin(), sb.values.end());
    std::sort(uni.values.begin(), uni.values.end());
    uni.cutoff = cutoff;

    // Retruncate both sets in the middle of a spectral window common to both,
    // so the comparison is not polluted by a pair straddling the raw cutoff.
    std::vector<double> merged = sf.values;
    merged.insert(merged.end(), uni.values.begin(), uni.values.end());
    std::sort(merged.begin(), merged.end());
    double t_best = cutoff / 2, gap_best = 0;
    for (size_t i = 0; i + 1 < merged.size(); ++i) {
      double mid = (merged[i] + merged[i + 1]) / 2;
      double gap = merged[i + 1] - merged[i];
      if (mid > cutoff / 2 && mid < cutoff && gap > gap_best) {
        gap_best = gap;
        t_best = mid;
      }
    }
    auto trim = [&](Spectrum& sp) {
      while (!sp.values.empty() && sp.values.back() > t_best)
        sp.values.pop_back();
      sp.cutoff = t_best;
    };
    trim(sf);
    trim(uni);
    dist.push_back(tilde_hausdorff(sf, uni).value);
  }
  CHECK(dist[1] < dist[0]);
  CHECK(dist[2] < dist[1]);
}

TEST_SUITE_END();
