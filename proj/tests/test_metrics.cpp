#include "doctest.h"

#include "rpwg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace rpwg;

namespace {

double hausdorff_brute(const std::vector<double>& X,
                       const std::vector<double>& Y) {
  double worst = 0;
  for (double x : X) {
    double best = 1e300;
    for (double y : Y) best = std::min(best, std::abs(x - y));
    worst = std::max(worst, best);
  }
  for (double y : Y) {
    double best = 1e300;
    for (double x : X) best = std::min(best, std::abs(x - y));
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<double> random_set(std::mt19937_64& rng, int n, double span) {
  std::uniform_real_distribution<double> u(-span, span);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

Spectrum make_spectrum(std::vector<double> values, double cutoff) {
  Spectrum sp;
  std::sort(values.begin(), values.end());
  sp.values = std::move(values);
  sp.cutoff = cutoff;
  return sp;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("set distance basics") {
  CHECK(hausdorff({0, 1}, {0, 2}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hausdorff({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(hausdorff({0}, {5}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(hausdorff({}, {1.0}), validation_error);
  CHECK_THROWS_AS(hausdorff({1.0}, {}), validation_error);
}

TEST_CASE("set distance matches the quadratic oracle") {
  std::mt19937_64 rng(42u);
  std::uniform_int_distribution<int> size(1, 50);
  for (int trial = 0; trial < 500; ++trial) {
    auto X = random_set(rng, size(rng), 10.0);
    auto Y = random_set(rng, size(rng), 10.0);
    CHECK(hausdorff(X, Y) == doctest::Approx(hausdorff_brute(X, Y)).epsilon(1e-14));
  }
}

TEST_CASE("metric axioms on random triples") {
  std::mt19937_64 rng(43u);
  std::uniform_int_distribution<int> size(1, 20);
  for (int trial = 0; trial < 300; ++trial) {
    auto X = random_set(rng, size(rng), 5.0);
    auto Y = random_set(rng, size(rng), 5.0);
    auto Z = random_set(rng, size(rng), 5.0);
    double dxy = hausdorff(X, Y);
    double dyx = hausdorff(Y, X);
    double dxz = hausdorff(X, Z);
    double dzy = hausdorff(Z, Y);
    CHECK(dxy == dyx);
    CHECK(dxy >= 0);
    CHECK(dxy <= dxz + dzy + 1e-12);
    CHECK(hausdorff(X, X) == 0.0);
  }
}

TEST_CASE("uniform perturbations move the distance by at most their size") {
  std::mt19937_64 rng(44u);
  std::uniform_real_distribution<double> pert(-1.0, 1.0);
  std::uniform_int_distribution<int> size(1, 30);
  for (int trial = 0; trial < 300; ++trial) {
    auto X = random_set(rng, size(rng), 5.0);
    auto Y = random_set(rng, size(rng), 5.0);
    double delta = 0.1 * std::abs(pert(rng));
    auto Xp = X;
    double moved = 0;
    for (double& x : Xp) {
      double step = delta * pert(rng);
      x += step;
      moved = std::max(moved, std::abs(step));
    }
    CHECK(std::abs(hausdorff(Xp, Y) - hausdorff(X, Y)) <= moved + 1e-12);
  }
}

TEST_CASE("shift-transform distance on tiny spectra") {
  Spectrum a = make_spectrum({0.0}, 100.0);
  Spectrum b = make_spectrum({0.0}, 100.0);
  SpectralDistanceResult same = tilde_hausdorff(a, b);
  CHECK(same.value == 0.0);
  CHECK(same.truncation_bound == doctest::Approx(1.0 / 101).epsilon(1e-12));

  Spectrum c = make_spectrum({1.0}, 100.0);
  SpectralDistanceResult half = tilde_hausdorff(a, c);
  // Images {1, 0} vs {1/2, 0}: the farthest point 1 is 1/2 away.
  CHECK(half.value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("missing cutoff certification is refused") {
  Spectrum a = make_spectrum({0.0, 1.0}, 10.0);
  Spectrum b = make_spectrum({0.0, 1.0}, 10.0);
  b.cutoff.reset();
  CHECK_THROWS_AS(tilde_hausdorff(a, b), validation_error);
}

TEST_CASE("transform agrees with direct resolvent-image distance") {
  std::mt19937_64 rng(45u);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> va, vb;
    for (int i = 0; i < 12; ++i) va.push_back(u(rng));
    for (int i = 0; i < 9; ++i) vb.push_back(u(rng));
    Spectrum a = make_spectrum(va, 50.0);
    Spectrum b = make_spectrum(vb, 50.0);
    double got = tilde_hausdorff(a, b).value;

    std::vector<double> ia{0.0}, ib{0.0};
    for (double v : a.values) ia.push_back(1.0 / (1.0 + v));
    for (double v : b.values) ib.push_back(1.0 / (1.0 + v));
    CHECK(got == doctest::Approx(hausdorff(ia, ib)).epsilon(1e-12));
  }
}

TEST_CASE("points above both cutoffs only matter through the stated bound") {
  Spectrum a = make_spectrum({0.0, 2.0, 7.0}, 20.0);
  Spectrum b = make_spectrum({0.1, 2.2, 6.5}, 20.0);
  double base = tilde_hausdorff(a, b).value;
  double bound = tilde_hausdorff(a, b).truncation_bound;

  Spectrum a2 = a;
  a2.values.push_back(25.0);  // beyond both cutoffs
  a2.values.push_back(400.0);
  double with_tail = tilde_hausdorff(a2, b).value;
  CHECK(std::abs(with_tail - base) <= bound + 1e-12);
}

TEST_CASE("near-duplicate values do not inflate the distance") {
  Spectrum a = make_spectrum({1.0, 1.0 + 1e-13, 3.0}, 10.0);
  Spectrum b = make_spectrum({1.0, 3.0}, 10.0);
  CHECK(tilde_hausdorff(a, b).value <= 1e-12);
}

TEST_SUITE_END();
