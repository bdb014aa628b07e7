#include "rpwg/limit_operator.hpp"

#include "rpwg/eigensolve.hpp"

#include <algorithm>
#include <cmath>

namespace rpwg {

namespace {

double secular(double k, const LimitSpec& s) {
  const double L = s.ell_plus - s.ell_minus;
  return k * std::sin(k * L) -
         s.gamma * std::cos(k * s.ell_minus) * std::cos(k * s.ell_plus);
}

double bisect_root(double a, double b, double fa, const LimitSpec& s) {
  for (int i = 0; i < 200 && b - a > 1e-13 * (1 + b); ++i) {
    double m = 0.5 * (a + b);
    double fm = secular(m, s);
    if (fm == 0) return m;
    if ((fa < 0) != (fm < 0)) {
      b = m;
    } else {
      a = m;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> scan_roots(const LimitSpec& s, double k_max, double step) {
  std::vector<double> roots;
  double a = step * 1e-6;  // keep k=0 out; it is handled separately
  double fa = secular(a, s);
  for (double b = a + step; a < k_max; a = b, b += step) {
    double bc = std::min(b, k_max);
    double fb = secular(bc, s);
    if (fb == 0) {
      roots.push_back(bc);
    } else if ((fa < 0) != (fb < 0)) {
      roots.push_back(bisect_root(a, bc, fa, s));
    }
    fa = fb;
    if (bc >= k_max) break;
  }
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double x, double y) {
                            return std::abs(x - y) <= 1e-9 * (1 + std::abs(y));
                          }),
              roots.end());
  return roots;
}

}  // namespace

void validate_limit_spec(const LimitSpec& spec) {
  if (!(spec.ell_minus < 0 && 0 < spec.ell_plus) || !std::isfinite(spec.ell_minus) ||
      !std::isfinite(spec.ell_plus))
    throw validation_error("limit interval must be finite with ell_minus < 0 < ell_plus");
  if (!(spec.gamma >= 0) || !std::isfinite(spec.gamma))
    throw validation_error("coupling strength gamma must be >= 0");
}

std::vector<double> limit_grid(const LimitSpec& spec, int n) {
  validate_limit_spec(spec);
  if (n < 3) throw validation_error("limit_grid: need at least 3 nodes");
  const double L = spec.ell_plus - spec.ell_minus;
  int N = n - 1;
  int n_left = std::max<int>(1, std::lround(N * (-spec.ell_minus) / L));
  n_left = std::min(n_left, N - 1);
  int n_right = N - n_left;
  std::vector<double> g;
  g.reserve(n);
  for (int i = 0; i < n_left; ++i)
    g.push_back(spec.ell_minus + (0.0 - spec.ell_minus) * i / n_left);
  for (int i = 0; i <= n_right; ++i)
    g.push_back(spec.ell_plus * static_cast<double>(i) / n_right);
  return g;
}

Spectrum secular_spectrum(const LimitSpec& spec, double k_max) {
  validate_limit_spec(spec);
  if (!spec.V.zero)
    throw validation_error("secular_spectrum requires a vanishing potential");
  if (!(k_max > 0)) throw validation_error("secular_spectrum: k_max must be positive");

  const double L = spec.ell_plus - spec.ell_minus;
  double step = std::min(M_PI / (2 * L), 0.1) / 4;
  std::vector<double> roots = scan_roots(spec, k_max, step);
  // Halve the scan step until two consecutive passes find the same roots.
  bool stable = false;
  for (int round = 0; round < 8; ++round) {
    step /= 2;
    std::vector<double> finer = scan_roots(spec, k_max, step);
    if (finer.size() == roots.size()) {
      bool same = true;
      for (std::size_t i = 0; i < roots.size(); ++i)
        if (std::abs(finer[i] - roots[i]) > 1e-10 * (1 + roots[i])) same = false;
      if (same) {
        stable = true;
        break;
      }
    }
    roots = std::move(finer);
  }
  if (!stable)
    throw numerical_error("secular_spectrum: root count did not stabilize under grid refinement");

  Spectrum sp;
  if (spec.gamma == 0) sp.values.push_back(0.0);  // constant mode of the interval
  for (double k : roots) sp.values.push_back(k * k);
  sp.values.push_back(0.0);  // scalar summand
  sp.appended_zero = true;
  std::sort(sp.values.begin(), sp.values.end());
  sp.cutoff = k_max * k_max;
  return sp;
}

DiscreteOperatorPair limit_pair(const LimitSpec& spec, const std::vector<double>& grid) {
  validate_limit_spec(spec);
  return assemble_1d(grid, spec.V, spec.gamma, 0.0);
}

Spectrum galerkin_spectrum(const LimitSpec& spec, int n, int k) {
  DiscreteOperatorPair pair = limit_pair(spec, limit_grid(spec, n));
  EigsOptions opts;
  opts.k = k;
  EigsResult r = eigs_lowest(pair, opts);
  Spectrum sp = r.spectrum;
  sp.values.push_back(0.0);
  sp.appended_zero = true;
  std::sort(sp.values.begin(), sp.values.end());
  sp.cluster_id.clear();
  return sp;
}

}  // namespace rpwg
