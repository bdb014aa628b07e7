#include "rpwg/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace rpwg {

namespace {

/// max over x in X of dist(x, Y); both sorted. Two-pointer sweep.
double directed(const std::vector<double>& X, const std::vector<double>& Y) {
  double worst = 0;
  std::size_t j = 0;
  for (double x : X) {
    while (j + 1 < Y.size() && Y[j + 1] <= x) ++j;
    double d = std::abs(x - Y[j]);
    if (j + 1 < Y.size()) d = std::min(d, std::abs(Y[j + 1] - x));
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace

double hausdorff(const std::vector<double>& X, const std::vector<double>& Y) {
  if (X.empty() || Y.empty())
    throw validation_error("hausdorff: inputs must be non-empty");
  std::vector<double> xs = X, ys = Y;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  return std::max(directed(xs, ys), directed(ys, xs));
}

SpectralDistanceResult tilde_hausdorff(const Spectrum& A, const Spectrum& B) {
  if (!A.cutoff || !B.cutoff)
    throw validation_error("tilde_hausdorff: both spectra need certified cutoffs");
  auto transform = [](const Spectrum& s) {
    std::vector<double> t;
    t.reserve(s.values.size() + 1);
    for (double v : s.values) {
      // Discrete zero modes come back from the eigensolver as O(tol)
      // negatives; only reject values a solver could not have produced.
      if (v < -1e-9)
        throw validation_error("tilde_hausdorff: negative eigenvalue in a non-negative spectrum");
      t.push_back(1.0 / (1.0 + std::max(v, 0.0)));
    }
    t.push_back(0.0);
    return t;
  };
  SpectralDistanceResult r;
  r.value = hausdorff(transform(A), transform(B));
  r.truncation_bound =
      std::max(1.0 / (1.0 + *A.cutoff), 1.0 / (1.0 + *B.cutoff));
  return r;
}

}  // namespace rpwg
