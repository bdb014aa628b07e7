#pragma once

#include "rpwg/core.hpp"

#include <string>
#include <vector>

namespace rpwg {

struct SpectralDistanceResult {
  double value = 0;
  /// Additive uncertainty from the unseen tail above the certified cutoffs:
  /// everything beyond Lambda maps into [0, (1+Lambda)^-1] under the shift
  /// transform, so the reported distance is exact only up to this much.
  double truncation_bound = 0;
  std::string transform_used = "inverse_shift";
};

/// Exact two-sided sup-inf distance between finite point sets.
double hausdorff(const std::vector<double>& X, const std::vector<double>& Y);

/// Distance between spectra after the map lambda -> (1+lambda)^-1, with the
/// accumulation point 0 appended to both images (stands in for the infinite
/// tail of an unbounded spectrum). Both inputs must carry certified cutoffs.
SpectralDistanceResult tilde_hausdorff(const Spectrum& A, const Spectrum& B);

}  // namespace rpwg
