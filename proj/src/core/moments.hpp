#pragma once

#include <cstddef>
#include <span>

namespace avgemb {

// first four moments of a scalar marginal; kurtosis is the plain (non-excess)
// fourth standardized moment, so a normal has kurtosis 3
struct moment_set {
  double mean = 0.0;
  double variance = 1.0;
  double skewness = 0.0;
  double kurtosis = 3.0;

  moment_set() = default;
  // validates finiteness, variance >= 0 and kurtosis >= skewness^2 + 1
  moment_set(double mean, double variance, double skewness, double kurtosis);
};

// population-normalized (1/n) sample moments; needs at least 4 values,
// throws degenerate_error when every value is identical
moment_set estimate_moments(std::span<const double> values);

}  // namespace avgemb
