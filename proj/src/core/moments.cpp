#include "core/moments.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "core/errors.hpp"

namespace avgemb {

namespace {
// Neumaier compensated sum; keeps long accumulations honest
struct compensated_sum {
  double s = 0.0, c = 0.0;
  void add(double x) noexcept {
    double t = s + x;
    if (std::fabs(s) >= std::fabs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const noexcept { return s + c; }
};
}  // namespace

moment_set::moment_set(double mean_, double variance_, double skewness_, double kurtosis_)
    : mean(mean_), variance(variance_), skewness(skewness_), kurtosis(kurtosis_) {
  if (!std::isfinite(mean) || !std::isfinite(variance) || !std::isfinite(skewness) ||
      !std::isfinite(kurtosis))
    throw std::domain_error("moment_set: moments must be finite");
  if (variance < 0.0) throw std::domain_error("moment_set: variance must be >= 0");
  double bound = skewness * skewness + 1.0;
  // tiny slack so estimated moments sitting exactly on the boundary
  // (e.g. a two-point marginal) are not rejected by round-off
  if (kurtosis < bound - 1e-9 * std::max(1.0, std::fabs(bound)))
    throw std::domain_error("moment_set: kurtosis below skewness^2 + 1 is infeasible");
}

moment_set estimate_moments(std::span<const double> values) {
  std::size_t n = values.size();
  if (n < 4) throw std::invalid_argument("estimate_moments: need at least 4 values");

  compensated_sum total;
  for (double v : values) total.add(v);
  double mean = total.value() / static_cast<double>(n);

  compensated_sum s2, s3, s4;
  for (double v : values) {
    double d = v - mean;
    double d2 = d * d;
    s2.add(d2);
    s3.add(d2 * d);
    s4.add(d2 * d2);
  }
  double m2 = s2.value() / static_cast<double>(n);
  if (m2 <= 0.0) throw degenerate_error("estimate_moments: all values identical");
  double m3 = s3.value() / static_cast<double>(n);
  double m4 = s4.value() / static_cast<double>(n);

  double sd = std::sqrt(m2);
  return moment_set(mean, m2, m3 / (m2 * sd), m4 / (m2 * m2));
}

}  // namespace avgemb
