#include "core/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace avgemb {

namespace {
constexpr double sqrt_2 = 1.4142135623730951;
constexpr double sqrt_2pi = 2.5066282746310002;
constexpr double log_sqrt_pi = 0.5723649429247001;  // log(sqrt(pi))

void require_sd(double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal scale must be positive");
}
}  // namespace

double erf(double x) noexcept { return std::erf(x); }

double erfc(double x) noexcept { return std::erfc(x); }

double log_erfc(double x) noexcept {
  if (x < 8.0) {
    // erfc(8) ~ 1.1e-29, far above double underflow, so the direct log is exact enough
    return std::log(std::erfc(x));
  }
  // asymptotic expansion: erfc(x) = exp(-x^2)/(x sqrt(pi)) * (1 + sum_m (-1)^m (2m-1)!!/(2x^2)^m)
  double inv2x2 = 1.0 / (2.0 * x * x);
  double term = 1.0;
  double sum = 0.0;
  for (int m = 1; m <= 30; ++m) {
    term *= -static_cast<double>(2 * m - 1) * inv2x2;
    sum += term;
    if (std::fabs(term) < 1e-18) break;
  }
  return -x * x - std::log(x) - log_sqrt_pi + std::log1p(sum);
}

double std_normal_pdf(double z) noexcept { return std::exp(-0.5 * z * z) / sqrt_2pi; }

double std_normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / sqrt_2); }

double std_normal_log_sf(double z) noexcept {
  // P(Z > z) = erfc(z/sqrt(2)) / 2
  return log_erfc(z / sqrt_2) - 0.6931471805599453;
}

double std_normal_log_cdf(double z) noexcept { return std_normal_log_sf(-z); }

double normal_pdf(double x, double mean, double sd) {
  require_sd(sd);
  return std_normal_pdf((x - mean) / sd) / sd;
}

double normal_cdf(double x, double mean, double sd) {
  require_sd(sd);
  return std_normal_cdf((x - mean) / sd);
}

double normal_log_cdf(double x, double mean, double sd) {
  require_sd(sd);
  return std_normal_log_cdf((x - mean) / sd);
}

double normal_log_sf(double x, double mean, double sd) {
  require_sd(sd);
  return std_normal_log_sf((x - mean) / sd);
}

double log_binomial(std::uint64_t n, std::uint64_t j) {
  if (j > n) throw std::domain_error("log_binomial: j exceeds n");
  std::uint64_t m = std::min(j, n - j);
  if (m == 0) return 0.0;
  if (m <= 32768) {
    // direct summation; the lgamma difference loses too much for small complements
    double acc = 0.0;
    for (std::uint64_t t = 1; t <= m; ++t) {
      acc += std::log(static_cast<double>(n - m + t)) - std::log(static_cast<double>(t));
    }
    return acc;
  }
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(j) + 1.0) -
         std::lgamma(static_cast<double>(n - j) + 1.0);
}

}  // namespace avgemb
