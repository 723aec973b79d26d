#pragma once

#include <cstdint>

namespace avgemb {

double erf(double x) noexcept;
double erfc(double x) noexcept;
// log(erfc(x)); stays finite up to |x| ~ 1e154 where erfc itself underflows
double log_erfc(double x) noexcept;

double std_normal_pdf(double z) noexcept;
double std_normal_cdf(double z) noexcept;
double std_normal_log_cdf(double z) noexcept;
double std_normal_log_sf(double z) noexcept;

// sd must be > 0, otherwise std::invalid_argument
double normal_pdf(double x, double mean, double sd);
double normal_cdf(double x, double mean, double sd);
double normal_log_cdf(double x, double mean, double sd);
double normal_log_sf(double x, double mean, double sd);

// log C(n, j); throws std::domain_error when j > n
double log_binomial(std::uint64_t n, std::uint64_t j);

}  // namespace avgemb
