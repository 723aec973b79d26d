#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "core/curve.hpp"
#include "core/moments.hpp"
#include "core/quadrature.hpp"

namespace avgemb {

// CLT-approximated similarity distribution
struct normal_approx {
  double mean = 0.0;
  double variance = 0.0;
};

// s(X,Y) for independent X,Y with i.i.d. coordinates:
//   mean = d mu_x mu_y,  var = d((sx^2+mx^2)(sy^2+my^2) - mx^2 my^2)
normal_approx inner_product_moments(const moment_set& mx, const moment_set& my, std::size_t d);

// s(X,X): mean = d(mu^2+sigma^2), var = d(4 mu^2 s^2 + 4 mu g s^3 + (k-1) s^4);
// throws degenerate_error when the variance collapses (e.g. rademacher)
normal_approx inner_self_moments(const moment_set& m, std::size_t d);

// Cov(s(X,Y), s(X,Z)) = d sx^2 my mz
double cov_xy_xz(const moment_set& mx, const moment_set& my, const moment_set& mz,
                 std::size_t d);
// Cov(s(X,X), s(X,Y)) = d my (gx sx^3 + 2 mx sx^2)
double cov_xx_xy(const moment_set& mx, const moment_set& my, std::size_t d);

// similarity of the subset centroid to a non-member / member / their difference
normal_approx s_out_params(const moment_set& m, std::size_t k, std::size_t d);
normal_approx s_in_params(const moment_set& m, std::size_t k, std::size_t d);
normal_approx s_diff_params(const moment_set& m, std::size_t k, std::size_t d);

// P(s(u_in, mu_U) > s(u_out, mu_U)); always in (0.5, 1) on the feasible set
double prob_in_beats_out(const moment_set& m, std::size_t k, std::size_t d);

// shared parameters of the order-statistic machinery (zero-mean regime)
struct in_out_params {
  double mu_in = 0.0;     // d sigma^2 / k
  double sigma_in = 0.0;  // sigma^2 sqrt(d (kappa + k - 2)) / k
  double sigma_out = 0.0; // sigma^2 sqrt(d / k)
  std::size_t k = 0;
  std::size_t n_catalog = 0;
  std::size_t d = 0;

  static in_out_params from(const moment_set& m, std::size_t k, std::size_t n_catalog,
                            std::size_t d);
};

// density of the i-th largest of k i.i.d. N(mu_in, sigma_in^2) draws
class in_order_density {
public:
  in_order_density(std::size_t i, const in_out_params& p);
  double operator()(double x) const;

private:
  in_out_params p_;
  std::size_t rank_;
  double log_coef_;  // log k!/((i-1)!(k-i)!)
};

// CDF of the (k-i+1)-th largest of the N-k i.i.d. N(0, sigma_out^2) draws
class out_order_cdf {
public:
  out_order_cdf(std::size_t i, const in_out_params& p);
  double operator()(double x) const;

private:
  in_out_params p_;
  std::size_t rank_;                  // the i passed in
  std::uint64_t j_lo_ = 0, j_hi_ = 0; // summation range over successes
  std::vector<double> log_binom_;     // log C(N-k, j) for j in [j_lo, j_hi]
};

in_order_density f_in_order_density(std::size_t i, const in_out_params& p);
out_order_cdf F_out_order_cdf(std::size_t i, const in_out_params& p);

struct consistency_breakdown {
  double score = 0.0;
  std::vector<double> p_plus;    // p+_(i/k), i = 1..k
  double error_estimate = 0.0;   // summed quadrature error across integrals
  long evaluations = 0;
};

// Consistency_k as (1/k) sum_i  integral of f_in,(i) * F_out,(k-i+1)
// over [mu_in - 12 sigma_in, mu_in + 12 sigma_in]; requires mu = 0 and
// 2 <= k <= n_catalog/2
consistency_breakdown consistency_analytic_breakdown(const moment_set& m, std::size_t k,
                                                     std::size_t n_catalog, std::size_t d,
                                                     const quadrature_options& quad = {});
double consistency_analytic(const moment_set& m, std::size_t k, std::size_t n_catalog,
                            std::size_t d, const quadrature_options& quad = {});

consistency_curve consistency_curve_analytic(const moment_set& m,
                                             std::span<const std::uint32_t> k_values,
                                             std::size_t n_catalog, std::size_t d,
                                             const quadrature_options& quad = {});

}  // namespace avgemb
