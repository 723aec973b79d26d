#include "core/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "core/errors.hpp"
#include "core/special.hpp"

namespace avgemb {

namespace {
constexpr double log_sqrt_2pi = 0.9189385332046727;

void require_d(std::size_t d) {
  if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
}

void require_k(std::size_t k) {
  if (k < 2) throw std::invalid_argument("subset size k must be >= 2");
}

// n * logv with the 0 * (-inf) = 0 convention of vanished factors
inline double pow_term(std::uint64_t n, double logv) noexcept {
  return n == 0 ? 0.0 : static_cast<double>(n) * logv;
}
}  // namespace

normal_approx inner_product_moments(const moment_set& mx, const moment_set& my,
                                    std::size_t d) {
  require_d(d);
  double dd = static_cast<double>(d);
  double mean = dd * mx.mean * my.mean;
  double var = dd * ((mx.variance + mx.mean * mx.mean) * (my.variance + my.mean * my.mean) -
                     mx.mean * mx.mean * my.mean * my.mean);
  return {mean, var};
}

normal_approx inner_self_moments(const moment_set& m, std::size_t d) {
  require_d(d);
  double dd = static_cast<double>(d);
  double s2 = m.variance;
  double s = std::sqrt(s2);
  double mean = dd * (m.mean * m.mean + s2);
  double var = dd * (4.0 * m.mean * m.mean * s2 + 4.0 * m.mean * m.skewness * s2 * s +
                     (m.kurtosis - 1.0) * s2 * s2);
  if (var <= 0.0)
    throw degenerate_error("inner_self_moments: s(X,X) is a point mass for these moments");
  return {mean, var};
}

double cov_xy_xz(const moment_set& mx, const moment_set& my, const moment_set& mz,
                 std::size_t d) {
  require_d(d);
  return static_cast<double>(d) * mx.variance * my.mean * mz.mean;
}

double cov_xx_xy(const moment_set& mx, const moment_set& my, std::size_t d) {
  require_d(d);
  double s = std::sqrt(mx.variance);
  return static_cast<double>(d) * my.mean *
         (mx.skewness * mx.variance * s + 2.0 * mx.mean * mx.variance);
}

normal_approx s_out_params(const moment_set& m, std::size_t k, std::size_t d) {
  require_k(k);
  require_d(d);
  double dd = static_cast<double>(d), kk = static_cast<double>(k);
  double s2 = m.variance, mu = m.mean;
  double mean = dd * mu * mu;
  double var = dd * (s2 * s2 + (kk + 1.0) * s2 * mu * mu) / kk;
  if (var <= 0.0) throw degenerate_error("s_out_params: variance collapsed");
  return {mean, var};
}

normal_approx s_in_params(const moment_set& m, std::size_t k, std::size_t d) {
  require_k(k);
  require_d(d);
  double dd = static_cast<double>(d), kk = static_cast<double>(k);
  double s2 = m.variance, mu = m.mean, g = m.skewness, kap = m.kurtosis;
  double s = std::sqrt(s2);
  double mean = dd * (mu * mu + s2 / kk);
  double var = dd *
               (kk * (kk + 3.0) * mu * mu * s2 + 4.0 * mu * g * s2 * s +
                (kap + kk - 2.0) * s2 * s2) /
               (kk * kk);
  if (var <= 0.0) throw degenerate_error("s_in_params: variance collapsed");
  return {mean, var};
}

normal_approx s_diff_params(const moment_set& m, std::size_t k, std::size_t d) {
  require_k(k);
  require_d(d);
  double dd = static_cast<double>(d), kk = static_cast<double>(k);
  double s2 = m.variance, mu = m.mean, g = m.skewness, kap = m.kurtosis;
  double s = std::sqrt(s2);
  double mean = dd * s2 / kk;
  double var = dd *
               ((2.0 * (kk - 1.0) + kap) * s2 * s2 + 2.0 * kk * g * mu * s2 * s +
                2.0 * kk * kk * s2 * mu * mu) /
               (kk * kk);
  if (var <= 0.0) throw degenerate_error("s_diff_params: variance collapsed");
  return {mean, var};
}

double prob_in_beats_out(const moment_set& m, std::size_t k, std::size_t d) {
  require_k(k);
  require_d(d);
  if (m.variance <= 0.0)
    throw degenerate_error("prob_in_beats_out: zero-variance marginal is degenerate");
  double kk = static_cast<double>(k);
  double s2 = m.variance, mu = m.mean, g = m.skewness, kap = m.kurtosis;
  double s = std::sqrt(s2);
  double denom = (2.0 * (kk - 1.0) + kap) * s2 + 2.0 * kk * g * mu * s + 2.0 * kk * kk * mu * mu;
  if (denom <= 0.0)
    throw std::domain_error("prob_in_beats_out: non-positive variance denominator");
  double arg = std::sqrt(static_cast<double>(d) * s2 / (2.0 * denom));
  return 0.5 * (1.0 + erf(arg));
}

in_out_params in_out_params::from(const moment_set& m, std::size_t k, std::size_t n_catalog,
                                  std::size_t d) {
  // k = 1 is allowed here so the single-sample order statistic stays usable;
  // the consistency entry points enforce k >= 2 themselves
  if (k < 1) throw std::invalid_argument("in_out_params: need k >= 1");
  require_d(d);
  if (n_catalog <= k)
    throw std::invalid_argument("in_out_params: need n_catalog > k");
  if (m.variance <= 0.0)
    throw degenerate_error("in_out_params: zero-variance marginal is degenerate");
  double s = std::sqrt(m.variance);
  if (std::fabs(m.mean) > 1e-8 * std::max(s, 1.0))
    throw std::domain_error("in_out_params: the order-statistic machinery requires mean 0");
  double dd = static_cast<double>(d), kk = static_cast<double>(k);
  double s2 = m.variance;
  in_out_params p;
  p.mu_in = dd * s2 / kk;
  p.sigma_in = s2 * std::sqrt(dd * (m.kurtosis + kk - 2.0)) / kk;
  p.sigma_out = s2 * std::sqrt(dd / kk);
  p.k = k;
  p.n_catalog = n_catalog;
  p.d = d;
  if (!(p.sigma_in > 0.0))
    throw degenerate_error("in_out_params: sigma_in collapsed (kappa + k - 2 <= 0)");
  return p;
}

in_order_density::in_order_density(std::size_t i, const in_out_params& p) : p_(p), rank_(i) {
  if (i < 1 || i > p.k) throw std::domain_error("in_order_density: rank must be in [1, k]");
  double kk = static_cast<double>(p.k), ii = static_cast<double>(i);
  log_coef_ = std::lgamma(kk + 1.0) - std::lgamma(ii) - std::lgamma(kk - ii + 1.0);
}

double in_order_density::operator()(double x) const {
  double z = (x - p_.mu_in) / p_.sigma_in;
  double log_f = std_normal_log_cdf(z);
  double log_sf = std_normal_log_sf(z);
  double log_total = log_coef_ + pow_term(p_.k - rank_, log_f) + pow_term(rank_ - 1, log_sf) -
                     0.5 * z * z - log_sqrt_2pi - std::log(p_.sigma_in);
  return std::exp(log_total);
}

out_order_cdf::out_order_cdf(std::size_t i, const in_out_params& p) : p_(p), rank_(i) {
  if (i < 1 || i > p.k) throw std::domain_error("out_order_cdf: rank must be in [1, k]");
  if (p.n_catalog + i < 2 * p.k)
    throw std::domain_error("out_order_cdf: summation range undefined (N - 2k + i < 0)");
  std::uint64_t n_out = p.n_catalog - p.k;
  j_lo_ = p.n_catalog + i - 2 * p.k;
  j_hi_ = n_out;
  log_binom_.reserve(j_hi_ - j_lo_ + 1);
  for (std::uint64_t j = j_lo_; j <= j_hi_; ++j) log_binom_.push_back(log_binomial(n_out, j));
}

double out_order_cdf::operator()(double x) const {
  double z = x / p_.sigma_out;
  double log_f = std_normal_log_cdf(z);
  double log_sf = std_normal_log_sf(z);
  std::uint64_t n_out = p_.n_catalog - p_.k;

  // stable sum of exp(logC + j logPhi + (n-j) log(1-Phi)) over the top ranks
  double max_term = -std::numeric_limits<double>::infinity();
  std::size_t count = log_binom_.size();
  for (std::size_t t = 0; t < count; ++t) {
    std::uint64_t j = j_lo_ + t;
    double term = log_binom_[t] + pow_term(j, log_f) + pow_term(n_out - j, log_sf);
    if (term > max_term) max_term = term;
  }
  if (!(max_term > -std::numeric_limits<double>::infinity())) return 0.0;
  double acc = 0.0;
  for (std::size_t t = 0; t < count; ++t) {
    std::uint64_t j = j_lo_ + t;
    double term = log_binom_[t] + pow_term(j, log_f) + pow_term(n_out - j, log_sf);
    acc += std::exp(term - max_term);
  }
  double value = std::exp(max_term) * acc;
  return std::clamp(value, 0.0, 1.0);
}

in_order_density f_in_order_density(std::size_t i, const in_out_params& p) {
  return in_order_density(i, p);
}

out_order_cdf F_out_order_cdf(std::size_t i, const in_out_params& p) {
  return out_order_cdf(i, p);
}

consistency_breakdown consistency_analytic_breakdown(const moment_set& m, std::size_t k,
                                                     std::size_t n_catalog, std::size_t d,
                                                     const quadrature_options& quad) {
  require_k(k);
  if (2 * k > n_catalog)
    throw std::invalid_argument("consistency_analytic: need 2 <= k <= n_catalog/2");
  in_out_params p = in_out_params::from(m, k, n_catalog, d);
  double lo = p.mu_in - 12.0 * p.sigma_in;
  double hi = p.mu_in + 12.0 * p.sigma_in;

  consistency_breakdown out;
  out.p_plus.reserve(k);
  bool all_converged = true;
  double worst_err = 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    in_order_density f_in(i, p);
    out_order_cdf f_out(i, p);
    auto integrand = [&](double x) { return f_in(x) * f_out(x); };
    quadrature_result qr = adaptive_simpson(integrand, lo, hi, quad);
    out.p_plus.push_back(std::clamp(qr.value, 0.0, 1.0));
    out.error_estimate += qr.error_estimate;
    out.evaluations += qr.evaluations;
    if (!qr.converged) {
      all_converged = false;
      worst_err = std::max(worst_err, qr.error_estimate);
    }
    total += out.p_plus.back();
  }
  if (!all_converged)
    throw convergence_error("consistency_analytic: quadrature did not reach tolerance "
                            "(achieved error " + std::to_string(worst_err) + ")",
                            worst_err);
  out.score = std::clamp(total / static_cast<double>(k), 0.0, 1.0);
  return out;
}

double consistency_analytic(const moment_set& m, std::size_t k, std::size_t n_catalog,
                            std::size_t d, const quadrature_options& quad) {
  return consistency_analytic_breakdown(m, k, n_catalog, d, quad).score;
}

consistency_curve consistency_curve_analytic(const moment_set& m,
                                             std::span<const std::uint32_t> k_values,
                                             std::size_t n_catalog, std::size_t d,
                                             const quadrature_options& quad) {
  consistency_curve curve;
  curve.provenance = curve_provenance::analytic;
  curve.label = "analytic";
  for (std::uint32_t k : k_values) {
    curve.k_values.push_back(k);
    curve.scores.push_back(consistency_analytic(m, k, n_catalog, d, quad));
    curve.stderrs.push_back(0.0);
  }
  return curve;
}

}  // namespace avgemb
