#include "core/distribution.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace avgemb {

namespace {
std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

moment_set beta_moments(double a, double b) {
  double s = a + b;
  double mean = a / s;
  double var = a * b / (s * s * (s + 1.0));
  double skew = 2.0 * (b - a) * std::sqrt(s + 1.0) / ((s + 2.0) * std::sqrt(a * b));
  double excess = 6.0 * ((a - b) * (a - b) * (s + 1.0) - a * b * (s + 2.0)) /
                  (a * b * (s + 2.0) * (s + 3.0));
  return moment_set(mean, var, skew, excess + 3.0);
}
}  // namespace

distribution_spec distribution_spec::make_normal(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal: sd must be > 0");
  return distribution_spec(dist_kind::normal, mean, sd, moment_set(mean, sd * sd, 0.0, 3.0),
                           "normal(" + fmt_num(mean) + "," + fmt_num(sd) + ")");
}

distribution_spec distribution_spec::make_shifted_normal(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("shifted_normal: sd must be > 0");
  return distribution_spec(dist_kind::shifted_normal, mean, sd,
                           moment_set(mean, sd * sd, 0.0, 3.0),
                           "shifted_normal(" + fmt_num(mean) + "," + fmt_num(sd) + ")");
}

distribution_spec distribution_spec::make_uniform(double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("uniform: need hi > lo");
  double mean = 0.5 * (lo + hi);
  double var = (hi - lo) * (hi - lo) / 12.0;
  return distribution_spec(dist_kind::uniform, lo, hi, moment_set(mean, var, 0.0, 1.8),
                           "uniform(" + fmt_num(lo) + "," + fmt_num(hi) + ")");
}

distribution_spec distribution_spec::make_rademacher() {
  return distribution_spec(dist_kind::rademacher, 0.0, 0.0, moment_set(0.0, 1.0, 0.0, 1.0),
                           "rademacher");
}

distribution_spec distribution_spec::make_beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("beta: shape parameters must be > 0");
  return distribution_spec(dist_kind::beta, alpha, beta, beta_moments(alpha, beta),
                           "beta(" + fmt_num(alpha) + "," + fmt_num(beta) + ")");
}

double distribution_spec::sample(rng& r) const noexcept {
  switch (kind_) {
    case dist_kind::normal:
    case dist_kind::shifted_normal:
      return a_ + b_ * r.next_normal();
    case dist_kind::uniform:
      return a_ + (b_ - a_) * r.next_double();
    case dist_kind::rademacher:
      return (r.next_u32() & 1u) ? 1.0 : -1.0;
    case dist_kind::beta:
      return r.next_beta(a_, b_);
  }
  return 0.0;  // unreachable
}

}  // namespace avgemb
