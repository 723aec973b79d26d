#pragma once

#include <string>

#include "core/moments.hpp"
#include "core/rng.hpp"

namespace avgemb {

enum class dist_kind {
  normal,          // N(mean, sd^2)
  uniform,         // Uniform(lo, hi)
  rademacher,      // +-1 with probability 1/2
  beta,            // Beta(alpha, beta)
  shifted_normal,  // N(mean, sd^2), kept distinct for labeling off-center runs
};

// scalar marginal with its exact theoretical moments attached
class distribution_spec {
public:
  static distribution_spec make_normal(double mean, double sd);
  static distribution_spec make_uniform(double lo, double hi);
  static distribution_spec make_rademacher();
  static distribution_spec make_beta(double alpha, double beta);
  static distribution_spec make_shifted_normal(double mean, double sd);

  dist_kind kind() const noexcept { return kind_; }
  const moment_set& moments() const noexcept { return moments_; }
  // e.g. "normal(0,1)", "beta(2,2)", "rademacher"
  const std::string& name() const noexcept { return name_; }
  double param_a() const noexcept { return a_; }
  double param_b() const noexcept { return b_; }

  double sample(rng& r) const noexcept;

private:
  distribution_spec(dist_kind kind, double a, double b, moment_set m, std::string name)
      : kind_(kind), a_(a), b_(b), moments_(m), name_(std::move(name)) {}

  dist_kind kind_;
  double a_, b_;
  moment_set moments_;
  std::string name_;
};

}  // namespace avgemb
