#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "core/errors.hpp"
#include "core/moments.hpp"
#include "core/rng.hpp"

using avgemb::moment_set;

TEST_CASE("moment_set enforces feasibility") {
  CHECK_NOTHROW(moment_set(0.0, 1.0, 0.0, 1.0));      // two-point boundary
  CHECK_NOTHROW(moment_set(0.5, 2.0, -1.0, 2.5));     // kurt >= skew^2+1
  CHECK_THROWS_AS(moment_set(0.0, -1.0, 0.0, 3.0), std::domain_error);
  CHECK_THROWS_AS(moment_set(0.0, 1.0, 0.0, 0.99), std::domain_error);
  CHECK_THROWS_AS(moment_set(0.0, 1.0, 2.0, 4.0), std::domain_error);  // needs kurt >= 5
  CHECK_THROWS_AS(moment_set(std::nan(""), 1.0, 0.0, 3.0), std::domain_error);
  CHECK_THROWS_AS(moment_set(0.0, std::numeric_limits<double>::infinity(), 0.0, 3.0),
                  std::domain_error);
}

TEST_CASE("estimate_moments input validation") {
  std::vector<double> three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(avgemb::estimate_moments(three), std::invalid_argument);
  std::vector<double> flat(16, 4.25);
  CHECK_THROWS_AS(avgemb::estimate_moments(flat), avgemb::degenerate_error);
}

TEST_CASE("estimate_moments on a balanced two-point sample is exact") {
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) {
    v.push_back(-1.0);
    v.push_back(1.0);
  }
  moment_set m = avgemb::estimate_moments(v);
  CHECK(m.mean == 0.0);
  CHECK(m.variance == 1.0);
  CHECK(m.skewness == 0.0);
  CHECK(m.kurtosis == 1.0);
}

TEST_CASE("estimate_moments matches hand arithmetic (population convention)") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  moment_set m = avgemb::estimate_moments(v);
  CHECK(m.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(m.variance == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(m.skewness == doctest::Approx(0.0));
  // m4 = 2.5625, m2^2 = 1.5625 -> plain kurtosis 1.64
  CHECK(m.kurtosis == doctest::Approx(1.64).epsilon(1e-14));
}

TEST_CASE("large normal sample recovers (0,1,0,3) within 5 standard errors") {
  avgemb::rng r(avgemb::random_seed{21, 0});
  constexpr int n = 200000;
  std::vector<double> v(n);
  for (double& x : v) x = r.next_normal();
  moment_set m = avgemb::estimate_moments(v);
  CHECK(std::fabs(m.mean) < 5.0 / std::sqrt((double)n));
  CHECK(std::fabs(m.variance - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::fabs(m.skewness) < 5.0 * std::sqrt(6.0 / n));
  CHECK(std::fabs(m.kurtosis - 3.0) < 5.0 * std::sqrt(24.0 / n));
}
