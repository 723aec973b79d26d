#include <doctest.h>

#include <cmath>

#include "core/quadrature.hpp"
#include "core/special.hpp"

using avgemb::adaptive_simpson;
using avgemb::quadrature_options;

TEST_CASE("polynomials up to cubic are integrated exactly") {
  auto cubic = [](double x) { return 3.0 * x * x * x - 2.0 * x * x + x - 5.0; };
  auto r = adaptive_simpson(cubic, -1.0, 2.0, {});
  // antiderivative: 3/4 x^4 - 2/3 x^3 + x^2/2 - 5x
  double exact = (0.75 * 16 - 2.0 / 3.0 * 8 + 2.0 - 10.0) - (0.75 + 2.0 / 3.0 + 0.5 + 5.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("smooth transcendental integrand meets the relative tolerance") {
  auto f = [](double x) { return std::sin(x); };
  auto r = adaptive_simpson(f, 0.0, 3.14159265358979323846, {});
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.evaluations > 0);
}

TEST_CASE("sharp peak inside a wide interval is not missed") {
  // gaussian of width 1e-2 at 0.3137 inside [0, 1]
  auto f = [](double x) { return avgemb::normal_pdf(x, 0.3137, 0.01); };
  auto r = adaptive_simpson(f, 0.0, 1.0, {});
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("tight tolerance is honored on a peaked integrand") {
  auto f = [](double x) { return avgemb::normal_pdf(x, 0.0, 1.0); };
  quadrature_options opt;
  opt.rel_tol = 1e-12;
  auto r = adaptive_simpson(f, -12.0, 12.0, opt);
  CHECK(r.converged);
  CHECK(std::fabs(r.value - 1.0) < 1e-12);
}

TEST_CASE("non-convergence is reported, with the achieved estimate attached") {
  auto step = [](double x) { return x < 0.37137 ? 0.0 : 1.0; };
  quadrature_options opt;
  opt.rel_tol = 1e-13;
  opt.max_depth = 2;
  auto r = adaptive_simpson(step, 0.0, 1.0, opt);
  CHECK_FALSE(r.converged);
  CHECK(r.error_estimate > 0.0);
  // the estimate is still in the right neighborhood
  CHECK(std::fabs(r.value - (1.0 - 0.37137)) < 0.01);
}

TEST_CASE("degenerate and empty intervals") {
  auto f = [](double x) { return x; };
  auto r = adaptive_simpson(f, 2.0, 2.0, {});
  CHECK(r.value == 0.0);
  auto r2 = adaptive_simpson(f, 3.0, 2.0, {});
  CHECK(r2.value == 0.0);
}

TEST_CASE("identically zero integrand converges to zero") {
  auto f = [](double) { return 0.0; };
  auto r = adaptive_simpson(f, 0.0, 1.0, {});
  CHECK(r.converged);
  CHECK(r.value == 0.0);
}
