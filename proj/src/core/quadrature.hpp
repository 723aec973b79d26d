#pragma once

#include <cmath>
#include <cstddef>

namespace avgemb {

struct quadrature_options {
  double rel_tol = 1e-8;
  int max_depth = 48;
  long max_evaluations = 4000000;
};

struct quadrature_result {
  double value = 0.0;
  double error_estimate = 0.0;  // accumulated |local Richardson error|
  bool converged = true;
  long evaluations = 0;
};

namespace detail {

template <typename F>
double adapt_cell(const F& f, double a, double fa, double m, double fm, double b, double fb,
                  double whole, double eps, int depth, long max_evals,
                  quadrature_result& out) {
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  out.evaluations += 2;
  double h6 = (b - a) / 12.0;
  double left = h6 * (fa + 4.0 * flm + fm);
  double right = h6 * (fm + 4.0 * frm + fb);
  double err = (left + right - whole) / 15.0;
  bool interval_exhausted = !(lm > a && rm > m);  // bisection hit double resolution
  if (std::fabs(err) <= eps || interval_exhausted) {
    out.error_estimate += std::fabs(err);
    return left + right + err;
  }
  if (depth <= 0 || out.evaluations >= max_evals) {
    out.converged = false;
    out.error_estimate += std::fabs(err);
    return left + right + err;
  }
  return adapt_cell(f, a, fa, lm, flm, m, fm, left, 0.5 * eps, depth - 1, max_evals, out) +
         adapt_cell(f, m, fm, rm, frm, b, fb, right, 0.5 * eps, depth - 1, max_evals, out);
}

}  // namespace detail

// adaptive Simpson with a 64-cell bootstrap pass; the bootstrap fixes the
// magnitude that "relative" tolerance refers to, so sharply peaked integrands
// cannot fool a coarse first estimate
template <typename F>
quadrature_result adaptive_simpson(const F& f, double a, double b,
                                   const quadrature_options& opt = {}) {
  constexpr int cells = 64;
  quadrature_result res;
  if (!(b > a)) return res;

  double h = (b - a) / cells;
  double fx[2 * cells + 1];
  for (int i = 0; i <= 2 * cells; ++i) {
    fx[i] = f(a + 0.5 * h * i);
    ++res.evaluations;
  }
  double coarse = 0.0;
  for (int c = 0; c < cells; ++c)
    coarse += h / 6.0 * (fx[2 * c] + 4.0 * fx[2 * c + 1] + fx[2 * c + 2]);

  double scale = std::fabs(coarse);
  if (scale == 0.0) scale = 1e-300;  // zero-looking integrand: fall back to a tiny absolute floor
  double eps_cell = opt.rel_tol * scale / cells;

  double total = 0.0;
  for (int c = 0; c < cells; ++c) {
    double ca = a + c * h;
    double cb = ca + h;
    double cm = ca + 0.5 * h;
    double whole = h / 6.0 * (fx[2 * c] + 4.0 * fx[2 * c + 1] + fx[2 * c + 2]);
    total += detail::adapt_cell(f, ca, fx[2 * c], cm, fx[2 * c + 1], cb, fx[2 * c + 2], whole,
                                eps_cell, opt.max_depth, opt.max_evaluations, res);
  }
  res.value = total;
  return res;
}

}  // namespace avgemb
