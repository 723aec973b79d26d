#include "avgemb/avgemb.h"

#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include "core/analytic.hpp"
#include "core/dataset_io.hpp"
#include "core/distribution.hpp"
#include "core/dot_kernel.hpp"
#include "core/errors.hpp"
#include "core/evaluator.hpp"
#include "core/moments.hpp"
#include "core/special.hpp"
#include "core/synth.hpp"

struct avgemb_dist {
  avgemb::distribution_spec spec;
};
struct avgemb_matrix {
  avgemb::embedding_matrix m;
};
struct avgemb_curve {
  avgemb::consistency_curve c;
};
struct avgemb_diag {
  avgemb::diagnostics_report r;
};

namespace {

thread_local std::string t_last_error = "no error";

avgemb_status fail(avgemb_status s, const char* what) noexcept {
  try {
    t_last_error = what;
  } catch (...) {
  }
  return s;
}

template <typename F>
avgemb_status wrap(F&& f) noexcept {
  try {
    f();
    return AVGEMB_OK;
  } catch (const avgemb::degenerate_error& e) {
    return fail(AVGEMB_ERR_DEGENERATE, e.what());
  } catch (const avgemb::convergence_error& e) {
    return fail(AVGEMB_ERR_CONVERGENCE, e.what());
  } catch (const avgemb::io_error& e) {
    return fail(AVGEMB_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(AVGEMB_ERR_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(AVGEMB_ERR_DOMAIN, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AVGEMB_ERR_NOMEM, "out of memory");
  } catch (const std::exception& e) {
    return fail(AVGEMB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AVGEMB_ERR_INTERNAL, "unknown error");
  }
}

avgemb_status require(bool ok, const char* what) noexcept {
  return ok ? AVGEMB_OK : fail(AVGEMB_ERR_ARGUMENT, what);
}

avgemb::moment_set to_moments(const avgemb_moments* m) {
  return avgemb::moment_set(m->mean, m->variance, m->skewness, m->kurtosis);
}

avgemb_moments from_moments(const avgemb::moment_set& m) noexcept {
  return {m.mean, m.variance, m.skewness, m.kurtosis};
}

avgemb::random_seed to_seed(avgemb_seed s) noexcept { return {s.seed, s.stream}; }

avgemb::quadrature_options to_quad(const avgemb_quad_options* q) noexcept {
  avgemb::quadrature_options opt;
  if (q) {
    if (q->rel_tol > 0.0) opt.rel_tol = q->rel_tol;
    if (q->max_depth > 0) opt.max_depth = q->max_depth;
  }
  return opt;
}

}  // namespace

extern "C" {

const char* avgemb_last_error(void) { return t_last_error.c_str(); }

const char* avgemb_version(void) { return "0.1.0"; }

const char* avgemb_kernel_name(void) { return avgemb::dot_kernel_name(); }

/* ---- scalar special functions ---- */

double avgemb_erf(double x) { return avgemb::erf(x); }
double avgemb_erfc(double x) { return avgemb::erfc(x); }
double avgemb_log_erfc(double x) { return avgemb::log_erfc(x); }

avgemb_status avgemb_normal_pdf(double x, double mean, double sd, double* out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = avgemb::normal_pdf(x, mean, sd); });
}

avgemb_status avgemb_normal_cdf(double x, double mean, double sd, double* out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = avgemb::normal_cdf(x, mean, sd); });
}

avgemb_status avgemb_normal_log_cdf(double x, double mean, double sd, double* out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = avgemb::normal_log_cdf(x, mean, sd); });
}

avgemb_status avgemb_normal_log_sf(double x, double mean, double sd, double* out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = avgemb::normal_log_sf(x, mean, sd); });
}

avgemb_status avgemb_log_binomial(uint64_t n, uint64_t j, double* out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = avgemb::log_binomial(n, j); });
}

/* ---- moments ---- */

avgemb_status avgemb_moments_check(const avgemb_moments* m) {
  if (auto s = require(m != nullptr, "moments must not be NULL")) return s;
  return wrap([&] { to_moments(m); });
}

avgemb_status avgemb_estimate_moments(const double* values, size_t count, avgemb_moments* out) {
  if (auto s = require(values != nullptr && out != nullptr, "values/out must not be NULL"))
    return s;
  return wrap([&] { *out = from_moments(avgemb::estimate_moments({values, count})); });
}

/* ---- distributions ---- */

avgemb_status avgemb_dist_normal(double mean, double sd, avgemb_dist** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = new avgemb_dist{avgemb::distribution_spec::make_normal(mean, sd)}; });
}

avgemb_status avgemb_dist_shifted_normal(double mean, double sd, avgemb_dist** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap(
      [&] { *out = new avgemb_dist{avgemb::distribution_spec::make_shifted_normal(mean, sd)}; });
}

avgemb_status avgemb_dist_uniform(double lo, double hi, avgemb_dist** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = new avgemb_dist{avgemb::distribution_spec::make_uniform(lo, hi)}; });
}

avgemb_status avgemb_dist_rademacher(avgemb_dist** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = new avgemb_dist{avgemb::distribution_spec::make_rademacher()}; });
}

avgemb_status avgemb_dist_beta(double alpha, double beta, avgemb_dist** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return wrap([&] { *out = new avgemb_dist{avgemb::distribution_spec::make_beta(alpha, beta)}; });
}

void avgemb_dist_free(avgemb_dist* dist) { delete dist; }

void avgemb_dist_moments(const avgemb_dist* dist, avgemb_moments* out) {
  if (!dist || !out) return;
  *out = from_moments(dist->spec.moments());
}

const char* avgemb_dist_name(const avgemb_dist* dist) {
  return dist ? dist->spec.name().c_str() : "";
}

/* ---- CLT similarity approximations ---- */

avgemb_status avgemb_inner_product_moments(const avgemb_moments* mx, const avgemb_moments* my,
                                           uint64_t d, avgemb_normal_approx* out) {
  if (auto s = require(mx && my && out, "mx/my/out must not be NULL")) return s;
  return wrap([&] {
    auto r = avgemb::inner_product_moments(to_moments(mx), to_moments(my), d);
    *out = {r.mean, r.variance};
  });
}

avgemb_status avgemb_inner_self_moments(const avgemb_moments* m, uint64_t d,
                                        avgemb_normal_approx* out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] {
    auto r = avgemb::inner_self_moments(to_moments(m), d);
    *out = {r.mean, r.variance};
  });
}

avgemb_status avgemb_cov_xy_xz(const avgemb_moments* mx, const avgemb_moments* my,
                               const avgemb_moments* mz, uint64_t d, double* out) {
  if (auto s = require(mx && my && mz && out, "arguments must not be NULL")) return s;
  return wrap(
      [&] { *out = avgemb::cov_xy_xz(to_moments(mx), to_moments(my), to_moments(mz), d); });
}

avgemb_status avgemb_cov_xx_xy(const avgemb_moments* mx, const avgemb_moments* my, uint64_t d,
                               double* out) {
  if (auto s = require(mx && my && out, "arguments must not be NULL")) return s;
  return wrap([&] { *out = avgemb::cov_xx_xy(to_moments(mx), to_moments(my), d); });
}

avgemb_status avgemb_s_in_params(const avgemb_moments* m, uint64_t k, uint64_t d,
                                 avgemb_normal_approx* out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] {
    auto r = avgemb::s_in_params(to_moments(m), k, d);
    *out = {r.mean, r.variance};
  });
}

avgemb_status avgemb_s_out_params(const avgemb_moments* m, uint64_t k, uint64_t d,
                                  avgemb_normal_approx* out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] {
    auto r = avgemb::s_out_params(to_moments(m), k, d);
    *out = {r.mean, r.variance};
  });
}

avgemb_status avgemb_s_diff_params(const avgemb_moments* m, uint64_t k, uint64_t d,
                                   avgemb_normal_approx* out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] {
    auto r = avgemb::s_diff_params(to_moments(m), k, d);
    *out = {r.mean, r.variance};
  });
}

avgemb_status avgemb_prob_in_beats_out(const avgemb_moments* m, uint64_t k, uint64_t d,
                                       double* out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] { *out = avgemb::prob_in_beats_out(to_moments(m), k, d); });
}

avgemb_status avgemb_consistency_analytic(const avgemb_moments* m, uint64_t k,
                                          uint64_t n_catalog, uint64_t d,
                                          const avgemb_quad_options* quad, double* score,
                                          double* p_plus) {
  if (auto s = require(m && score, "m/score must not be NULL")) return s;
  return wrap([&] {
    auto b = avgemb::consistency_analytic_breakdown(to_moments(m), k, n_catalog, d, to_quad(quad));
    *score = b.score;
    if (p_plus)
      for (size_t i = 0; i < b.p_plus.size(); ++i) p_plus[i] = b.p_plus[i];
  });
}

/* ---- matrices ---- */

avgemb_status avgemb_matrix_synth(const avgemb_dist* dist, uint64_t n, uint64_t d,
                                  avgemb_seed seed, int threads, avgemb_matrix** out) {
  if (auto s = require(dist && out, "dist/out must not be NULL")) return s;
  return wrap([&] {
    *out = new avgemb_matrix{avgemb::synth(dist->spec, n, d, to_seed(seed), threads)};
  });
}

avgemb_status avgemb_matrix_load(const char* path, avgemb_file_format format, int csv_header,
                                 avgemb_matrix** out) {
  if (auto s = require(path && out, "path/out must not be NULL")) return s;
  return wrap([&] {
    *out = new avgemb_matrix{avgemb::load_embeddings(
        path, format == AVGEMB_FORMAT_BINARY ? avgemb::file_format::binary
                                             : avgemb::file_format::csv,
        csv_header != 0)};
  });
}

avgemb_status avgemb_matrix_save(const avgemb_matrix* m, const char* path,
                                 avgemb_file_format format) {
  if (auto s = require(m && path, "m/path must not be NULL")) return s;
  return wrap([&] {
    avgemb::write_embeddings(m->m, path,
                             format == AVGEMB_FORMAT_BINARY ? avgemb::file_format::binary
                                                            : avgemb::file_format::csv);
  });
}

avgemb_status avgemb_matrix_center(const avgemb_matrix* m, int threads, avgemb_matrix** out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] { *out = new avgemb_matrix{avgemb::center(m->m, threads)}; });
}

void avgemb_matrix_free(avgemb_matrix* m) { delete m; }

uint64_t avgemb_matrix_n_items(const avgemb_matrix* m) { return m ? m->m.n_items() : 0; }
uint64_t avgemb_matrix_dim(const avgemb_matrix* m) { return m ? m->m.dim() : 0; }
const float* avgemb_matrix_data(const avgemb_matrix* m) {
  return m ? m->m.values().data() : nullptr;
}

const char* avgemb_matrix_item_id(const avgemb_matrix* m, uint64_t i) {
  if (!m || !m->m.has_ids() || i >= m->m.n_items()) return nullptr;
  return m->m.item_ids()[i].c_str();
}

const char* avgemb_matrix_label(const avgemb_matrix* m) {
  return m ? m->m.label().c_str() : "";
}

int avgemb_matrix_is_synthetic(const avgemb_matrix* m) {
  return m && m->m.origin() == avgemb::matrix_origin::synthetic ? 1 : 0;
}

/* ---- evaluation ---- */

avgemb_status avgemb_centroid(const avgemb_matrix* m, const uint64_t* subset, uint64_t k,
                              double* out) {
  if (auto s = require(m && subset && out, "m/subset/out must not be NULL")) return s;
  return wrap([&] {
    auto mu = avgemb::centroid(m->m, {subset, static_cast<size_t>(k)});
    std::memcpy(out, mu.data(), mu.size() * sizeof(double));
  });
}

avgemb_status avgemb_top_k(const avgemb_matrix* m, const double* query, uint64_t k, int threads,
                           uint64_t* out) {
  if (auto s = require(m && query && out, "m/query/out must not be NULL")) return s;
  return wrap([&] {
    auto ids = avgemb::top_k(m->m, {query, m->m.dim()}, k, threads);
    std::memcpy(out, ids.data(), ids.size() * sizeof(uint64_t));
  });
}

avgemb_status avgemb_precision_k(const avgemb_matrix* m, const uint64_t* subset, uint64_t k,
                                 int threads, double* out) {
  if (auto s = require(m && subset && out, "m/subset/out must not be NULL")) return s;
  return wrap(
      [&] { *out = avgemb::precision_k(m->m, {subset, static_cast<size_t>(k)}, threads); });
}

avgemb_status avgemb_consistency_mc(const avgemb_matrix* m, uint64_t k, uint64_t trials,
                                    avgemb_seed seed, int threads, double* score,
                                    double* std_error) {
  if (auto s = require(m && score, "m/score must not be NULL")) return s;
  return wrap([&] {
    auto e = avgemb::consistency_mc(m->m, k, trials, to_seed(seed), threads);
    *score = e.score;
    if (std_error) *std_error = e.std_error;
  });
}

avgemb_status avgemb_similarity_sample(const avgemb_matrix* m, uint64_t pairs, avgemb_seed seed,
                                       double* out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] {
    auto v = avgemb::similarity_sample(m->m, pairs, to_seed(seed));
    std::memcpy(out, v.data(), v.size() * sizeof(double));
  });
}

/* ---- curves ---- */

avgemb_status avgemb_curve_analytic(const avgemb_moments* m, const uint32_t* k_values,
                                    size_t n_k, uint64_t n_catalog, uint64_t d,
                                    const avgemb_quad_options* quad, avgemb_curve** out) {
  if (auto s = require(m && k_values && out && n_k > 0, "m/k_values/out must be provided"))
    return s;
  return wrap([&] {
    *out = new avgemb_curve{avgemb::consistency_curve_analytic(
        to_moments(m), {k_values, n_k}, n_catalog, d, to_quad(quad))};
  });
}

avgemb_status avgemb_curve_mc(const avgemb_matrix* m, const uint32_t* k_values, size_t n_k,
                              uint64_t trials, avgemb_seed seed, int threads,
                              avgemb_curve** out) {
  if (auto s = require(m && k_values && out && n_k > 0, "m/k_values/out must be provided"))
    return s;
  return wrap([&] {
    *out = new avgemb_curve{
        avgemb::consistency_curve_mc(m->m, {k_values, n_k}, trials, to_seed(seed), threads)};
  });
}

void avgemb_curve_free(avgemb_curve* c) { delete c; }

size_t avgemb_curve_len(const avgemb_curve* c) { return c ? c->c.k_values.size() : 0; }
uint32_t avgemb_curve_k(const avgemb_curve* c, size_t i) { return c->c.k_values[i]; }
double avgemb_curve_score(const avgemb_curve* c, size_t i) { return c->c.scores[i]; }
double avgemb_curve_stderr(const avgemb_curve* c, size_t i) { return c->c.stderrs[i]; }
const char* avgemb_curve_provenance(const avgemb_curve* c) {
  return c ? avgemb::provenance_name(c->c.provenance) : "?";
}
uint64_t avgemb_curve_trials(const avgemb_curve* c) { return c ? c->c.trials : 0; }

/* ---- diagnostics ---- */

avgemb_status avgemb_diagnostics(const avgemb_matrix* m, uint64_t correlation_sample,
                                 avgemb_seed seed, int threads, avgemb_diag** out) {
  if (auto s = require(m && out, "m/out must not be NULL")) return s;
  return wrap([&] {
    *out = new avgemb_diag{
        avgemb::diagnostics(m->m, correlation_sample, to_seed(seed), threads)};
  });
}

void avgemb_diag_free(avgemb_diag* d) { delete d; }

uint64_t avgemb_diag_dim(const avgemb_diag* d) { return d ? d->r.per_dimension.size() : 0; }

void avgemb_diag_dimension_moments(const avgemb_diag* d, uint64_t j, avgemb_moments* out,
                                   int* degenerate_out) {
  if (!d || !out || j >= d->r.per_dimension.size()) return;
  *out = from_moments(d->r.per_dimension[j].moments);
  if (degenerate_out) *degenerate_out = d->r.per_dimension[j].degenerate ? 1 : 0;
}

void avgemb_diag_pooled_moments(const avgemb_diag* d, avgemb_moments* out, int* degenerate_out) {
  if (!d || !out) return;
  *out = from_moments(d->r.pooled.moments);
  if (degenerate_out) *degenerate_out = d->r.pooled.degenerate ? 1 : 0;
}

double avgemb_diag_max_abs_correlation(const avgemb_diag* d) {
  return d ? d->r.max_abs_offdiag_correlation : 0.0;
}

uint64_t avgemb_diag_correlation_pairs(const avgemb_diag* d) {
  return d ? d->r.correlation_pairs_used : 0;
}

double avgemb_diag_mean_vector_norm(const avgemb_diag* d) {
  return d ? d->r.mean_vector_norm : 0.0;
}

int avgemb_diag_centered(const avgemb_diag* d) { return d && d->r.centered ? 1 : 0; }

}  // extern "C"
