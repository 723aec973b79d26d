/* avgemb — consistency of average embeddings, C API.
 *
 * All functions returning avgemb_status put a human-readable message behind
 * avgemb_last_error() on failure (thread-local).  Opaque handles must be
 * released with their matching _free(); _free(NULL) is a no-op.
 */
#ifndef AVGEMB_H
#define AVGEMB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avgemb_status {
  AVGEMB_OK = 0,
  AVGEMB_ERR_ARGUMENT = 1,    /* precondition violated (sizes, ranges, ...) */
  AVGEMB_ERR_DOMAIN = 2,      /* mathematically infeasible input */
  AVGEMB_ERR_DEGENERATE = 3,  /* quantity collapsed (zero variance, ...) */
  AVGEMB_ERR_IO = 4,          /* file missing/malformed */
  AVGEMB_ERR_CONVERGENCE = 5, /* quadrature missed its tolerance */
  AVGEMB_ERR_NOMEM = 6,
  AVGEMB_ERR_INTERNAL = 7
} avgemb_status;

/* message for the most recent failure on this thread; never NULL */
const char* avgemb_last_error(void);
const char* avgemb_version(void);
/* "avx512" | "avx2" | "scalar" — inner-product kernel selected at load */
const char* avgemb_kernel_name(void);

typedef struct avgemb_seed {
  uint64_t seed;
  uint64_t stream;
} avgemb_seed;

typedef struct avgemb_moments {
  double mean;
  double variance;
  double skewness;
  double kurtosis; /* plain convention: normal -> 3 */
} avgemb_moments;

typedef struct avgemb_normal_approx {
  double mean;
  double variance;
} avgemb_normal_approx;

typedef struct avgemb_quad_options {
  double rel_tol;      /* <= 0 -> default 1e-8 */
  int max_depth;       /* <= 0 -> default 48 */
} avgemb_quad_options;

/* ---- scalar special functions ---- */
double avgemb_erf(double x);
double avgemb_erfc(double x);
double avgemb_log_erfc(double x);
avgemb_status avgemb_normal_pdf(double x, double mean, double sd, double* out);
avgemb_status avgemb_normal_cdf(double x, double mean, double sd, double* out);
avgemb_status avgemb_normal_log_cdf(double x, double mean, double sd, double* out);
avgemb_status avgemb_normal_log_sf(double x, double mean, double sd, double* out);
avgemb_status avgemb_log_binomial(uint64_t n, uint64_t j, double* out);

/* ---- moments ---- */
avgemb_status avgemb_moments_check(const avgemb_moments* m);
avgemb_status avgemb_estimate_moments(const double* values, size_t count, avgemb_moments* out);

/* ---- distributions ---- */
typedef struct avgemb_dist avgemb_dist;
avgemb_status avgemb_dist_normal(double mean, double sd, avgemb_dist** out);
avgemb_status avgemb_dist_shifted_normal(double mean, double sd, avgemb_dist** out);
avgemb_status avgemb_dist_uniform(double lo, double hi, avgemb_dist** out);
avgemb_status avgemb_dist_rademacher(avgemb_dist** out);
avgemb_status avgemb_dist_beta(double alpha, double beta, avgemb_dist** out);
void avgemb_dist_free(avgemb_dist* dist);
void avgemb_dist_moments(const avgemb_dist* dist, avgemb_moments* out);
/* e.g. "normal(0,1)"; owned by the handle */
const char* avgemb_dist_name(const avgemb_dist* dist);

/* ---- CLT similarity approximations ---- */
avgemb_status avgemb_inner_product_moments(const avgemb_moments* mx, const avgemb_moments* my,
                                           uint64_t d, avgemb_normal_approx* out);
avgemb_status avgemb_inner_self_moments(const avgemb_moments* m, uint64_t d,
                                        avgemb_normal_approx* out);
avgemb_status avgemb_cov_xy_xz(const avgemb_moments* mx, const avgemb_moments* my,
                               const avgemb_moments* mz, uint64_t d, double* out);
avgemb_status avgemb_cov_xx_xy(const avgemb_moments* mx, const avgemb_moments* my, uint64_t d,
                               double* out);
avgemb_status avgemb_s_in_params(const avgemb_moments* m, uint64_t k, uint64_t d,
                                 avgemb_normal_approx* out);
avgemb_status avgemb_s_out_params(const avgemb_moments* m, uint64_t k, uint64_t d,
                                  avgemb_normal_approx* out);
avgemb_status avgemb_s_diff_params(const avgemb_moments* m, uint64_t k, uint64_t d,
                                   avgemb_normal_approx* out);
avgemb_status avgemb_prob_in_beats_out(const avgemb_moments* m, uint64_t k, uint64_t d,
                                       double* out);

/* consistency score for one k (zero-mean moments; 2 <= k <= n_catalog/2).
 * p_plus, when non-NULL, receives the k per-rank crossing probabilities. */
avgemb_status avgemb_consistency_analytic(const avgemb_moments* m, uint64_t k,
                                          uint64_t n_catalog, uint64_t d,
                                          const avgemb_quad_options* quad /* nullable */,
                                          double* score, double* p_plus /* k doubles or NULL */);

/* ---- matrices ---- */
typedef struct avgemb_matrix avgemb_matrix;

typedef enum avgemb_file_format { AVGEMB_FORMAT_BINARY = 0, AVGEMB_FORMAT_CSV = 1 } avgemb_file_format;

avgemb_status avgemb_matrix_synth(const avgemb_dist* dist, uint64_t n, uint64_t d,
                                  avgemb_seed seed, int threads, avgemb_matrix** out);
avgemb_status avgemb_matrix_load(const char* path, avgemb_file_format format, int csv_header,
                                 avgemb_matrix** out);
avgemb_status avgemb_matrix_save(const avgemb_matrix* m, const char* path,
                                 avgemb_file_format format);
avgemb_status avgemb_matrix_center(const avgemb_matrix* m, int threads, avgemb_matrix** out);
void avgemb_matrix_free(avgemb_matrix* m);

uint64_t avgemb_matrix_n_items(const avgemb_matrix* m);
uint64_t avgemb_matrix_dim(const avgemb_matrix* m);
const float* avgemb_matrix_data(const avgemb_matrix* m);
/* NULL when the matrix has no ids */
const char* avgemb_matrix_item_id(const avgemb_matrix* m, uint64_t i);
/* provenance string, e.g. "normal(0,1) n=1000 d=128 seed=7/0" */
const char* avgemb_matrix_label(const avgemb_matrix* m);
int avgemb_matrix_is_synthetic(const avgemb_matrix* m);

/* ---- evaluation ---- */
avgemb_status avgemb_centroid(const avgemb_matrix* m, const uint64_t* subset, uint64_t k,
                              double* out /* dim doubles */);
avgemb_status avgemb_top_k(const avgemb_matrix* m, const double* query, uint64_t k, int threads,
                           uint64_t* out /* k indices, best first */);
avgemb_status avgemb_precision_k(const avgemb_matrix* m, const uint64_t* subset, uint64_t k,
                                 int threads, double* out);
avgemb_status avgemb_consistency_mc(const avgemb_matrix* m, uint64_t k, uint64_t trials,
                                    avgemb_seed seed, int threads, double* score,
                                    double* std_error);
avgemb_status avgemb_similarity_sample(const avgemb_matrix* m, uint64_t pairs, avgemb_seed seed,
                                       double* out /* pairs doubles */);

/* ---- consistency curves ---- */
typedef struct avgemb_curve avgemb_curve;

avgemb_status avgemb_curve_analytic(const avgemb_moments* m, const uint32_t* k_values,
                                    size_t n_k, uint64_t n_catalog, uint64_t d,
                                    const avgemb_quad_options* quad /* nullable */,
                                    avgemb_curve** out);
avgemb_status avgemb_curve_mc(const avgemb_matrix* m, const uint32_t* k_values, size_t n_k,
                              uint64_t trials, avgemb_seed seed, int threads,
                              avgemb_curve** out);
void avgemb_curve_free(avgemb_curve* c);

size_t avgemb_curve_len(const avgemb_curve* c);
uint32_t avgemb_curve_k(const avgemb_curve* c, size_t i);
double avgemb_curve_score(const avgemb_curve* c, size_t i);
double avgemb_curve_stderr(const avgemb_curve* c, size_t i);
/* "analytic" | "simulated" | "empirical" */
const char* avgemb_curve_provenance(const avgemb_curve* c);
uint64_t avgemb_curve_trials(const avgemb_curve* c);

/* ---- diagnostics ---- */
typedef struct avgemb_diag avgemb_diag;

avgemb_status avgemb_diagnostics(const avgemb_matrix* m, uint64_t correlation_sample,
                                 avgemb_seed seed, int threads, avgemb_diag** out);
void avgemb_diag_free(avgemb_diag* d);

uint64_t avgemb_diag_dim(const avgemb_diag* d);
/* degenerate_out (nullable) set to 1 for a zero-variance dimension */
void avgemb_diag_dimension_moments(const avgemb_diag* d, uint64_t j, avgemb_moments* out,
                                   int* degenerate_out);
void avgemb_diag_pooled_moments(const avgemb_diag* d, avgemb_moments* out, int* degenerate_out);
double avgemb_diag_max_abs_correlation(const avgemb_diag* d);
uint64_t avgemb_diag_correlation_pairs(const avgemb_diag* d);
double avgemb_diag_mean_vector_norm(const avgemb_diag* d);
int avgemb_diag_centered(const avgemb_diag* d);

#ifdef __cplusplus
}
#endif

#endif /* AVGEMB_H */
