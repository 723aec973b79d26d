#include "core/dot_kernel.hpp"

#include <algorithm>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define AVGEMB_X86 1
#endif

namespace avgemb {

namespace {

// prefetch far enough ahead to hide dram latency without flushing l1; with
// short rows that means several rows ahead, with long rows just one
std::size_t prefetch_rows(std::size_t d) noexcept {
  return std::max<std::size_t>(1, 4096 / std::max<std::size_t>(1, d * sizeof(float)));
}

inline double dot_fd_scalar_one(const float* row, const double* query, std::size_t d) noexcept {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    a0 += static_cast<double>(row[i]) * query[i];
    a1 += static_cast<double>(row[i + 1]) * query[i + 1];
    a2 += static_cast<double>(row[i + 2]) * query[i + 2];
    a3 += static_cast<double>(row[i + 3]) * query[i + 3];
  }
  double tail = 0.0;
  for (; i < d; ++i) tail += static_cast<double>(row[i]) * query[i];
  return (a0 + a1) + (a2 + a3) + tail;
}

double dot_fd_scalar(const float* row, const double* query, std::size_t d) noexcept {
  return dot_fd_scalar_one(row, query, d);
}

void dot_fd_rows_scalar(const float* rows, std::size_t count, std::size_t d,
                        const double* query, double* out) noexcept {
  std::size_t ahead = prefetch_rows(d) * d;
  for (std::size_t r = 0; r < count; ++r) {
    const float* row = rows + r * d;
    for (std::size_t b = 0; b < d * sizeof(float); b += 64)
      __builtin_prefetch(reinterpret_cast<const char*>(row + ahead) + b, 0, 3);
    out[r] = dot_fd_scalar_one(row, query, d);
  }
}

#ifdef AVGEMB_X86

__attribute__((target("avx2,fma"), always_inline)) inline double dot_fd_avx2_one(
    const float* row, const double* query, std::size_t d) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= d; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(row + i)),
                           _mm256_loadu_pd(query + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(row + i + 4)),
                           _mm256_loadu_pd(query + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(row + i + 8)),
                           _mm256_loadu_pd(query + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(row + i + 12)),
                           _mm256_loadu_pd(query + i + 12), acc3);
  }
  for (; i + 4 <= d; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(row + i)),
                           _mm256_loadu_pd(query + i), acc0);
  }
  __m256d acc = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  __m128d s = _mm_add_pd(lo, hi);
  double total = _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
  for (; i < d; ++i) total += static_cast<double>(row[i]) * query[i];
  return total;
}

__attribute__((target("avx2,fma"))) double dot_fd_avx2(const float* row, const double* query,
                                                       std::size_t d) noexcept {
  return dot_fd_avx2_one(row, query, d);
}

__attribute__((target("avx2,fma"))) void dot_fd_rows_avx2(const float* rows, std::size_t count,
                                                          std::size_t d, const double* query,
                                                          double* out) noexcept {
  std::size_t ahead = prefetch_rows(d) * d;
  for (std::size_t r = 0; r < count; ++r) {
    const float* row = rows + r * d;
    // hint the lines this row's successor occupies; prefetch never faults,
    // even past the end of the buffer
    for (std::size_t b = 0; b < d * sizeof(float); b += 64)
      _mm_prefetch(reinterpret_cast<const char*>(row + ahead) + b, _MM_HINT_T0);
    out[r] = dot_fd_avx2_one(row, query, d);
  }
}

__attribute__((target("avx512f"), always_inline)) inline double dot_fd_avx512_one(
    const float* row, const double* query, std::size_t d) noexcept {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  __m512d acc2 = _mm512_setzero_pd();
  __m512d acc3 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 32 <= d; i += 32) {
    acc0 = _mm512_fmadd_pd(_mm512_cvtps_pd(_mm256_loadu_ps(row + i)),
                           _mm512_loadu_pd(query + i), acc0);
    acc1 = _mm512_fmadd_pd(_mm512_cvtps_pd(_mm256_loadu_ps(row + i + 8)),
                           _mm512_loadu_pd(query + i + 8), acc1);
    acc2 = _mm512_fmadd_pd(_mm512_cvtps_pd(_mm256_loadu_ps(row + i + 16)),
                           _mm512_loadu_pd(query + i + 16), acc2);
    acc3 = _mm512_fmadd_pd(_mm512_cvtps_pd(_mm256_loadu_ps(row + i + 24)),
                           _mm512_loadu_pd(query + i + 24), acc3);
  }
  for (; i + 8 <= d; i += 8) {
    acc0 = _mm512_fmadd_pd(_mm512_cvtps_pd(_mm256_loadu_ps(row + i)),
                           _mm512_loadu_pd(query + i), acc0);
  }
  double total = _mm512_reduce_add_pd(
      _mm512_add_pd(_mm512_add_pd(acc0, acc1), _mm512_add_pd(acc2, acc3)));
  for (; i < d; ++i) total += static_cast<double>(row[i]) * query[i];
  return total;
}

__attribute__((target("avx512f"))) double dot_fd_avx512(const float* row, const double* query,
                                                        std::size_t d) noexcept {
  return dot_fd_avx512_one(row, query, d);
}

__attribute__((target("avx512f"))) void dot_fd_rows_avx512(const float* rows,
                                                           std::size_t count, std::size_t d,
                                                           const double* query,
                                                           double* out) noexcept {
  std::size_t ahead = prefetch_rows(d) * d;
  for (std::size_t r = 0; r < count; ++r) {
    const float* row = rows + r * d;
    for (std::size_t b = 0; b < d * sizeof(float); b += 64)
      _mm_prefetch(reinterpret_cast<const char*>(row + ahead) + b, _MM_HINT_T0);
    out[r] = dot_fd_avx512_one(row, query, d);
  }
}

#endif  // AVGEMB_X86

using kernel_fn = double (*)(const float*, const double*, std::size_t) noexcept;
using rows_fn = void (*)(const float*, std::size_t, std::size_t, const double*,
                         double*) noexcept;

struct kernel_choice {
  kernel_fn fn;
  rows_fn rows;
  const char* name;
};

kernel_choice pick_kernel() noexcept {
#ifdef AVGEMB_X86
  if (__builtin_cpu_supports("avx512f")) return {dot_fd_avx512, dot_fd_rows_avx512, "avx512"};
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return {dot_fd_avx2, dot_fd_rows_avx2, "avx2"};
#endif
  return {dot_fd_scalar, dot_fd_rows_scalar, "scalar"};
}

const kernel_choice g_kernel = pick_kernel();

}  // namespace

double dot_fd(const float* row, const double* query, std::size_t d) noexcept {
  return g_kernel.fn(row, query, d);
}

void dot_fd_rows(const float* rows, std::size_t count, std::size_t d, const double* query,
                 double* out) noexcept {
  g_kernel.rows(rows, count, d, query, out);
}

const char* dot_kernel_name() noexcept { return g_kernel.name; }

}  // namespace avgemb
