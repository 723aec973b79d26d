#pragma once

#include <cstddef>

namespace avgemb {

// inner product of a float32 row with a double query, accumulated in double;
// dispatches to the widest vector unit the CPU offers (decided once, so
// results on one machine never depend on thread count or call site)
double dot_fd(const float* row, const double* query, std::size_t d) noexcept;

// scores `count` consecutive rows (contiguous, stride d) against the query;
// out[r] is bitwise equal to dot_fd(rows + r * d, query, d), but the batched
// loop avoids per-row dispatch and prefetches ahead of the stream
void dot_fd_rows(const float* rows, std::size_t count, std::size_t d, const double* query,
                 double* out) noexcept;

const char* dot_kernel_name() noexcept;

}  // namespace avgemb
