#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "core/matrix.hpp"
#include "core/moments.hpp"
#include "core/rng.hpp"

namespace avgemb {

enum class file_format { binary, csv };

// binary layout: "EMB1", u16 version=1, u64 n_items, u32 dim, u8 dtype=0
// (float32), all little-endian, followed by the row-major payload
embedding_matrix load_embeddings(const std::filesystem::path& path, file_format format,
                                 bool csv_header = false);
void write_embeddings(const embedding_matrix& m, const std::filesystem::path& path,
                      file_format format);

// subtract per-dimension means; ids and provenance carried over
embedding_matrix center(const embedding_matrix& m, int threads = 0);

struct moment_estimate {
  moment_set moments;
  bool degenerate = false;  // zero variance; skewness/kurtosis not meaningful
};

struct diagnostics_report {
  std::vector<moment_estimate> per_dimension;
  moment_estimate pooled;
  double max_abs_offdiag_correlation = 0.0;
  std::size_t correlation_pairs_used = 0;
  double mean_vector_norm = 0.0;
  bool centered = false;  // every |per-dim mean| <= 1e-6 * pooled sd
};

// moment/correlation health check of the i.i.d. assumptions; examines all
// dimension pairs when d <= 256, otherwise a seeded sample of at most
// `correlation_sample` pairs
diagnostics_report diagnostics(const embedding_matrix& m, std::size_t correlation_sample,
                               random_seed seed, int threads = 0);

}  // namespace avgemb
