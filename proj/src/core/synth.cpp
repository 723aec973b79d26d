#include "core/synth.hpp"

#include <stdexcept>

#include "core/parallel.hpp"

namespace avgemb {

embedding_matrix sample_matrix(const distribution_spec& spec, std::size_t n, std::size_t d,
                               random_seed seed, int threads) {
  if (n < 1 || d < 1) throw std::invalid_argument("sample_matrix: need n >= 1 and d >= 1");
  embedding_matrix m(n, d);
  rng base(seed);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      rng row_rng = base.substream(r);
      float* row = m.row(r);
      for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(spec.sample(row_rng));
    }
  });
  return m;
}

embedding_matrix synth(const distribution_spec& spec, std::size_t n, std::size_t d,
                       random_seed seed, int threads) {
  embedding_matrix m = sample_matrix(spec, n, d, seed, threads);
  m.set_origin(matrix_origin::synthetic);
  m.set_label(spec.name() + " n=" + std::to_string(n) + " d=" + std::to_string(d) +
              " seed=" + std::to_string(seed.seed) + "/" + std::to_string(seed.stream));
  return m;
}

}  // namespace avgemb
