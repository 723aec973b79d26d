#pragma once

#include "core/distribution.hpp"
#include "core/matrix.hpp"

namespace avgemb {

// n x d matrix of i.i.d. draws; row r uses substream r of seed, so the result
// is bitwise identical for any thread count
embedding_matrix sample_matrix(const distribution_spec& spec, std::size_t n, std::size_t d,
                               random_seed seed, int threads = 0);

// sample_matrix plus provenance metadata for reports
embedding_matrix synth(const distribution_spec& spec, std::size_t n, std::size_t d,
                       random_seed seed, int threads = 0);

}  // namespace avgemb
