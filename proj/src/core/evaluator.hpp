#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "core/curve.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"

namespace avgemb {

// uniformly drawn k-subset of [0, n), sorted ascending; O(k) memory
std::vector<std::uint64_t> sample_subset(rng& r, std::uint64_t n, std::uint64_t k);

// arithmetic mean of the subset rows, in double
std::vector<double> centroid(const embedding_matrix& m, std::span<const std::uint64_t> subset);

// exact top-k under inner-product similarity; ties broken by ascending index;
// result ordered best-first and identical for every thread count
std::vector<std::uint64_t> top_k(const embedding_matrix& m, std::span<const double> query,
                                 std::size_t k, int threads = 0);

// fraction of `subset` recovered among the top-|subset| neighbors of its own
// centroid; the candidate pool is the full catalog, subset included
double precision_k(const embedding_matrix& m, std::span<const std::uint64_t> subset,
                   int threads = 0);

struct mc_estimate {
  double score = 0.0;
  double std_error = 0.0;
};

// mean +- stderr of precision_k over `trials` uniform k-subsets; trial t uses
// substream t of `seed`, so any thread count gives byte-identical results
mc_estimate consistency_mc(const embedding_matrix& m, std::size_t k, std::size_t trials,
                           random_seed seed, int threads = 0);

consistency_curve consistency_curve_mc(const embedding_matrix& m,
                                       std::span<const std::uint32_t> k_values,
                                       std::size_t trials, random_seed seed, int threads = 0);

// inner products of `pairs` uniformly drawn distinct row pairs (i != j)
std::vector<double> similarity_sample(const embedding_matrix& m, std::size_t pairs,
                                      random_seed seed);

}  // namespace avgemb
