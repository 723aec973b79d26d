#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "core/distribution.hpp"
#include "core/dot_kernel.hpp"
#include "core/evaluator.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

using namespace avgemb;

namespace {

embedding_matrix from_rows(const std::vector<std::vector<float>>& rows) {
  embedding_matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), m.row(i));
  return m;
}

// reference ranking: same scores as the library kernel, naive full sort
std::vector<std::uint64_t> naive_top_k(const embedding_matrix& m, const std::vector<double>& q,
                                       std::size_t k) {
  std::vector<std::pair<double, std::uint64_t>> scored(m.n_items());
  for (std::size_t i = 0; i < m.n_items(); ++i)
    scored[i] = {dot_fd(m.row(i), q.data(), m.dim()), i};
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::uint64_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

}  // namespace

TEST_CASE("float-by-double dot kernel matches long double accumulation") {
  CHECK(dot_kernel_name() != nullptr);
  rng r({31, 5});
  for (int t = 0; t < 50; ++t) {
    std::size_t d = 1 + static_cast<std::size_t>(r.next_below(300));
    std::vector<float> a(d);
    std::vector<double> b(d);
    long double want = 0.0L;
    for (std::size_t j = 0; j < d; ++j) {
      a[j] = static_cast<float>(r.next_normal());
      b[j] = r.next_normal();
      want += static_cast<long double>(a[j]) * b[j];
    }
    double got = dot_fd(a.data(), b.data(), d);
    CHECK(std::fabs(got - static_cast<double>(want)) <=
          1e-12 * (std::fabs(static_cast<double>(want)) + 1.0));
  }

  // integer-valued inputs accumulate exactly in every kernel
  std::vector<float> ai(131);
  std::vector<double> bi(131);
  long long exact = 0;
  rng ri({32, 5});
  for (std::size_t j = 0; j < ai.size(); ++j) {
    int x = static_cast<int>(ri.next_below(7)) - 3;
    int y = static_cast<int>(ri.next_below(7)) - 3;
    ai[j] = static_cast<float>(x);
    bi[j] = static_cast<double>(y);
    exact += static_cast<long long>(x) * y;
  }
  CHECK(dot_fd(ai.data(), bi.data(), ai.size()) == static_cast<double>(exact));
}

TEST_CASE("batched row scoring is bitwise equal to per-row scoring") {
  rng r({33, 5});
  for (std::size_t d : {1, 3, 5, 17, 64, 128, 131}) {
    std::size_t n = 1 + static_cast<std::size_t>(r.next_below(700));
    std::vector<float> rows(n * d);
    std::vector<double> query(d);
    for (float& v : rows) v = static_cast<float>(r.next_normal());
    for (double& v : query) v = r.next_normal();

    std::vector<double> batched(n);
    dot_fd_rows(rows.data(), n, d, query.data(), batched.data());
    for (std::size_t i = 0; i < n; ++i) {
      CAPTURE(d);
      CAPTURE(i);
      CHECK(batched[i] == dot_fd(rows.data() + i * d, query.data(), d));
    }
  }
}

TEST_CASE("subset sampling is sorted, in range and validated") {
  rng r({100, 0});
  std::vector<std::uint64_t> all = sample_subset(r, 12, 12);
  REQUIRE(all.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(all[i] == i);

  for (int t = 0; t < 100; ++t) {
    std::uint64_t n = 1 + r.next_below(2000);
    std::uint64_t k = 1 + r.next_below(n);
    std::vector<std::uint64_t> s = sample_subset(r, n, k);
    REQUIRE(s.size() == k);
    CHECK(s.back() < n);
    bool increasing = true;
    for (std::size_t i = 1; i < s.size(); ++i) increasing = increasing && s[i] > s[i - 1];
    CHECK(increasing);
  }

  CHECK_THROWS_AS(sample_subset(r, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_subset(r, 5, 6), std::invalid_argument);
}

TEST_CASE("subset sampling is uniform over all 2-subsets of 6") {
  rng r({2718, 1});
  std::map<std::uint64_t, int> counts;
  const int draws = 15000;
  for (int t = 0; t < draws; ++t) {
    std::vector<std::uint64_t> s = sample_subset(r, 6, 2);
    counts[s[0] * 6 + s[1]] += 1;
  }
  REQUIRE(counts.size() == 15);
  // expected 1000 each, sd ~ 30.5, so 160 is beyond 5 sigma
  for (const auto& [key, c] : counts) {
    CAPTURE(key);
    CHECK(std::abs(c - 1000) < 160);
  }
}

TEST_CASE("centroid averages the subset rows") {
  embedding_matrix m = from_rows({{1.0f, -2.0f}, {2.0f, 4.0f}, {-1.0f, 2.0f}, {0.0f, 0.0f}});

  std::vector<std::uint64_t> one = {1};
  std::vector<double> c1 = centroid(m, one);
  CHECK(c1[0] == 2.0);
  CHECK(c1[1] == 4.0);

  std::vector<std::uint64_t> opposite = {0, 2};  // rows cancel exactly
  std::vector<double> c2 = centroid(m, opposite);
  CHECK(c2[0] == 0.0);
  CHECK(c2[1] == 0.0);

  embedding_matrix thirds = from_rows({{0.0f, 0.0f}, {1.0f, 1.0f}, {1.0f, 1.0f}});
  std::vector<std::uint64_t> all = {0, 1, 2};
  std::vector<double> c3 = centroid(thirds, all);
  CHECK(std::fabs(c3[0] - 2.0 / 3.0) <= 1e-15);
  CHECK(std::fabs(c3[1] - 2.0 / 3.0) <= 1e-15);

  std::vector<std::uint64_t> empty;
  CHECK_THROWS_AS(centroid(m, empty), std::invalid_argument);
  std::vector<std::uint64_t> out_of_range = {4};
  CHECK_THROWS_AS(centroid(m, out_of_range), std::invalid_argument);
  std::vector<std::uint64_t> unsorted = {2, 0};
  CHECK_THROWS_AS(centroid(m, unsorted), std::invalid_argument);
  std::vector<std::uint64_t> dup = {1, 1};
  CHECK_THROWS_AS(centroid(m, dup), std::invalid_argument);
}

TEST_CASE("top_k ranks by inner product with index tie-break") {
  embedding_matrix basis = from_rows({{1.0f, 0.0f, 0.0f, 0.0f},
                                      {0.0f, 1.0f, 0.0f, 0.0f},
                                      {0.0f, 0.0f, 1.0f, 0.0f},
                                      {0.0f, 0.0f, 0.0f, 1.0f}});
  std::vector<double> q = {0.0, 0.0, 1.0, 0.0};
  std::vector<std::uint64_t> best = top_k(basis, q, 1);
  REQUIRE(best.size() == 1);
  CHECK(best[0] == 2);

  // all-equal rows: every score ties, ascending index wins
  embedding_matrix flat = from_rows({{1.0f, 1.0f}, {1.0f, 1.0f}, {1.0f, 1.0f}, {1.0f, 1.0f}});
  std::vector<double> ones = {1.0, 1.0};
  std::vector<std::uint64_t> order = top_k(flat, ones, 4);
  REQUIRE(order.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(order[i] == i);

  std::vector<double> wrong_dim = {1.0};
  CHECK_THROWS_AS(top_k(basis, wrong_dim, 1), std::invalid_argument);
  CHECK_THROWS_AS(top_k(basis, q, 0), std::invalid_argument);
  CHECK_THROWS_AS(top_k(basis, q, 5), std::invalid_argument);
}

TEST_CASE("top_k equals a naive sort oracle on random instances") {
  rng r({555, 9});
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 1 + static_cast<std::size_t>(r.next_below(300));
    std::size_t d = 1 + static_cast<std::size_t>(r.next_below(8));
    std::size_t k = 1 + static_cast<std::size_t>(r.next_below(n));
    embedding_matrix m(n, d);
    std::vector<double> q(d);
    // small integer values force plenty of exact score ties
    bool integer_case = t % 2 == 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        m.row(i)[j] = integer_case ? static_cast<float>(static_cast<int>(r.next_below(5)) - 2)
                                   : static_cast<float>(r.next_normal());
    for (std::size_t j = 0; j < d; ++j)
      q[j] = integer_case ? static_cast<double>(static_cast<int>(r.next_below(5)) - 2)
                          : r.next_normal();
    CAPTURE(t);
    CHECK(top_k(m, q, k) == naive_top_k(m, q, k));
  }
}

TEST_CASE("top_k is invariant to the thread count") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = sample_matrix(spec, 5000, 24, {7, 7});
  rng r({1234, 0});
  std::vector<double> q(24);
  for (double& v : q) v = r.next_normal();
  std::vector<std::uint64_t> serial = top_k(m, q, 40, 1);
  CHECK(top_k(m, q, 40, 2) == serial);
  CHECK(top_k(m, q, 40, 4) == serial);
  CHECK(top_k(m, q, 40, 13) == serial);
}

TEST_CASE("precision_k counts recovered members") {
  embedding_matrix m = from_rows({{1.0f, 0.0f, 0.0f, 0.0f},
                                  {0.0f, 1.0f, 0.0f, 0.0f},
                                  {0.0f, 0.0f, 1.0f, 0.0f},
                                  {3.0f, 3.0f, 0.0f, 0.0f}});
  // centroid of {0,1} is (.5,.5,0,0); row 3 scores 3, rows 0 and 1 score .5,
  // so the top-2 is {3, 0} and only one member survives
  std::vector<std::uint64_t> pair = {0, 1};
  CHECK(precision_k(m, pair) == 0.5);

  // the full catalog always recovers itself
  std::vector<std::uint64_t> all = {0, 1, 2, 3};
  CHECK(precision_k(m, all) == 1.0);

  // doubling every embedding rescales all scores, ranking unchanged
  embedding_matrix doubled = m;
  for (float& v : doubled.values()) v *= 2.0f;
  CHECK(precision_k(doubled, pair) == 0.5);
}

TEST_CASE("precision_k is invariant to relabeling the items") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = sample_matrix(spec, 60, 12, {99, 0});

  // reverse the row order; subset {i} becomes {n-1-i}
  embedding_matrix rev(60, 12);
  for (std::size_t i = 0; i < 60; ++i)
    std::copy(m.row(i), m.row(i) + 12, rev.row(59 - i));

  rng r({4, 4});
  for (int t = 0; t < 20; ++t) {
    std::vector<std::uint64_t> subset = sample_subset(r, 60, 6);
    std::vector<std::uint64_t> mirrored(6);
    for (std::size_t i = 0; i < 6; ++i) mirrored[i] = 59 - subset[5 - i];
    CHECK(precision_k(m, subset) == precision_k(rev, mirrored));
  }
}

TEST_CASE("consistency_mc basics: full subsets, determinism, thread invariance") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = synth(spec, 64, 8, {11, 0});

  mc_estimate full = consistency_mc(m, 64, 50, {1, 1});
  CHECK(full.score == 1.0);
  CHECK(full.std_error == 0.0);

  mc_estimate a = consistency_mc(m, 8, 400, {5, 2});
  mc_estimate b = consistency_mc(m, 8, 400, {5, 2});
  CHECK(a.score == b.score);
  CHECK(a.std_error == b.std_error);
  CHECK(a.score > 0.0);
  CHECK(a.score <= 1.0);
  CHECK(a.std_error > 0.0);

  mc_estimate other = consistency_mc(m, 8, 400, {6, 2});
  CHECK(a.score != other.score);

  mc_estimate threaded = consistency_mc(m, 8, 400, {5, 2}, 4);
  CHECK(threaded.score == a.score);
  CHECK(threaded.std_error == a.std_error);

  CHECK_THROWS_AS(consistency_mc(m, 0, 10, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(consistency_mc(m, 65, 10, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(consistency_mc(m, 8, 0, {1, 0}), std::invalid_argument);
}

TEST_CASE("consistency_mc standard error shrinks like 1/sqrt(trials)") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = synth(spec, 128, 8, {21, 0});
  mc_estimate small = consistency_mc(m, 16, 1000, {77, 0});
  mc_estimate large = consistency_mc(m, 16, 4000, {78, 0});
  double ratio = large.std_error / small.std_error;
  CHECK(ratio > 0.3);
  CHECK(ratio < 0.8);
}

TEST_CASE("consistency_mc agrees with exhaustive enumeration at n=8, k=2") {
  distribution_spec spec = distribution_spec::make_normal(0.0, 1.0);
  embedding_matrix m = synth(spec, 8, 4, {3, 3});

  double exact_sum = 0.0;
  int n_subsets = 0;
  for (std::uint64_t a = 0; a < 8; ++a) {
    for (std::uint64_t b = a + 1; b < 8; ++b) {
      std::vector<std::uint64_t> subset = {a, b};
      exact_sum += precision_k(m, subset);
      ++n_subsets;
    }
  }
  REQUIRE(n_subsets == 28);
  double exact = exact_sum / 28.0;

  mc_estimate mc = consistency_mc(m, 2, 100000, {17, 0});
  CHECK(std::fabs(mc.score - exact) <= 3.0 * mc.std_error);
}

TEST_CASE("consistency curves reuse the per-k substreams") {
  distribution_spec spec = distribution_spec::make_uniform(-1.0, 1.0);
  embedding_matrix m = synth(spec, 100, 8, {42, 0});
  const random_seed seed{2025, 4};
  const std::vector<std::uint32_t> ks = {2, 5, 10};

  consistency_curve curve = consistency_curve_mc(m, ks, 300, seed);
  REQUIRE(curve.k_values.size() == 3);
  CHECK(curve.provenance == curve_provenance::simulated);
  CHECK(curve.trials == 300);
  REQUIRE(curve.seed.has_value());
  CHECK(curve.seed->seed == 2025);
  CHECK(curve.label == m.label());

  rng base(seed);
  for (std::size_t t = 0; t < ks.size(); ++t) {
    mc_estimate direct = consistency_mc(m, ks[t], 300, base.substream(ks[t]).seed());
    CHECK(curve.scores[t] == direct.score);
    CHECK(curve.stderrs[t] == direct.std_error);
  }

  // an entry depends on its k value, not on the rest of the grid
  const std::vector<std::uint32_t> only_five = {5};
  consistency_curve solo = consistency_curve_mc(m, only_five, 300, seed);
  CHECK(solo.scores[0] == curve.scores[1]);

  // loaded matrices yield empirical curves
  embedding_matrix loaded = m;
  loaded.set_origin(matrix_origin::loaded);
  consistency_curve emp = consistency_curve_mc(loaded, only_five, 10, seed);
  CHECK(emp.provenance == curve_provenance::empirical);
}

TEST_CASE("similarity_sample draws distinct pairs") {
  embedding_matrix zeros(10, 3);
  std::vector<double> z = similarity_sample(zeros, 500, {1, 0});
  REQUIRE(z.size() == 500);
  for (double v : z) CHECK(v == 0.0);

  // with two rows [1] and [2] every distinct pair multiplies to 2
  embedding_matrix two = from_rows({{1.0f}, {2.0f}});
  std::vector<double> prods = similarity_sample(two, 200, {9, 9});
  REQUIRE(prods.size() == 200);
  for (double v : prods) CHECK(v == 2.0);

  std::vector<double> again = similarity_sample(two, 200, {9, 9});
  CHECK(prods == again);

  embedding_matrix single(1, 3);
  CHECK_THROWS_AS(similarity_sample(single, 10, {1, 0}), std::invalid_argument);
}
