#include "core/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "core/dot_kernel.hpp"
#include "core/parallel.hpp"

namespace avgemb {

namespace {

struct scored {
  double score;
  std::uint64_t idx;
};

// ranking order: higher score first, ascending index on ties
inline bool better(const scored& a, const scored& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.idx < b.idx;
}

// keep the k best of a row range; heap root is the current worst keeper
void scan_block(const embedding_matrix& m, std::span<const double> query, std::size_t k,
                std::size_t begin, std::size_t end, std::vector<scored>& heap) {
  std::size_t d = m.dim();
  heap.clear();
  heap.reserve(k);
  // rows are contiguous, so whole tiles go through the batched kernel; the
  // scores stay bitwise equal to per-row dot_fd calls
  constexpr std::size_t tile = 256;
  double scores[tile];
  for (std::size_t r0 = begin; r0 < end; r0 += tile) {
    std::size_t count = std::min(tile, end - r0);
    dot_fd_rows(m.row(r0), count, d, query.data(), scores);
    for (std::size_t j = 0; j < count; ++j) {
      scored cand{scores[j], r0 + j};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), better);
      } else if (better(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), better);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), better);
      }
    }
  }
}

void validate_subset(const embedding_matrix& m, std::span<const std::uint64_t> subset) {
  if (subset.empty()) throw std::invalid_argument("subset must be non-empty");
  std::uint64_t prev = 0;
  bool first = true;
  for (std::uint64_t idx : subset) {
    if (idx >= m.n_items()) throw std::invalid_argument("subset index out of range");
    if (!first && idx <= prev)
      throw std::invalid_argument("subset indices must be sorted and unique");
    prev = idx;
    first = false;
  }
}

struct compensated_sum {
  double s = 0.0, c = 0.0;
  void add(double x) noexcept {
    double t = s + x;
    if (std::fabs(s) >= std::fabs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const noexcept { return s + c; }
};

}  // namespace

std::vector<std::uint64_t> sample_subset(rng& r, std::uint64_t n, std::uint64_t k) {
  if (k < 1 || k > n) throw std::invalid_argument("sample_subset: need 1 <= k <= n");
  // partial Fisher-Yates over a virtual identity array, touched slots only
  std::unordered_map<std::uint64_t, std::uint64_t> moved;
  moved.reserve(2 * k);
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uint64_t j = i + r.next_below(n - i);
    auto jt = moved.find(j);
    std::uint64_t vj = jt == moved.end() ? j : jt->second;
    auto it = moved.find(i);
    std::uint64_t vi = it == moved.end() ? i : it->second;
    out.push_back(vj);
    moved[j] = vi;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> centroid(const embedding_matrix& m, std::span<const std::uint64_t> subset) {
  validate_subset(m, subset);
  std::size_t d = m.dim();
  std::vector<double> mean(d, 0.0);
  for (std::uint64_t idx : subset) {
    const float* row = m.row(idx);
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  double inv = 1.0 / static_cast<double>(subset.size());
  for (double& v : mean) v *= inv;
  return mean;
}

std::vector<std::uint64_t> top_k(const embedding_matrix& m, std::span<const double> query,
                                 std::size_t k, int threads) {
  if (query.size() != m.dim()) throw std::invalid_argument("top_k: query dimension mismatch");
  if (k < 1 || k > m.n_items()) throw std::invalid_argument("top_k: need 1 <= k <= n_items");

  std::size_t n = m.n_items();
  int t = resolve_threads(threads);
  // worker count fixed by (n, t); candidates from all blocks are merged under
  // the same total order, so the outcome does not depend on scheduling
  std::size_t blocks = std::min<std::size_t>(static_cast<std::size_t>(t),
                                             std::max<std::size_t>(1, n / 1024));
  if (blocks <= 1) {
    std::vector<scored> heap;
    scan_block(m, query, k, 0, n, heap);
    std::sort(heap.begin(), heap.end(), better);
    std::vector<std::uint64_t> out(heap.size());
    for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].idx;
    return out;
  }

  std::vector<std::vector<scored>> partial(blocks);
  std::size_t chunk = (n + blocks - 1) / blocks;
  parallel_for(blocks, static_cast<int>(blocks), [&](std::size_t bb, std::size_t be) {
    for (std::size_t b = bb; b < be; ++b) {
      std::size_t begin = b * chunk;
      std::size_t end = std::min(n, begin + chunk);
      if (begin < end) scan_block(m, query, k, begin, end, partial[b]);
    }
  });

  std::vector<scored> all;
  all.reserve(blocks * k);
  for (auto& p : partial) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end(), better);
  all.resize(std::min(all.size(), k));
  std::vector<std::uint64_t> out(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) out[i] = all[i].idx;
  return out;
}

double precision_k(const embedding_matrix& m, std::span<const std::uint64_t> subset,
                   int threads) {
  validate_subset(m, subset);
  std::vector<double> mu = centroid(m, subset);
  std::vector<std::uint64_t> neighbors = top_k(m, mu, subset.size(), threads);
  std::size_t hits = 0;
  for (std::uint64_t idx : neighbors)
    if (std::binary_search(subset.begin(), subset.end(), idx)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(subset.size());
}

mc_estimate consistency_mc(const embedding_matrix& m, std::size_t k, std::size_t trials,
                           random_seed seed, int threads) {
  if (k < 1 || k > m.n_items()) throw std::invalid_argument("consistency_mc: k out of range");
  if (trials < 1) throw std::invalid_argument("consistency_mc: need trials >= 1");

  rng base(seed);
  std::vector<double> prec(trials);
  parallel_for(trials, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      rng trial_rng = base.substream(t);
      std::vector<std::uint64_t> subset = sample_subset(trial_rng, m.n_items(), k);
      std::vector<double> mu = centroid(m, subset);
      std::vector<std::uint64_t> neighbors = top_k(m, mu, k, 1);
      std::size_t hits = 0;
      for (std::uint64_t idx : neighbors)
        if (std::binary_search(subset.begin(), subset.end(), idx)) ++hits;
      prec[t] = static_cast<double>(hits) / static_cast<double>(k);
    }
  });

  compensated_sum sum;
  for (double p : prec) sum.add(p);
  double mean = sum.value() / static_cast<double>(trials);

  double se = 0.0;
  if (trials > 1) {
    compensated_sum sq;
    for (double p : prec) sq.add((p - mean) * (p - mean));
    se = std::sqrt(sq.value() / (static_cast<double>(trials - 1) * static_cast<double>(trials)));
  }
  return {mean, se};
}

consistency_curve consistency_curve_mc(const embedding_matrix& m,
                                       std::span<const std::uint32_t> k_values,
                                       std::size_t trials, random_seed seed, int threads) {
  consistency_curve curve;
  curve.provenance = m.origin() == matrix_origin::synthetic ? curve_provenance::simulated
                                                            : curve_provenance::empirical;
  curve.trials = trials;
  curve.seed = seed;
  curve.label = m.label();
  rng base(seed);
  for (std::uint32_t k : k_values) {
    // keyed by the k value itself, so a k's entry is stable across grids
    mc_estimate e = consistency_mc(m, k, trials, base.substream(k).seed(), threads);
    curve.k_values.push_back(k);
    curve.scores.push_back(e.score);
    curve.stderrs.push_back(e.std_error);
  }
  return curve;
}

std::vector<double> similarity_sample(const embedding_matrix& m, std::size_t pairs,
                                      random_seed seed) {
  if (m.n_items() < 2) throw std::invalid_argument("similarity_sample: need n_items >= 2");
  std::size_t d = m.dim();
  rng r(seed);
  std::vector<double> out;
  out.reserve(pairs);
  std::vector<double> lhs(d);
  for (std::size_t p = 0; p < pairs; ++p) {
    std::uint64_t i = r.next_below(m.n_items());
    std::uint64_t j = r.next_below(m.n_items() - 1);
    if (j >= i) ++j;
    const float* ri = m.row(i);
    for (std::size_t c = 0; c < d; ++c) lhs[c] = ri[c];
    out.push_back(dot_fd(m.row(j), lhs.data(), d));
  }
  return out;
}

}  // namespace avgemb
