#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <vector>

#include "core/rng.hpp"

using avgemb::random_seed;
using avgemb::rng;

// reference vectors published with the original counter-based RNG test suite
TEST_CASE("philox4x32-10 known-answer vectors") {
  using avgemb::detail::philox4x32_10;

  auto r0 = philox4x32_10({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(r0 == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  auto r1 = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu});
  CHECK(r1 == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

  auto r2 = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u});
  CHECK(r2 == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("identical (seed, stream) replays the identical sequence") {
  rng a(random_seed{42, 7});
  rng b(random_seed{42, 7});
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  rng c(random_seed{42, 8});
  rng d(random_seed{43, 7});
  bool all_equal_c = true, all_equal_d = true;
  rng e(random_seed{42, 7});
  for (int i = 0; i < 64; ++i) {
    std::uint64_t ref = e.next_u64();
    all_equal_c &= c.next_u64() == ref;
    all_equal_d &= d.next_u64() == ref;
  }
  CHECK_FALSE(all_equal_c);
  CHECK_FALSE(all_equal_d);
}

TEST_CASE("substreams are distinct and order-independent") {
  rng base(random_seed{123, 0});
  std::set<std::uint64_t> streams;
  for (std::uint64_t i = 0; i < 10000; ++i) streams.insert(base.substream(i).seed().stream);
  CHECK(streams.size() == 10000);

  // drawing from the parent does not change what a substream produces
  rng parent(random_seed{9, 1});
  std::uint64_t before = rng(parent.substream(5)).next_u64();
  parent.next_u64();
  std::uint64_t after = rng(parent.substream(5)).next_u64();
  CHECK(before == after);
}

TEST_CASE("next_double lies in [0,1) and fills the range") {
  rng r(random_seed{1, 0});
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("next_below is unbiased across its range") {
  rng r(random_seed{77, 0});
  constexpr std::uint64_t bound = 7;
  constexpr int draws = 70000;
  std::array<int, bound> counts{};
  for (int i = 0; i < draws; ++i) {
    std::uint64_t v = r.next_below(bound);
    REQUIRE(v < bound);
    ++counts[v];
  }
  // expected 10000 per bucket, sd ~ 97; allow 5 sigma
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal sampler has the right first four moments") {
  rng r(random_seed{5, 0});
  constexpr int n = 200000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.next_normal();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
  }
  double mean = s1 / n;
  double var = s2 / n - mean * mean;
  // 5 sigma bands: se(mean)=1/sqrt(n), se(var)~sqrt(2/n), se(m3)~sqrt(15/n), se(m4)~sqrt(96/n)
  CHECK(std::fabs(mean) < 5.0 / std::sqrt((double)n));
  CHECK(std::fabs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::fabs(s3 / n) < 5.0 * std::sqrt(15.0 / n));
  CHECK(std::fabs(s4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
}

TEST_CASE("gamma sampler matches Gamma(shape,1) mean and variance") {
  for (double shape : {0.5, 1.0, 2.5, 8.0}) {
    rng r(random_seed{11, (std::uint64_t)(shape * 8)});
    constexpr int n = 100000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      double x = r.next_gamma(shape);
      REQUIRE(x >= 0.0);
      s1 += x;
      s2 += x * x;
    }
    double mean = s1 / n;
    double var = s2 / n - mean * mean;
    // mean = shape, var = shape; se(mean) = sqrt(shape/n)
    CHECK(std::fabs(mean - shape) < 5.0 * std::sqrt(shape / n));
    // Var(x^2)-based bound, loose factor
    CHECK(std::fabs(var - shape) < 0.05 * shape + 5.0 * std::sqrt(shape * 6.0 / n));
  }
}

TEST_CASE("beta sampler matches Beta(2,2) mean and variance") {
  rng r(random_seed{13, 0});
  constexpr int n = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.next_beta(2.0, 2.0);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    s1 += x;
    s2 += x * x;
  }
  double mean = s1 / n;
  double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean - 0.5) < 5.0 * std::sqrt(0.05 / n));
  CHECK(std::fabs(var - 0.05) < 5.0 * 0.05 * std::sqrt(2.0 / n) + 0.001);
}

