#include "core/rng.hpp"

#include <cmath>

namespace avgemb {

namespace detail {

namespace {
constexpr std::uint32_t philox_m0 = 0xD2511F53u;
constexpr std::uint32_t philox_m1 = 0xCD9E8D57u;
constexpr std::uint32_t philox_w0 = 0x9E3779B9u;
constexpr std::uint32_t philox_w1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}
}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(philox_m0, ctr[0], hi0, lo0);
    mulhilo(philox_m1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += philox_w0;
    key[1] += philox_w1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

void rng::refill() noexcept {
  std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_),
      static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(seed_.stream),
      static_cast<std::uint32_t>(seed_.stream >> 32),
  };
  std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_.seed),
      static_cast<std::uint32_t>(seed_.seed >> 32),
  };
  buf_ = detail::philox4x32_10(ctr, key);
  ++block_;
  pos_ = 0;
}

rng rng::substream(std::uint64_t index) const noexcept {
  // both mixes are bijections, so children of one parent never collide
  std::uint64_t child = detail::splitmix64(seed_.stream ^ detail::splitmix64(index));
  return rng(random_seed{seed_.seed, child});
}

std::uint32_t rng::next_u32() noexcept {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t rng::next_u64() noexcept {
  std::uint64_t lo = next_u32();
  std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double rng::next_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double rng::next_double_open() noexcept {
  double u;
  do {
    u = next_double();
  } while (u == 0.0);
  return u;
}

std::uint64_t rng::next_below(std::uint64_t bound) noexcept {
  // modulo rejection keeps the draw exactly uniform
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double rng::next_normal() noexcept {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_double() - 1.0;
    v = 2.0 * next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_normal_ = true;
  return u * f;
}

double rng::next_gamma(double shape) noexcept {
  if (shape < 1.0) {
    // boost to shape+1 and shrink back (Marsaglia-Tsang sec. 6)
    double u = next_double_open();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = next_double_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double rng::next_beta(double alpha, double beta) noexcept {
  for (;;) {
    double g1 = next_gamma(alpha);
    double g2 = next_gamma(beta);
    if (g1 + g2 > 0.0) return g1 / (g1 + g2);
  }
}

}  // namespace avgemb
