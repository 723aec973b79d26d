#pragma once

#include <array>
#include <cstdint>

namespace avgemb {

struct random_seed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

namespace detail {
// one keyed block of the Philox4x32-10 bijection (Salmon et al., SC'11)
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;
}  // namespace detail

// Counter-based generator keyed by (seed, stream).  Equal keys replay the
// same sequence regardless of how many other generators exist or on which
// thread they run, so per-row / per-trial substreams stay reproducible.
class rng {
public:
  explicit rng(random_seed s) noexcept : seed_(s) {}

  // child generator; distinct indices give distinct streams
  rng substream(std::uint64_t index) const noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  // uniform on [0,1)
  double next_double() noexcept;
  // uniform on (0,1)
  double next_double_open() noexcept;
  // uniform on [0,bound), unbiased; bound must be nonzero
  std::uint64_t next_below(std::uint64_t bound) noexcept;

  // standard normal (Marsaglia polar)
  double next_normal() noexcept;
  // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0
  double next_gamma(double shape) noexcept;
  double next_beta(double alpha, double beta) noexcept;

  random_seed seed() const noexcept { return seed_; }

private:
  void refill() noexcept;

  random_seed seed_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  unsigned pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace avgemb
