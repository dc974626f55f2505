#pragma once

#include <cstdint>
#include <limits>

namespace catnat {

// Counter-based generator: draw n of stream (seed, stream_id) is a pure
// function mix64(key + n * gamma), so sequences are identical on every
// platform and streams can be derived without sharing state. All
// distributions are implemented here rather than through <random>, whose
// distribution algorithms are implementation-defined.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

  // Independent stream for worker `stream_id`, derived from this source's
  // seed (not its current position).
  [[nodiscard]] RandomSource split(std::uint64_t stream_id) const noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on (0, 1).
  double uniform_open() noexcept;
  // Standard normal via Box-Muller (two uniforms per draw, no cached pair).
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  // Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  // Standard Gumbel: -log(-log u) with u clamped to [1e-300, 1 - 1e-16].
  double gumbel() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace catnat
