#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "catnat/random.hpp"
#include "oracles.hpp"

using catnat::RandomSource;

TEST(RandomSource, RawStreamIsCounterHashed) {
  constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;
  const std::uint64_t seed = 12345;
  const std::uint64_t stream = 7;
  const std::uint64_t key = oracle::splitmix64_mix(seed + gamma) ^ oracle::splitmix64_mix(~stream * gamma);
  RandomSource rng(seed, stream);
  for (std::uint64_t n = 1; n <= 100; ++n) EXPECT_EQ(rng.next_u64(), oracle::splitmix64_mix(key + n * gamma));
  EXPECT_EQ(rng.counter(), 100u);
}

TEST(RandomSource, PinnedValues) {
  // Frozen outputs; a change here breaks cross-run reproducibility.
  RandomSource rng(0);
  const std::uint64_t first = rng.next_u64();
  RandomSource again(0);
  EXPECT_EQ(again.next_u64(), first);
  constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;
  const std::uint64_t key = oracle::splitmix64_mix(gamma) ^ oracle::splitmix64_mix(~std::uint64_t{0} * gamma);
  EXPECT_EQ(first, oracle::splitmix64_mix(key + gamma));
}

TEST(RandomSource, StreamsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t stream = 0; stream < 1000; ++stream) firsts.insert(RandomSource(9, stream).next_u64());
  EXPECT_EQ(firsts.size(), 1000u);
  RandomSource base(9, 0);
  base.next_u64();
  EXPECT_EQ(base.split(4).next_u64(), RandomSource(9, 4).next_u64());
}

TEST(RandomSource, UniformRangeAndMoments) {
  RandomSource rng(1);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform_open();
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - std::pow(sum / n, 2), 1.0 / 12, 2e-3);
}

TEST(RandomSource, NormalMoments) {
  RandomSource rng(2);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(RandomSource, GumbelMean) {
  RandomSource rng(3);
  const int n = 200000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gumbel();
    ASSERT_TRUE(std::isfinite(g));
    sum += g;
  }
  const double sd = std::numbers::pi / std::sqrt(6.0);
  EXPECT_NEAR(sum / n, std::numbers::egamma, 4 * sd / std::sqrt(n));
}

TEST(RandomSource, BelowIsUniform) {
  RandomSource rng(4);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 4 * std::sqrt(n * (1.0 / 7) * (6.0 / 7)));
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(RandomSource, BernoulliEdges) {
  RandomSource rng(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_FALSE(rng.bernoulli(0.0));
    EXPECT_TRUE(rng.bernoulli(1.0));
  }
}
