#include "catnat/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace catnat {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id), key_(mix64(seed + kGamma) ^ mix64(~stream_id * kGamma)) {}

RandomSource RandomSource::split(std::uint64_t stream_id) const noexcept {
  return RandomSource(seed_, stream_id);
}

std::uint64_t RandomSource::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double RandomSource::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform_open() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomSource::normal() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomSource::below(std::uint64_t n) noexcept {
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double RandomSource::gumbel() noexcept {
  const double u = std::clamp(uniform(), 1e-300, 1.0 - 1e-16);
  return -std::log(-std::log(u));
}

}  // namespace catnat
