#include "smd/rng.hpp"

#include <cmath>
#include <numbers>

namespace smd {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t counter = mix64(mix64(seed) ^ mix64(~stream));
  for (auto& word : s_) {
    word = mix64(counter);
    counter += 0x9E3779B97F4A7C15ULL;
  }
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::index(std::uint64_t n) noexcept {
  const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::exponential() noexcept {
  double u = uniform();
  while (u <= 0.0) u = uniform();
  return -std::log(u);
}

Vector Rng::normal_vector(Index n, double stddev) noexcept {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = stddev * normal();
  return v;
}

Vector Rng::simplex_point(Index n) noexcept {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = exponential();
  return v / v.sum();
}

}  // namespace smd
