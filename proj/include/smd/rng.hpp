#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "smd/types.hpp"

namespace smd {

/// Named stream identifiers. Every random quantity in a run is drawn from
/// one of these, so a run is a pure function of (config, seed).
enum class Stream : std::uint64_t {
  kOracleNoise = 1,
  kIterateSelection = 2,
  kData = 3,
  kInitialPoint = 4,
  kMinibatch = 5,
  kSampling = 6,
  kEpisodes = 7,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for replica `replica` of a master seed.
constexpr std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) noexcept {
  return mix64(seed ^ mix64(replica + 0x632BE59BD9B4E019ULL));
}

/// xoshiro256** with SplitMix64 seed expansion.
///
/// Seed-expansion rule: the four state words are the first four outputs of a
/// SplitMix64 sequence whose counter starts at
///   mix64(mix64(seed) ^ mix64(~stream)).
/// Normals use Box-Muller on two 53-bit uniforms (the spare is cached).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;
  Rng(std::uint64_t seed, Stream stream) noexcept
      : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept;
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  double exponential() noexcept;

  Vector normal_vector(Index n, double stddev = 1.0) noexcept;
  /// Uniform point on the probability simplex (Dirichlet(1,...,1)).
  Vector simplex_point(Index n) noexcept;

  static constexpr std::string_view kAlgorithm =
      "xoshiro256** / splitmix64 seed expansion (start = mix64(mix64(seed) ^ mix64(~stream))); "
      "normals via Box-Muller";

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace smd
