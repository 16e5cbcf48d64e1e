#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace orthoboot {

/// SplitMix64 finalizer applied to (seed, index). Used to derive substream
/// seeds so that a child stream depends only on its parent seed and index.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// A seeded pseudo-random stream. Not thread-safe; give each thread its own
/// stream via derive().
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent child stream keyed by `index`. Does not advance this stream.
  RandomStream derive(std::uint64_t index) const { return RandomStream(mix_seed(seed_, index)); }

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  /// Standard exponential, i.e. Gamma(1, 1).
  double exponential();
  /// Uniform on {0, ..., n - 1}; n must be positive.
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::exponential_distribution<double> exponential_;
};

}  // namespace orthoboot
