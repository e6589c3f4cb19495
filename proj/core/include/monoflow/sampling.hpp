#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

namespace monoflow {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Key derived from a master seed and a stream index; distinct indices give
/// statistically independent streams.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) noexcept;

/// Counter-based generator: the k-th output is mix64(key + k * golden gamma).
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept
      : key_(stream_key(seed, stream)), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1).
  double uniform() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Randomly shifted (Cranley-Patterson) Halton sequence in [0,1)^d.
class HaltonSequence {
 public:
  HaltonSequence(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(shift_.size()); }

  /// Point with the given index (index 0 is the first point used).
  Eigen::VectorXd point(std::uint64_t index) const;

 private:
  Eigen::VectorXd shift_;
};

/// Radical inverse of `index` in base `base`.
double radical_inverse(std::uint64_t index, unsigned base) noexcept;

/// k-th prime (k = 0 gives 2).
unsigned nth_prime(std::size_t k);

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Work is split
/// into contiguous blocks; callers store results by index so the outcome does
/// not depend on `jobs`. The first exception thrown (lowest index) is
/// rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

}  // namespace monoflow
