#include "monoflow/sampling.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace monoflow {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed + kGamma) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

CounterRng::result_type CounterRng::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double CounterRng::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double radical_inverse(std::uint64_t index, unsigned base) noexcept {
  const double inv = 1.0 / base;
  double factor = inv;
  double result = 0.0;
  while (index > 0) {
    result += static_cast<double>(index % base) * factor;
    index /= base;
    factor *= inv;
  }
  return result;
}

unsigned nth_prime(std::size_t k) {
  thread_local std::vector<unsigned> table{2};
  unsigned candidate = table.back();
  while (table.size() <= k) {
    ++candidate;
    bool prime = true;
    for (unsigned p : table) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) table.push_back(candidate);
  }
  return table[k];
}

HaltonSequence::HaltonSequence(std::size_t dim, std::uint64_t seed)
    : shift_(static_cast<Eigen::Index>(dim)) {
  CounterRng rng(seed, 0x4a17'0000ULL, 0);
  for (Eigen::Index j = 0; j < shift_.size(); ++j) shift_[j] = rng.uniform();
}

Eigen::VectorXd HaltonSequence::point(std::uint64_t index) const {
  Eigen::VectorXd p(shift_.size());
  for (Eigen::Index j = 0; j < shift_.size(); ++j) {
    // Index + 1 skips the all-zero origin before the shift.
    double v = radical_inverse(index + 1, nth_prime(static_cast<std::size_t>(j))) + shift_[j];
    if (v >= 1.0) v -= 1.0;
    p[j] = v;
  }
  return p;
}

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  jobs = std::clamp<std::size_t>(jobs, 1, count);
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  struct Failure {
    std::size_t index = 0;
    std::exception_ptr error;
  };
  std::vector<Failure> failures(jobs);
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  const std::size_t block = (count + jobs - 1) / jobs;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      const std::size_t first = w * block;
      const std::size_t last = std::min(count, first + block);
      for (std::size_t i = first; i < last; ++i) {
        try {
          body(i);
        } catch (...) {
          failures[w] = {i, std::current_exception()};
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const Failure& f : failures) {
    if (f.error) std::rethrow_exception(f.error);
  }
}

}  // namespace monoflow
