#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace xshift {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream tags keep substreams of different experiment phases disjoint.
enum class StreamTag : std::uint64_t {
  kChain = 1,
  kConstants = 2,
  kValidation = 3,
  kSamples = 4,
  kTransition = 5,
  kSupersolution = 6,
  kAdversary = 7,
};

/// Counter-based random stream keyed by (seed, tag, index). Two streams with
/// different keys are independent; a stream's output depends only on its key,
/// so Monte Carlo trials can run in any order or on any worker.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, StreamTag tag, std::uint64_t index)
      : key_(mix64(mix64(seed ^ 0x9e3779b97f4a7c15ULL) ^
                   mix64(static_cast<std::uint64_t>(tag) * 0xd1b54a32d192ed03ULL) ^
                   mix64(index + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return next(); }

  std::uint64_t next() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exponential waiting time with the given rate (> 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace xshift
