#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace ddro {

// Counter-based generator: output i is a SplitMix64 finalization of
// key + i * golden_gamma. Two generators with different keys give
// independent streams; there is no hidden state beyond (key, counter).
//
// Streams are split per (seed, run, purpose):
//   key = mix(mix(seed) ^ run * C1 ^ fnv1a(purpose))
// so a sweep worker can reconstruct any run's stream without coordination.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng stream(std::uint64_t seed, std::uint64_t run, std::string_view purpose);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  // Random access to the i-th output of the stream.
  result_type at(std::uint64_t index) const;

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Index drawn from a discrete distribution by inverse CDF. Zero-mass
  // outcomes are never returned.
  std::size_t categorical(std::span<const double> probs);

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ddro
