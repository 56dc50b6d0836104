#include "ddro/rng.hpp"

#include <stdexcept>

namespace ddro {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kRunMul = 0xD1B54A32D192ED03ULL;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

CounterRng CounterRng::stream(std::uint64_t seed, std::uint64_t run, std::string_view purpose) {
  const std::uint64_t k = splitmix64(seed + kGolden) ^ (run * kRunMul) ^ fnv1a(purpose);
  return CounterRng(splitmix64(k));
}

CounterRng::result_type CounterRng::at(std::uint64_t index) const {
  return splitmix64(key_ + (index + 1) * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::size_t CounterRng::categorical(std::span<const double> probs) {
  if (probs.empty()) {
    throw std::invalid_argument("categorical over empty support");
  }
  double total = 0.0;
  for (double p : probs) {
    total += p;
  }
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) {
      continue;
    }
    acc += probs[i];
    last_positive = i;
    if (u < acc) {
      return i;
    }
  }
  // u landed in the rounding gap at the top of the CDF.
  return last_positive;
}

std::size_t CounterRng::below(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("below(0)");
  }
  // Lemire-style multiply-shift; bias is < n / 2^64.
  const unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
  return static_cast<std::size_t>(m >> 64);
}

}  // namespace ddro
