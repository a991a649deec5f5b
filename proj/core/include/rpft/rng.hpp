#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace rpft {

/// Portable seeded generator.
///
/// std::uniform_int_distribution, std::normal_distribution and std::shuffle are
/// implementation-defined, so every draw is derived from the raw 64-bit output
/// of std::mt19937_64 (which the standard fully specifies):
///   - uniform_index(n): rejection sampling on the top of the 64-bit range
///   - uniform01(): 53 high bits scaled by 2^-53
///   - normal(): Box-Muller on two uniform01() draws, no caching
///   - shuffle(): Fisher-Yates from the last element down
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::uint64_t uniform_index(std::uint64_t n);
  double uniform01();
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rpft
