#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sobolrf {

// Deterministic generator with index-addressed stream derivation.
//
// stream(i) depends only on (this generator's key, i), never on how many
// streams are requested or in which order, so work distributed over threads
// draws the same numbers regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t key() const { return key_; }

  Rng stream(std::uint64_t index) const;
  std::vector<Rng> split(std::size_t k) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on {0, ..., bound - 1}; bound must be positive.
  std::size_t uniform_index(std::size_t bound);
  double normal();

  // Fisher-Yates shuffle driven by uniform_index.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t k = uniform_index(i);
      std::swap(values[i - 1], values[k]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

  // Draws `count` distinct values from {0, ..., population - 1}, in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                      std::size_t count);

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sobolrf
