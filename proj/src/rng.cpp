#include "sobolrf/rng.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace sobolrf {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(seed), engine_(splitmix64(seed)) {}

Rng Rng::stream(std::uint64_t index) const {
  // Two rounds so that (key, index) and (key + 1, index - 1) do not collide.
  return Rng(splitmix64(splitmix64(key_) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

std::vector<Rng> Rng::split(std::size_t k) const {
  std::vector<Rng> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(stream(i));
  return out;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::uniform_index(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_index: bound must be positive");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t b = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % b);
}

double Rng::normal() { return normal_(engine_); }

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t population,
                                                         std::size_t count) {
  if (count > population) {
    throw std::invalid_argument("sample_without_replacement: count exceeds population");
  }
  std::vector<std::size_t> pool(population);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t k = i + uniform_index(population - i);
    std::swap(pool[i], pool[k]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace sobolrf
