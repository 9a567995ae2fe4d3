#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace reid {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a global seed and a path of indices
/// (e.g. {epoch, sample}); workers use this so results do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(seed);
  for (auto v : path) h = mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
  return h;
}

using Rng = std::mt19937_64;

/// Uniform double in [lo, hi) built from raw engine bits (independent of libstdc++'s distribution internals).
inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform(rng) * static_cast<double>(n)) % n;
}

template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) std::swap(first[i - 1], first[uniform_index(rng, i)]);
}

}  // namespace reid
