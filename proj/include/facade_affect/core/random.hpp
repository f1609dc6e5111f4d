#pragma once

#include <cstdint>
#include <random>

namespace facade_affect {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream for work item `index` under a run seed. Monte-Carlo and
// bootstrap loops draw item i from derive_rng(seed, i), so results do not
// depend on how items are scheduled.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng derive_rng(std::uint64_t seed, std::uint64_t index) { return Rng(derive_seed(seed, index)); }

}  // namespace facade_affect
