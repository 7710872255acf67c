#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace opforge {

// splitmix64 step; the mixing stage behind all derived seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic sub-seed for a named stage. One root seed flows into the
/// pipeline; every stage derives its own stream from (seed, tag[, index]).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t s = seed ^ fnv1a64(tag);
  return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index) {
  std::uint64_t s = seed ^ fnv1a64(tag);
  s += 0x9e3779b97f4a7c15ULL * (index + 1);
  return splitmix64(s);
}

/// Uniform double in [0, 1) from the top 53 bits of the generator output.
/// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Fisher-Yates shuffle driven by the same portable uniform draws.
template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace opforge
