#pragma once

#include <cstdint>
#include <random>

namespace dts {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent stream seeds from (seed, tag).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace seed_tag {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t blobs = 4;
inline constexpr std::uint64_t teacher = 5;
inline constexpr std::uint64_t student = 6;
}  // namespace seed_tag

}  // namespace dts
