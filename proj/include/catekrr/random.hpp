#pragma once

#include <cstdint>
#include <random>

namespace catekrr {

// splitmix64 finalizer. Used to whiten user seeds and to derive independent
// substreams, so that seed k and seed k+1 do not produce correlated engines.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed270b4d8c0000ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(derive_seed(seed, stream));
}

// Fixed substream tags. Values are arbitrary but frozen: changing them changes
// every seeded output downstream.
namespace streams {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t test_grid = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t ours = 4;
inline constexpr std::uint64_t plugin = 5;
inline constexpr std::uint64_t dr = 6;
inline constexpr std::uint64_t cv = 7;
}  // namespace streams

}  // namespace catekrr
