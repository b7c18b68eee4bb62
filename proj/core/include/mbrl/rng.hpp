#pragma once

#include <cstdint>
#include <random>

namespace mbrl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive decorrelated seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

/// Independent stream `index` derived from `master`. Runs use their run index.
inline Rng derive_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(mix_seed(mix_seed(master) ^ mix_seed(index + 1)));
}

}  // namespace mbrl
