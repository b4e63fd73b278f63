#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace updrop {

// One splitmix64 step. Used only to mix seeds, never as the working generator.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent sub-seed from a master seed and a tag path, so that
// distinct consumers (weight init, shuffling, sampling, ...) get decoupled
// streams and adding a consumer never shifts the draws of another.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(seed);
  for (std::uint64_t t : tags) s = splitmix64(s ^ splitmix64(t));
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> tags = {}) {
  return std::mt19937_64(derive_seed(seed, tags));
}

}  // namespace updrop
