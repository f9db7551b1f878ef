#pragma once

#include <cstdint>
#include <random>

namespace levy {

/// Engine used for every random stream in the library.
using Rng = std::mt19937_64;

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Stream splitting rule: the child key for index `i` of parent key `k` is
/// mix64(k ^ mix64(i)). Keys derived from distinct (parent, index) pairs seed
/// independent engines; the rule is stable across platforms.
constexpr std::uint64_t split_key(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(parent ^ mix64(index));
}

inline Rng make_rng(std::uint64_t key) { return Rng{key}; }

}  // namespace levy
