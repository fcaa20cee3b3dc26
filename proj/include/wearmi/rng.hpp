#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace wearmi {

using Engine = std::mt19937_64;

/// 64-bit FNV-1a; stable across platforms, used to key streams by id.
std::uint64_t stable_hash(std::string_view s);

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives a seed from a master seed and an ordered key path. Distinct key
/// paths give statistically independent streams, so results do not depend on
/// the order in which work items are processed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

inline Engine make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  return Engine(derive_seed(master, keys));
}

/// Uniform double in [0, 1) from 53 random bits.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) (n > 0) by rejection, free of modulo bias.
std::size_t uniform_index(Engine& rng, std::size_t n);

/// Draws an index with the given (normalized) probabilities.
std::size_t sample_weighted(Engine& rng, const std::vector<double>& weights);

double standard_normal(Engine& rng);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Work items must
/// write only to their own slots; completion order does not matter.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace wearmi
