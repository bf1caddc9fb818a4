#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace lastrank {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

// FNV-1a over the bit patterns of the values, continuing from `state`.
std::uint64_t hash_values(std::span<const double> values, std::uint64_t state = 0xcbf29ce484222325ULL);

double uniform(Rng& rng, double lo, double hi);

// Draws an index with probability proportional to weights (non-negative,
// positive sum).
std::size_t sample_index(std::span<const double> weights, Rng& rng);

}  // namespace lastrank
