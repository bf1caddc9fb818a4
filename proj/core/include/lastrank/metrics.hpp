#pragma once

#include <cstddef>
#include <span>

namespace lastrank {

// Binary relevance labels aligned with a presented order. Gains are linear:
// DCG@k = sum_{i<=min(k,N)} rel_i / log2(i + 1), 1-based i.

// NDCG@k with the ideal DCG taken from the same list. 0 if nothing relevant.
double ndcg_at_k(std::span<const int> labels, std::size_t k);
// NDCG@k of a presented list against the best list of the same length that
// could have been built from `pool` (all candidate labels).
double ndcg_at_k(std::span<const int> labels, std::size_t k, std::span<const int> pool);

// Truncated average precision; normaliser min(k, relevant count).
double map_at_k(std::span<const int> labels, std::size_t k);
// As above, normaliser min(k, presented length, relevant count in pool).
double map_at_k(std::span<const int> labels, std::size_t k, std::span<const int> pool);

}  // namespace lastrank
