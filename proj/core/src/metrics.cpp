#include "lastrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lastrank/error.hpp"

namespace lastrank {

namespace {

double dcg(std::span<const int> labels, std::size_t k) {
  const std::size_t n = std::min(k, labels.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += static_cast<double>(labels[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  return s;
}

double ideal_dcg(std::span<const int> pool, std::size_t k) {
  std::vector<int> sorted(pool.begin(), pool.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return dcg(sorted, k);
}

std::size_t relevant_count(std::span<const int> labels) {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                [](int v) { return v > 0; }));
}

double precision_sum(std::span<const int> labels, std::size_t k) {
  const std::size_t n = std::min(k, labels.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum;
}

}  // namespace

double ndcg_at_k(std::span<const int> labels, std::size_t k) { return ndcg_at_k(labels, k, labels); }

double ndcg_at_k(std::span<const int> labels, std::size_t k, std::span<const int> pool) {
  require(k >= 1, "ndcg_at_k: k must be at least 1");
  const double ideal = ideal_dcg(pool, std::min(k, labels.size()));
  if (ideal <= 0.0) return 0.0;
  return dcg(labels, k) / ideal;
}

double map_at_k(std::span<const int> labels, std::size_t k) {
  require(k >= 1, "map_at_k: k must be at least 1");
  const std::size_t relevant = relevant_count(labels);
  if (relevant == 0) return 0.0;
  return precision_sum(labels, k) / static_cast<double>(std::min(k, relevant));
}

double map_at_k(std::span<const int> labels, std::size_t k, std::span<const int> pool) {
  require(k >= 1, "map_at_k: k must be at least 1");
  const std::size_t norm = std::min({k, labels.size(), relevant_count(pool)});
  if (norm == 0) return 0.0;
  return precision_sum(labels, k) / static_cast<double>(norm);
}

}  // namespace lastrank
