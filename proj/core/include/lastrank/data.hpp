#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lastrank/actor.hpp"
#include "lastrank/evaluator.hpp"
#include "lastrank/tensor.hpp"

namespace lastrank {

// A logged impression: user features, the shown items in order, and clicks.
struct InteractionRecord {
  std::vector<double> user;
  Tensor items;  // [L, item_dim]
  std::vector<int> clicks;

  // Bitwise comparison of every value.
  bool identical(const InteractionRecord& other) const;
};

using Dataset = std::vector<InteractionRecord>;

struct WorldConfig {
  std::size_t user_dim = 8;
  std::size_t item_dim = 8;
  std::size_t n_users = 5000;
  std::size_t n_items = 2000;
  double position_decay = 0.95;      // rho in (0, 1]
  double similarity_penalty = 0.5;   // lambda_sim >= 0
};

// Synthetic user behaviour. Observed features are the latent factors; the
// affinity uses the first min(user_dim, item_dim) coordinates.
struct WorldModel {
  WorldConfig config;
  std::uint64_t seed = 0;
  Tensor user_factors;  // [n_users, user_dim], uniform in [-1, 1]
  Tensor item_factors;  // [n_items, item_dim], uniform in [-1, 1]
};

WorldModel generate_world(const WorldConfig& config, std::uint64_t seed);

// p_j = sigmoid(<u, i_j>) * rho^j * exp(-lambda * max_{s<j} cos(i_j, i_s)),
// clamped to [0.001, 0.999]. The similarity term is 1 at j = 0.
std::vector<double> click_model(const WorldModel& world, std::span<const double> user,
                                const Tensor& items);

// Mean click_model probability of the candidates arranged by `order`.
ListScore world_list_score(const WorldModel& world, std::vector<double> user, Tensor candidates);

// n_records impressions of M distinct items in random order; clicks drawn
// from click_model. Requires 1 <= N <= M <= n_items.
Dataset generate_dataset(const WorldModel& world, std::size_t n_records, std::size_t candidates,
                         std::size_t list_len, std::uint64_t seed);

// The record's items become the candidate set.
Request to_request(const InteractionRecord& record, std::size_t list_len);

// Number of ordered N-of-M arrangements, saturating at UINT64_MAX.
std::uint64_t arrangement_count(std::size_t m, std::size_t n);

inline constexpr std::uint64_t kMaxEnumeratedArrangements = 1'000'000;

struct BestList {
  std::vector<std::size_t> order;
  double score = 0.0;
};

// Exhaustive argmax over all ordered N-of-M lists; ties keep the
// lexicographically smallest order.
BestList brute_force_best_list(std::size_t m, std::size_t n, const ListScore& evaluate);

// JSONL: {"user":[...],"items":[[...],...],"clicks":[0|1,...]} per line.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

void save_world(const std::filesystem::path& path, const WorldModel& world);
WorldModel load_world(const std::filesystem::path& path);

}  // namespace lastrank
