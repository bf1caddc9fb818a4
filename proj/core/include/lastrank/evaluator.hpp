#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lastrank/actor.hpp"
#include "lastrank/param_set.hpp"
#include "lastrank/tensor.hpp"

namespace lastrank {

// Scores a list given as candidate indices of the request it was built for.
using ListScore = std::function<double(std::span<const std::size_t> order)>;

namespace evaluator_param {
inline constexpr const char* kUserWeight = "user_enc.weight";
inline constexpr const char* kUserBias = "user_enc.bias";
inline constexpr const char* kItemWeight = "item_enc.weight";
inline constexpr const char* kItemBias = "item_enc.bias";
inline constexpr const char* kHiddenWeight = "click.hidden.weight";
inline constexpr const char* kHiddenBias = "click.hidden.bias";
inline constexpr const char* kOutWeight = "click.out.weight";
inline constexpr const char* kOutBias = "click.out.bias";
}  // namespace evaluator_param

ParamSet init_evaluator_params(const ModelDims& dims, std::uint64_t seed, double scale = 1.0);
ModelDims evaluator_dims(const ParamSet& params);

// Per-position click probabilities of an ordered list items[L, item_dim].
// Item j sees [enc(u); enc(item_j); mean enc over the list; j/L].
std::vector<double> predict_click_probs(std::span<const double> user, const Tensor& items,
                                        const ParamView& phi);

// Mean click probability over the first n positions.
double evaluator_at_n(std::span<const double> user, const Tensor& items, const ParamView& phi,
                      std::size_t n);

// Adds weight * d(sum of per-item BCE)/d phi to grads. Returns the summed
// BCE (unweighted). clicks must be 0/1 and aligned with items.
double accumulate_bce_grad(std::span<const double> user, const Tensor& items,
                           std::span<const int> clicks, const ParamView& phi, double weight,
                           ParamSet& grads);

double bce_sum(std::span<const double> user, const Tensor& items, std::span<const int> clicks,
               const ParamView& phi);

// The learned evaluator bound to one request. Caches candidate encodings and
// their first-layer projections, so scoring a list costs O(L * H).
class EvaluatorSession {
 public:
  EvaluatorSession(std::span<const double> user, const Tensor& candidates, const ParamSet& phi);

  std::vector<double> click_probs(std::span<const std::size_t> order) const;
  double at_n(std::span<const std::size_t> order, std::size_t n) const;

 private:
  std::size_t hidden_;
  std::size_t candidate_count_;
  std::vector<double> user_proj_;
  Tensor cand_proj_;
  Tensor ctx_proj_;
  std::vector<double> position_row_;
  std::vector<double> out_weight_;
  double out_bias_;
};

// evaluator@n of the generated list; n is clamped to the list length.
ListScore learned_list_score(std::span<const double> user, const Tensor& candidates,
                             const ParamSet& phi, std::size_t n);

// Labels of the chosen candidates in order, then NDCG@k against the best
// list obtainable from all candidate labels. Assumes per-item feedback does
// not change under re-ranking.
double metric_evaluate(std::span<const int> candidate_labels, std::span<const std::size_t> order,
                       std::size_t k);
double map_evaluate(std::span<const int> candidate_labels, std::span<const std::size_t> order,
                    std::size_t k);

ListScore metric_list_score(std::vector<int> candidate_labels, std::size_t k);

}  // namespace lastrank
