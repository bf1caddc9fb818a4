#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lastrank/param_set.hpp"
#include "lastrank/rng.hpp"
#include "lastrank/tensor.hpp"

namespace lastrank {

struct ModelDims {
  std::size_t user_dim = 8;
  std::size_t item_dim = 8;
  std::size_t hidden = 32;

  bool operator==(const ModelDims&) const = default;
};

// One serving unit: user features, M candidate rows, and the list length N.
struct Request {
  std::vector<double> user;
  Tensor candidates;  // [M, item_dim]
  std::size_t list_len = 0;

  std::size_t candidate_count() const { return candidates.rank() == 2 ? candidates.rows() : 0; }
  // Checks dims, 1 <= N <= M and finiteness. Throws ContractViolation.
  void validate(const ModelDims& dims) const;
};

struct GeneratedList {
  std::vector<std::size_t> order;
  std::vector<double> step_probs;
  double log_prob = 0.0;

  bool operator==(const GeneratedList&) const = default;
};

enum class Decoding { greedy, sample };

// Parameter names of the list generator. The step scorer consumes
// [enc(u); enc(c_j); mean enc of selected items; t/N].
namespace actor_param {
inline constexpr const char* kUserWeight = "user_enc.weight";
inline constexpr const char* kUserBias = "user_enc.bias";
inline constexpr const char* kItemWeight = "item_enc.weight";
inline constexpr const char* kItemBias = "item_enc.bias";
inline constexpr const char* kHiddenWeight = "scorer.hidden.weight";
inline constexpr const char* kHiddenBias = "scorer.hidden.bias";
inline constexpr const char* kOutWeight = "scorer.out.weight";
inline constexpr const char* kOutBias = "scorer.out.bias";
}  // namespace actor_param

// Uniform Glorot initialisation, multiplied by `scale`.
ParamSet init_actor_params(const ModelDims& dims, std::uint64_t seed, double scale = 1.0);
ModelDims actor_dims(const ParamSet& params);
// The step-scorer stack (hidden and output layers).
AdaptableMask default_actor_mask();

// Builds a list of request.list_len items. Sampling mode needs an rng.
GeneratedList generate(const Request& request, const ParamView& params, Decoding mode,
                       Rng* rng = nullptr);

// Forced decoding: the probability of generating exactly `order`.
GeneratedList list_log_prob(const Request& request, const ParamView& params,
                            std::span<const std::size_t> order);

// d log P(order) / d theta restricted to the masked coordinates.
std::vector<double> grad_log_prob(const Request& request, const ParamView& params,
                                  std::span<const std::size_t> order, const AdaptableMask& mask);

// Adds the gradient of
//   logp_weight * log P(order) + entropy_weight * sum_t H(step t distribution)
// to `grads` (same structure as params). The per-step entropies are taken
// along the given order. Returns log P(order).
double accumulate_actor_grad(const Request& request, const ParamView& params,
                             std::span<const std::size_t> order, double logp_weight,
                             double entropy_weight, ParamSet& grads);

// Sum of per-step selection entropies along `order`.
double path_entropy(const Request& request, const ParamView& params,
                    std::span<const std::size_t> order);

}  // namespace lastrank
