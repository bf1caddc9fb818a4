#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "lastrank/actor.hpp"
#include "lastrank/data.hpp"
#include "lastrank/evaluator.hpp"
#include "lastrank/param_set.hpp"
#include "lastrank/rng.hpp"

namespace lastrank {

// Per-target learning-rate defaults, picked on held-out loss and held-out
// reward at the reference setting (M=8, N=5, 20k records).
inline constexpr double kEvaluatorLearningRate = 0.05;
inline constexpr double kActorLearningRate = 0.2;

struct TrainConfig {
  double learning_rate = kEvaluatorLearningRate;
  double momentum = 0.9;
  int epochs = 10;
  std::size_t batch_size = 32;
  std::size_t samples_per_request = 8;  // K_train, actor only
  std::uint64_t seed = 42;
  double entropy_bonus = 0.01;
  double holdout_fraction = 0.1;        // actor only: tail of the dataset

  void validate() const;
};

// Classical momentum: v <- momentum * v + g; p <- p - lr * v.
// `grads` is a descent gradient. velocity is updated in place.
ParamSet sgd_step(const ParamSet& params, const ParamSet& grads, ParamSet& velocity,
                  const TrainConfig& config);

struct EvaluatorFit {
  ParamSet params;
  double initial_loss = 0.0;        // mean per-item BCE before the first epoch
  std::vector<double> loss_curve;   // mean per-item BCE after each epoch
};

// Fits click probabilities to logged clicks with mini-batch momentum SGD.
EvaluatorFit train_evaluator(const Dataset& dataset, const ModelDims& dims,
                             const TrainConfig& config);

double mean_bce(const Dataset& dataset, const ParamSet& phi);

// The reward an actor is trained against.
class ActorReward {
 public:
  // NDCG@k of the generated list against the logged click labels.
  static ActorReward ndcg(std::size_t k);
  // evaluator@n from a learned click model; n is clamped to the list length.
  static ActorReward learned(ParamSet evaluator, std::size_t n);

  ListScore bind(const InteractionRecord& record) const;
  bool is_learned() const noexcept { return evaluator_.has_value(); }

 private:
  std::size_t k_ = 5;
  std::optional<ParamSet> evaluator_;
};

struct ActorFit {
  ParamSet params;
  double initial_reward = 0.0;              // held-out mean reward of the untrained policy
  std::vector<double> reward_curve;         // held-out mean greedy reward after each epoch
  std::vector<double> train_reward_curve;   // mean sampled reward per epoch, monitoring only
};

// Adds the REINFORCE estimate for one request to `grads` (ascent direction,
// scaled by `weight`): samples K lists, A_k = r_k - mean(r), and
// sum_k A_k dlogP(L_k)/dtheta / K + entropy_bonus * dH/dtheta / K.
// Returns the mean sampled reward.
double accumulate_policy_gradient(const Request& request, const ParamView& params,
                                  const ListScore& reward, std::size_t samples,
                                  double entropy_bonus, Rng& rng, double weight, ParamSet& grads);

double mean_greedy_reward(const Dataset& records, std::size_t list_len, const ParamSet& theta,
                          const ActorReward& reward);

// REINFORCE with a per-request mean baseline. The last holdout_fraction of
// the dataset is held out for the reward curve.
ActorFit train_actor(const Dataset& dataset, std::size_t list_len, const ActorReward& reward,
                     const ModelDims& dims, const TrainConfig& config,
                     const ParamSet* initial = nullptr);

}  // namespace lastrank
