#include "lastrank/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lastrank/error.hpp"

namespace lastrank {

namespace {

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Explicit Fisher-Yates so the order does not depend on the standard
  // library's std::shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(epochs >= 1, "epochs must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(samples_per_request >= 2, "samples_per_request must be at least 2 for a baseline");
  require(entropy_bonus >= 0.0, "entropy_bonus must be non-negative");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, "holdout_fraction must lie in [0, 1)");
}

ParamSet sgd_step(const ParamSet& params, const ParamSet& grads, ParamSet& velocity,
                  const TrainConfig& config) {
  require(params.same_structure(grads), "sgd_step: gradient shape mismatch");
  require(params.same_structure(velocity), "sgd_step: velocity shape mismatch");
  ParamSet next = params;
  for (std::size_t i = 0; i < next.entry_count(); ++i) {
    auto p = next.tensor(i).data();
    auto v = velocity.tensor(i).data();
    const auto g = grads.tensor(i).data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = config.momentum * v[k] + g[k];
      p[k] -= config.learning_rate * v[k];
    }
  }
  return next;
}

double mean_bce(const Dataset& dataset, const ParamSet& phi) {
  double loss = 0.0;
  std::size_t count = 0;
  for (const auto& r : dataset) {
    loss += bce_sum(r.user, r.items, r.clicks, phi);
    count += r.clicks.size();
  }
  return count == 0 ? 0.0 : loss / static_cast<double>(count);
}

EvaluatorFit train_evaluator(const Dataset& dataset, const ModelDims& dims,
                             const TrainConfig& config) {
  require(!dataset.empty(), "train_evaluator: empty dataset");
  require(config.learning_rate > 0.0 && config.epochs >= 1 && config.batch_size >= 1,
          "train_evaluator: invalid configuration");
  for (const auto& r : dataset) {
    require(r.clicks.size() == r.items.rows(), "train_evaluator: clicks not aligned with items");
    for (int c : r.clicks) require(c == 0 || c == 1, "train_evaluator: click labels must be 0 or 1");
  }
  Rng rng(derive_seed(config.seed, 0xe7a1));
  EvaluatorFit fit;
  fit.params = init_evaluator_params(dims, derive_seed(config.seed, 1));
  fit.initial_loss = mean_bce(dataset, fit.params);
  ParamSet velocity = fit.params.zeros_like();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(dataset.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t items = 0;
      for (std::size_t b = start; b < end; ++b) items += dataset[order[b]].clicks.size();
      ParamSet grads = fit.params.zeros_like();
      for (std::size_t b = start; b < end; ++b) {
        const auto& r = dataset[order[b]];
        accumulate_bce_grad(r.user, r.items, r.clicks, fit.params,
                            1.0 / static_cast<double>(items), grads);
      }
      fit.params = sgd_step(fit.params, grads, velocity, config);
    }
    fit.loss_curve.push_back(mean_bce(dataset, fit.params));
  }
  return fit;
}

ActorReward ActorReward::ndcg(std::size_t k) {
  require(k >= 1, "ndcg reward needs k >= 1");
  ActorReward r;
  r.k_ = k;
  return r;
}

ActorReward ActorReward::learned(ParamSet evaluator, std::size_t n) {
  require(n >= 1, "learned reward needs n >= 1");
  ActorReward r;
  r.k_ = n;
  r.evaluator_ = std::move(evaluator);
  return r;
}

ListScore ActorReward::bind(const InteractionRecord& record) const {
  if (evaluator_) return learned_list_score(record.user, record.items, *evaluator_, k_);
  require(record.clicks.size() == record.items.rows(), "ndcg reward needs a label per candidate");
  return metric_list_score(record.clicks, k_);
}

double accumulate_policy_gradient(const Request& request, const ParamView& params,
                                  const ListScore& reward, std::size_t samples,
                                  double entropy_bonus, Rng& rng, double weight, ParamSet& grads) {
  require(samples >= 2, "policy gradient needs at least two samples per request");
  std::vector<GeneratedList> lists;
  std::vector<double> rewards;
  lists.reserve(samples);
  rewards.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    lists.push_back(generate(request, params, Decoding::sample, &rng));
    rewards.push_back(reward(lists.back().order));
  }
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(samples);
  const double per_sample = weight / static_cast<double>(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double advantage = rewards[k] - mean;
    if (advantage == 0.0 && entropy_bonus == 0.0) continue;
    accumulate_actor_grad(request, params, lists[k].order, per_sample * advantage,
                          per_sample * entropy_bonus, grads);
  }
  return mean;
}

double mean_greedy_reward(const Dataset& records, std::size_t list_len, const ParamSet& theta,
                          const ActorReward& reward) {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) {
    const Request req = to_request(r, list_len);
    total += reward.bind(r)(generate(req, theta, Decoding::greedy).order);
  }
  return total / static_cast<double>(records.size());
}

ActorFit train_actor(const Dataset& dataset, std::size_t list_len, const ActorReward& reward,
                     const ModelDims& dims, const TrainConfig& config, const ParamSet* initial) {
  config.validate();
  require(!dataset.empty(), "train_actor: empty dataset");
  std::size_t holdout = static_cast<std::size_t>(
      std::floor(config.holdout_fraction * static_cast<double>(dataset.size())));
  if (config.holdout_fraction > 0.0 && dataset.size() > 1) holdout = std::max<std::size_t>(holdout, 1);
  const std::size_t train_size = dataset.size() - holdout;
  require(train_size >= 1, "train_actor: no training records after holdout");
  const Dataset train(dataset.begin(), dataset.begin() + static_cast<std::ptrdiff_t>(train_size));
  const Dataset held(dataset.begin() + static_cast<std::ptrdiff_t>(train_size), dataset.end());
  const Dataset& monitor = held.empty() ? train : held;

  ActorFit fit;
  fit.params = initial ? *initial : init_actor_params(dims, derive_seed(config.seed, 2));
  fit.initial_reward = mean_greedy_reward(monitor, list_len, fit.params, reward);
  ParamSet velocity = fit.params.zeros_like();
  Rng rng(derive_seed(config.seed, 0xac7));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(train.size(), rng);
    double reward_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      ParamSet grads = fit.params.zeros_like();
      // Descent gradient of the negated objective, averaged over the batch.
      const double weight = -1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const auto& r = train[order[b]];
        const Request req = to_request(r, list_len);
        reward_sum += accumulate_policy_gradient(req, fit.params, reward.bind(r),
                                                 config.samples_per_request,
                                                 config.entropy_bonus, rng, weight, grads);
      }
      fit.params = sgd_step(fit.params, grads, velocity, config);
    }
    fit.train_reward_curve.push_back(reward_sum / static_cast<double>(train.size()));
    fit.reward_curve.push_back(mean_greedy_reward(monitor, list_len, fit.params, reward));
  }
  return fit;
}

}  // namespace lastrank
