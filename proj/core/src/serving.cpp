#include "lastrank/serving.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lastrank/error.hpp"
#include "lastrank/rng.hpp"

namespace lastrank {

void LastConfig::validate() const {
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  require(!step_sizes.empty(), "step_sizes must not be empty");
  require(std::find(step_sizes.begin(), step_sizes.end(), 0.0) != step_sizes.end(),
          "step_sizes must contain 0");
  for (double eta : step_sizes) require(std::isfinite(eta), "step sizes must be finite");
  require(cascade_max_iters >= 1, "cascade_max_iters must be at least 1");
  require(cascade_tol >= 0.0, "cascade_tol must be non-negative");
  require(cascade_samples >= 1, "cascade_samples must be at least 1");
  require(cascade_inner_lr >= 0.0, "cascade_inner_lr must be non-negative");
}

std::vector<double> normalized_delta(std::span<const double> theta_masked,
                                     std::span<const double> gradient, double alpha,
                                     NormKind norm) {
  require(theta_masked.size() == gradient.size(),
          "normalized_delta: parameter and gradient lengths differ");
  std::vector<double> delta(gradient.size(), 0.0);
  const double g_norm = vector_norm(gradient, norm);
  if (g_norm < kZeroGradientThreshold) return delta;
  const double factor = alpha * vector_norm(theta_masked, norm) / g_norm;
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = factor * gradient[i];
  return delta;
}

std::size_t select_step(std::span<const std::pair<double, double>> scores) {
  require(!scores.empty(), "select_step: no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const auto [eta, score] = scores[i];
    const auto [best_eta, best_score] = scores[best];
    if (score > best_score) {
      best = i;
    } else if (score == best_score) {
      if (std::abs(eta) < std::abs(best_eta) ||
          (std::abs(eta) == std::abs(best_eta) && eta > best_eta)) {
        best = i;
      }
    }
  }
  return best;
}

std::uint64_t request_seed(const Request& request, std::uint64_t seed) {
  std::uint64_t h = hash_values(request.user);
  h = hash_values(request.candidates.data(), h);
  h = mix64(h ^ request.list_len);
  return derive_seed(seed, h);
}

GeneratedList serve_greedy(const Request& request, const ParamSet& theta) {
  return generate(request, theta, Decoding::greedy);
}

ServedResult last_parallel(const Request& request, const ParamSet& theta,
                           const ListScore& evaluate, const LastConfig& config) {
  config.validate();
  config.mask.validate(theta);

  ServedResult out;
  out.list = generate(request, theta, Decoding::greedy);
  out.lists_generated = 1;
  out.base_score = evaluate(out.list.order);
  out.score = out.base_score;

  const std::vector<double> g = grad_log_prob(request, theta, out.list.order, config.mask);
  if (vector_norm(g, config.norm) < kZeroGradientThreshold) {
    out.scores.emplace_back(0.0, out.base_score);
    return out;
  }
  const std::vector<double> delta =
      normalized_delta(config.mask.gather(theta), g, config.alpha, config.norm);

  std::vector<GeneratedList> lists;
  lists.reserve(config.step_sizes.size());
  for (double eta : config.step_sizes) {
    if (eta == 0.0) {
      // theta + 0 * delta reproduces the greedy list already generated.
      lists.push_back(out.list);
      out.scores.emplace_back(eta, out.base_score);
      continue;
    }
    const ParamView shifted = axpy_overlay(theta, config.mask, delta, eta);
    lists.push_back(generate(request, shifted, Decoding::greedy));
    ++out.lists_generated;
    out.scores.emplace_back(eta, evaluate(lists.back().order));
  }
  const std::size_t best = select_step(out.scores);
  out.eta_star = out.scores[best].first;
  out.score = out.scores[best].second;
  out.list = std::move(lists[best]);
  return out;
}

ServedResult last_cascade(const Request& request, const ParamSet& theta,
                          const ListScore& evaluate, const LastConfig& config) {
  config.validate();
  config.mask.validate(theta);

  ServedResult out;
  out.list = generate(request, theta, Decoding::greedy);
  out.lists_generated = 1;
  out.base_score = evaluate(out.list.order);
  out.score = out.base_score;
  out.scores.emplace_back(0.0, out.base_score);

  ParamSet local = theta;
  const double theta_norm = vector_norm(config.mask.gather(theta), config.norm);
  Rng rng(request_seed(request, config.seed));

  for (int iter = 1; iter <= config.cascade_max_iters; ++iter) {
    const double best_before = out.score;
    std::vector<GeneratedList> samples;
    std::vector<double> rewards;
    for (std::size_t s = 0; s < config.cascade_samples; ++s) {
      samples.push_back(generate(request, local, Decoding::sample, &rng));
      rewards.push_back(evaluate(samples.back().order));
      ++out.lists_generated;
      if (rewards.back() > out.score) {
        out.score = rewards.back();
        out.list = samples.back();
      }
    }
    out.iterations_used = iter;
    if (out.score - best_before < config.cascade_tol) break;
    if (iter == config.cascade_max_iters || samples.size() < 2) continue;

    // Raise the probability of lists that beat the sample mean.
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    std::vector<double> direction(config.mask.masked_len(local), 0.0);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const double advantage = rewards[s] - mean;
      if (advantage == 0.0) continue;
      const auto g = grad_log_prob(request, local, samples[s].order, config.mask);
      for (std::size_t i = 0; i < g.size(); ++i) direction[i] += advantage * g[i];
    }
    const double d_norm = vector_norm(direction, config.norm);
    if (d_norm < kZeroGradientThreshold) continue;
    const double step = config.cascade_inner_lr * theta_norm / d_norm;
    local = axpy_overlay(local, config.mask, direction, step).materialize();
  }
  return out;
}

ServedResult serve_sampling(const Request& request, const ParamSet& theta,
                            const ListScore& evaluate, std::size_t k, std::uint64_t seed) {
  require(k >= 1, "serve_sampling: K must be at least 1");
  ServedResult out;
  out.list = generate(request, theta, Decoding::greedy);
  out.lists_generated = 1;
  out.base_score = evaluate(out.list.order);
  out.score = out.base_score;
  out.scores.emplace_back(0.0, out.base_score);
  Rng rng(request_seed(request, seed));
  for (std::size_t i = 1; i < k; ++i) {
    GeneratedList candidate = generate(request, theta, Decoding::sample, &rng);
    ++out.lists_generated;
    const double score = evaluate(candidate.order);
    if (score > out.score) {
      out.score = score;
      out.list = std::move(candidate);
    }
  }
  return out;
}

std::vector<double> nested_step_sizes(std::size_t count) {
  require(count >= 1, "nested_step_sizes: count must be at least 1");
  std::vector<double> sequence{0.0};
  // Magnitudes 1, 1/2, 2, 1/4, 4, ...; each adds +m then -m.
  for (int level = 1; sequence.size() < count; ++level) {
    const double magnitude = level % 2 == 1 ? std::ldexp(1.0, (level - 1) / 2)
                                            : std::ldexp(1.0, -level / 2);
    sequence.push_back(magnitude);
    sequence.push_back(-magnitude);
  }
  sequence.resize(count);
  std::sort(sequence.begin(), sequence.end());
  return sequence;
}

}  // namespace lastrank
