#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lastrank/actor.hpp"
#include "lastrank/evaluator.hpp"
#include "lastrank/param_set.hpp"

namespace lastrank {

// Serving-time learning. Every entry point takes theta by const reference
// and keeps all per-request state (gradient, overlay, rng) local, so one
// deployed ParamSet can serve concurrent requests.

struct LastConfig {
  double alpha = 0.01;
  std::vector<double> step_sizes{-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
  AdaptableMask mask = default_actor_mask();
  NormKind norm = NormKind::l2;
  int cascade_max_iters = 3;
  double cascade_tol = 0.0;
  double cascade_inner_lr = 0.02;
  std::size_t cascade_samples = 2;
  std::uint64_t seed = 42;

  void validate() const;
};

inline constexpr double kZeroGradientThreshold = 1e-12;

struct ServedResult {
  GeneratedList list;
  double eta_star = 0.0;
  double score = 0.0;                               // evaluation of `list`
  double base_score = 0.0;                          // evaluation of the greedy list
  std::vector<std::pair<double, double>> scores;    // (eta, E_eta) in step_sizes order
  int iterations_used = 0;                          // cascade only
  std::size_t lists_generated = 0;
};

// alpha * (|theta_masked| / |g|) * g. Returns zeros when |g| is below the
// zero-gradient threshold.
std::vector<double> normalized_delta(std::span<const double> theta_masked,
                                     std::span<const double> gradient, double alpha,
                                     NormKind norm = NormKind::l2);

// Index of the winning step: highest score, then smallest |eta|, then
// positive sign.
std::size_t select_step(std::span<const std::pair<double, double>> scores);

// The parallel variant: one gradient of log P(greedy list) on the masked
// subset, K = |step_sizes| candidate lists at theta + eta * delta, the
// evaluator's argmax is served. theta is never written.
ServedResult last_parallel(const Request& request, const ParamSet& theta,
                           const ListScore& evaluate, const LastConfig& config);

// The cascade variant: a request-local copy theta' is improved by
// REINFORCE on fresh samples; the best list seen (including the greedy
// list) is served.
ServedResult last_cascade(const Request& request, const ParamSet& theta,
                          const ListScore& evaluate, const LastConfig& config);

// Best of the greedy list plus K-1 lists sampled from the unmodified policy.
ServedResult serve_sampling(const Request& request, const ParamSet& theta,
                            const ListScore& evaluate, std::size_t k, std::uint64_t seed);

GeneratedList serve_greedy(const Request& request, const ParamSet& theta);

// Per-request rng seed: a function of the request contents and the
// configured seed, so results do not depend on arrival order.
std::uint64_t request_seed(const Request& request, std::uint64_t seed);

// Nested step sets used by the step-count sweep:
// prefixes of [0, 1, -1, 0.5, -0.5, 2, -2, 0.25, -0.25, 4, -4, ...].
std::vector<double> nested_step_sizes(std::size_t count);

}  // namespace lastrank
