#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lastrank/actor.hpp"
#include "lastrank/error.hpp"
#include "test_support.hpp"

using namespace lastrank;
using lastrank::oracle::all_arrangements;
using lastrank::oracle::random_request;

namespace {

const ModelDims kDims{4, 3, 6};

ParamSet zero_scorer(const ModelDims& dims, std::uint64_t seed) {
  ParamSet p = init_actor_params(dims, seed);
  for (const char* name : {actor_param::kHiddenWeight, actor_param::kHiddenBias,
                           actor_param::kOutWeight, actor_param::kOutBias}) {
    for (double& v : p.at(name).data()) v = 0.0;
  }
  return p;
}

}  // namespace

TEST(Generate, SingleCandidate) {
  std::mt19937_64 rng(1);
  const Request req = random_request(1, 1, kDims, rng);
  const GeneratedList l = generate(req, init_actor_params(kDims, 3), Decoding::greedy);
  EXPECT_EQ(l.order, (std::vector<std::size_t>{0}));
  EXPECT_EQ(l.step_probs, (std::vector<double>{1.0}));
  EXPECT_EQ(l.log_prob, 0.0);
}

TEST(Generate, ZeroScorerIsUniformOverRemaining) {
  std::mt19937_64 rng(2);
  const Request req = random_request(4, 2, kDims, rng);
  const GeneratedList l = generate(req, zero_scorer(kDims, 5), Decoding::greedy);
  ASSERT_EQ(l.step_probs.size(), 2u);
  EXPECT_NEAR(l.step_probs[0], 0.25, 1e-15);
  EXPECT_NEAR(l.step_probs[1], 1.0 / 3.0, 1e-15);
  // Uniform ties resolve to the lowest index.
  EXPECT_EQ(l.order, (std::vector<std::size_t>{0, 1}));
}

TEST(Generate, GreedyIsDeterministic) {
  std::mt19937_64 rng(3);
  const Request req = random_request(8, 5, kDims, rng);
  const ParamSet p = init_actor_params(kDims, 9);
  EXPECT_EQ(generate(req, p, Decoding::greedy), generate(req, p, Decoding::greedy));
}

TEST(Generate, OrderIsDistinctAndLogProbConsistent) {
  std::mt19937_64 rng(4);
  const ParamSet p = init_actor_params(kDims, 10, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Request req = random_request(7, 4, kDims, rng);
    const GeneratedList l = generate(req, p, Decoding::sample, &rng);
    std::vector<std::size_t> sorted = l.order;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    EXPECT_LT(sorted.back(), 7u);
    double sum = 0.0;
    for (double sp : l.step_probs) {
      EXPECT_GT(sp, 0.0);
      EXPECT_LE(sp, 1.0);
      sum += std::log(sp);
    }
    EXPECT_NEAR(sum, l.log_prob, 1e-9);
  }
}

TEST(Generate, GreedyPicksModalItemEachStep) {
  std::mt19937_64 rng(5);
  const ParamSet p = init_actor_params(kDims, 11, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Request req = random_request(6, 4, kDims, rng);
    const GeneratedList l = generate(req, p, Decoding::greedy);
    // Re-score each step by forcing every alternative first item.
    for (std::size_t t = 0; t < l.order.size(); ++t) {
      std::vector<bool> used(6, false);
      for (std::size_t s = 0; s < t; ++s) used[l.order[s]] = true;
      for (std::size_t alt = 0; alt < 6; ++alt) {
        if (used[alt]) continue;
        // Prefix + alt + any completion: the step-t probability is that of alt.
        std::vector<std::size_t> forced(l.order.begin(), l.order.begin() + static_cast<long>(t));
        forced.push_back(alt);
        for (std::size_t fill = 0; forced.size() < l.order.size(); ++fill) {
          if (std::find(forced.begin(), forced.end(), fill) == forced.end()) forced.push_back(fill);
        }
        const GeneratedList f = list_log_prob(req, p, forced);
        EXPECT_LE(f.step_probs[t], l.step_probs[t] + 1e-15);
      }
    }
  }
}

TEST(Generate, ListLongerThanCandidatesThrows) {
  std::mt19937_64 rng(6);
  Request req = random_request(3, 3, kDims, rng);
  req.list_len = 4;
  EXPECT_THROW(generate(req, init_actor_params(kDims, 1), Decoding::greedy), ContractViolation);
}

TEST(Generate, SampleWithoutRngThrows) {
  std::mt19937_64 rng(6);
  const Request req = random_request(3, 2, kDims, rng);
  EXPECT_THROW(generate(req, init_actor_params(kDims, 1), Decoding::sample), ContractViolation);
}

TEST(Generate, OverlayNeverMutatesBase) {
  std::mt19937_64 rng(7);
  const ParamSet p = init_actor_params(kDims, 12);
  const ParamSet snapshot = p;
  const AdaptableMask mask = default_actor_mask();
  std::vector<double> delta(mask.masked_len(p), 0.3);
  const Request req = random_request(6, 3, kDims, rng);
  for (double scale : {-2.0, 0.0, 1.0}) {
    generate(req, axpy_overlay(p, mask, delta, scale), Decoding::greedy);
  }
  EXPECT_TRUE(p.identical(snapshot));
}

TEST(Generate, OverlayAtScaleZeroMatchesBase) {
  std::mt19937_64 rng(8);
  const ParamSet p = init_actor_params(kDims, 13, 2.0);
  const AdaptableMask mask = default_actor_mask();
  std::vector<double> delta(mask.masked_len(p), 0.7);
  for (int trial = 0; trial < 10; ++trial) {
    const Request req = random_request(6, 3, kDims, rng);
    EXPECT_EQ(generate(req, axpy_overlay(p, mask, delta, 0.0), Decoding::greedy),
              generate(req, p, Decoding::greedy));
  }
}

TEST(ListLogProb, MatchesGreedyGeneration) {
  std::mt19937_64 rng(9);
  const ParamSet p = init_actor_params(kDims, 14, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Request req = random_request(8, 5, kDims, rng);
    const GeneratedList g = generate(req, p, Decoding::greedy);
    const GeneratedList f = list_log_prob(req, p, g.order);
    EXPECT_NEAR(f.log_prob, g.log_prob, 1e-12);
    EXPECT_EQ(f.step_probs, g.step_probs);
  }
}

TEST(ListLogProb, LastStepIsForced) {
  std::mt19937_64 rng(10);
  const Request req = random_request(2, 2, kDims, rng);
  const GeneratedList f = list_log_prob(req, init_actor_params(kDims, 15, 3.0),
                                       std::vector<std::size_t>{0, 1});
  EXPECT_EQ(f.step_probs[1], 1.0);
}

TEST(ListLogProb, RejectsInvalidOrders) {
  std::mt19937_64 rng(11);
  const Request req = random_request(4, 2, kDims, rng);
  const ParamSet p = init_actor_params(kDims, 1);
  EXPECT_THROW(list_log_prob(req, p, std::vector<std::size_t>{1, 1}), ContractViolation);
  EXPECT_THROW(list_log_prob(req, p, std::vector<std::size_t>{0, 4}), ContractViolation);
  EXPECT_THROW(list_log_prob(req, p, std::vector<std::size_t>{0}), ContractViolation);
}

// Enumeration oracle: the generator defines a distribution over lists.
TEST(ListLogProb, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(12);
  for (auto [m, n] : std::vector<std::pair<std::size_t, std::size_t>>{{4, 2}, {5, 3}, {3, 3}, {5, 1}}) {
    for (int trial = 0; trial < 5; ++trial) {
      const ParamSet p = init_actor_params(kDims, 100 + trial, 2.5);
      const Request req = random_request(m, n, kDims, rng);
      double total = 0.0;
      for (const auto& order : all_arrangements(m, n)) total += std::exp(list_log_prob(req, p, order).log_prob);
      EXPECT_NEAR(total, 1.0, 1e-9) << "M=" << m << " N=" << n;
    }
  }
}

TEST(GradLogProb, SingleCandidateHasZeroGradient) {
  std::mt19937_64 rng(13);
  const Request req = random_request(1, 1, kDims, rng);
  const ParamSet p = init_actor_params(kDims, 16);
  const auto g = grad_log_prob(req, p, std::vector<std::size_t>{0}, AdaptableMask::all(p));
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(GradLogProb, MatchesCentralDifferences) {
  std::mt19937_64 rng(14);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ParamSet p = init_actor_params(kDims, 200 + trial, 1.5);
    const AdaptableMask mask = AdaptableMask::all(p);
    const Request req = random_request(6, 4, kDims, rng);
    const GeneratedList l = generate(req, p, Decoding::sample, &rng);
    const auto g = grad_log_prob(req, p, l.order, mask);
    for (int c = 0; c < 20; ++c) {
      const std::size_t idx = rng() % g.size();
      const double fd = oracle::central_difference(p, mask, idx, 1e-3, [&](const ParamView& v) {
        return list_log_prob(req, v, l.order).log_prob;
      });
      worst = std::max(worst, oracle::rel_err(g[idx], fd, 1e-6));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(GradLogProb, NormalizedDirectionMatchesProbabilityGradient) {
  std::mt19937_64 rng(15);
  const ParamSet p = init_actor_params(kDims, 17, 2.0);
  const AdaptableMask mask = default_actor_mask();
  const Request req = random_request(6, 3, kDims, rng);
  const GeneratedList l = generate(req, p, Decoding::greedy);
  const auto g = grad_log_prob(req, p, l.order, mask);
  const double prob = std::exp(l.log_prob);
  std::vector<double> pg(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) pg[i] = prob * g[i];
  const double ng = l2_norm(g), npg = l2_norm(pg);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i] / ng, pg[i] / npg, 1e-9);
}

TEST(EntropyGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(16);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ParamSet p = init_actor_params(kDims, 300 + trial, 1.5);
    const AdaptableMask mask = AdaptableMask::all(p);
    const Request req = random_request(5, 3, kDims, rng);
    const GeneratedList l = generate(req, p, Decoding::sample, &rng);
    ParamSet grads = p.zeros_like();
    accumulate_actor_grad(req, p, l.order, 0.0, 1.0, grads);
    const auto g = mask.gather(grads);
    for (int c = 0; c < 20; ++c) {
      const std::size_t idx = rng() % g.size();
      const double fd = oracle::central_difference(p, mask, idx, 1e-3, [&](const ParamView& v) {
        return path_entropy(req, v, l.order);
      });
      worst = std::max(worst, oracle::rel_err(g[idx], fd, 1e-6));
    }
  }
  EXPECT_LT(worst, 1e-4);
}
