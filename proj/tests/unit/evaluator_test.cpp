#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lastrank/error.hpp"
#include "lastrank/evaluator.hpp"
#include "lastrank/metrics.hpp"
#include "test_support.hpp"

using namespace lastrank;
using lastrank::oracle::all_arrangements;

namespace {

const ModelDims kDims{4, 3, 6};

Tensor random_items(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({n, d});
  for (double& v : t.data()) v = u(rng);
  return t;
}

std::vector<double> random_user(std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = u(rng);
  return v;
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> order) {
  Tensor out({order.size(), t.cols()});
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy_n(t.row(order[i]).begin(), t.cols(), out.row(i).begin());
  }
  return out;
}

// Straightforward DCG from the definition, used as an oracle.
double naive_dcg(const std::vector<int>& labels, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(k, labels.size()); ++i) s += labels[i] / std::log2(i + 2.0);
  return s;
}

}  // namespace

TEST(Ndcg, GoldenValues) {
  EXPECT_EQ(ndcg_at_k(std::vector<int>{1, 0, 0, 0, 0}, 5), 1.0);
  EXPECT_NEAR(ndcg_at_k(std::vector<int>{0, 1, 0, 0, 0}, 5), 0.6309, 1e-3);
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::vector<int>{0, 1, 0, 0, 0}, 5), 1.0 / std::log2(3.0));
}

TEST(Ndcg, NoRelevantItemsIsZero) {
  for (std::size_t k : {1u, 3u, 10u}) EXPECT_EQ(ndcg_at_k(std::vector<int>{0, 0, 0}, k), 0.0);
}

TEST(Ndcg, RejectsZeroCutoff) {
  EXPECT_THROW(ndcg_at_k(std::vector<int>{1}, 0), ContractViolation);
}

TEST(Ndcg, MatchesNaiveOracleOnRandomLists) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> labels(1 + rng() % 9);
    for (int& l : labels) l = static_cast<int>(rng() % 2);
    const std::size_t k = 1 + rng() % 10;
    std::vector<int> ideal = labels;
    std::sort(ideal.rbegin(), ideal.rend());
    const double idcg = naive_dcg(ideal, k);
    const double expect = idcg == 0.0 ? 0.0 : naive_dcg(labels, k) / idcg;
    EXPECT_NEAR(ndcg_at_k(labels, k), expect, 1e-12);
  }
}

TEST(Ndcg, LabelDescendingOrdersAreExactlyTheMaximizers) {
  std::mt19937_64 rng(2);
  for (std::size_t m = 2; m <= 6; ++m) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> cand(m);
      for (int& l : cand) l = static_cast<int>(rng() % 2);
      if (std::count(cand.begin(), cand.end(), 1) == 0) cand[0] = 1;
      for (const auto& order : all_arrangements(m, m)) {
        std::vector<int> labels(m);
        for (std::size_t i = 0; i < m; ++i) labels[i] = cand[order[i]];
        const bool descending = std::is_sorted(labels.rbegin(), labels.rend());
        const double v = ndcg_at_k(labels, m);
        if (descending) {
          EXPECT_DOUBLE_EQ(v, 1.0);
        } else {
          EXPECT_LT(v, 1.0 - 1e-12);
        }
      }
    }
  }
}

TEST(Ndcg, PoolVariantUsesAllCandidateLabels) {
  // Best obtainable 2-list from the pool holds two relevant items.
  const std::vector<int> pool{1, 0, 1, 0};
  const double v = ndcg_at_k(std::vector<int>{1, 0}, 5, pool);
  EXPECT_NEAR(v, 1.0 / (1.0 + 1.0 / std::log2(3.0)), 1e-12);
  EXPECT_EQ(ndcg_at_k(std::vector<int>{1, 1}, 5, pool), 1.0);
  EXPECT_EQ(ndcg_at_k(std::vector<int>{0, 0}, 5, std::vector<int>{0, 0, 0}), 0.0);
}

TEST(Map, Examples) {
  EXPECT_EQ(map_at_k(std::vector<int>{1, 0, 0}, 3), 1.0);
  EXPECT_EQ(map_at_k(std::vector<int>{0, 1}, 2), 0.5);
  EXPECT_NEAR(map_at_k(std::vector<int>{1, 1, 0, 1}, 4), (1.0 + 1.0 + 0.75) / 3.0, 1e-12);
  EXPECT_NEAR(map_at_k(std::vector<int>{1, 1, 0, 1}, 4), 0.91667, 1e-5);
  EXPECT_EQ(map_at_k(std::vector<int>{0, 0}, 2), 0.0);
}

TEST(Map, NormalizerIsCappedByCutoff) {
  // Three relevant items but k = 2: normaliser is 2.
  EXPECT_EQ(map_at_k(std::vector<int>{1, 1, 1}, 2), 1.0);
}

TEST(Metrics, TruncationPropertyUnderSuffixPermutation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 8;
    const std::size_t k = 1 + rng() % n;
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng() % 2);
    std::vector<int> shuffled = labels;
    std::shuffle(shuffled.begin() + static_cast<long>(k), shuffled.end(), rng);
    EXPECT_EQ(ndcg_at_k(labels, k), ndcg_at_k(shuffled, k));
    EXPECT_EQ(map_at_k(labels, k), map_at_k(shuffled, k));
  }
}

TEST(Metrics, RangeIsUnitInterval) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> labels(1 + rng() % 10);
    for (int& l : labels) l = static_cast<int>(rng() % 2);
    const std::size_t k = 1 + rng() % 12;
    for (double v : {ndcg_at_k(labels, k), map_at_k(labels, k)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(MetricEvaluate, Examples) {
  const std::vector<int> labels{0, 0, 1, 0, 0};
  EXPECT_EQ(metric_evaluate(labels, std::vector<std::size_t>{2, 0, 1, 3, 4}, 5), 1.0);
  const std::vector<std::size_t> identity{0, 1, 2, 3, 4};
  EXPECT_EQ(metric_evaluate(labels, identity, 5), ndcg_at_k(labels, 5));
}

TEST(MetricEvaluate, EnumerationArgmaxIsLabelSorted) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> labels(5);
    for (int& l : labels) l = static_cast<int>(rng() % 2);
    labels[rng() % 5] = 1;
    std::vector<std::size_t> best;
    double best_v = -1.0;
    for (const auto& order : all_arrangements(5, 5)) {
      const double v = metric_evaluate(labels, order, 5);
      if (v > best_v) {
        best_v = v;
        best = order;
      }
    }
    std::vector<int> permuted;
    for (std::size_t i : best) permuted.push_back(labels[i]);
    EXPECT_TRUE(std::is_sorted(permuted.rbegin(), permuted.rend()));
    EXPECT_EQ(best_v, 1.0);
  }
}

TEST(MetricEvaluate, RejectsOutOfRangeOrder) {
  EXPECT_THROW(metric_evaluate(std::vector<int>{1, 0}, std::vector<std::size_t>{0, 2}, 2),
               ContractViolation);
}

TEST(PredictClickProbs, ZeroWeightsGiveOneHalf) {
  std::mt19937_64 rng(6);
  ParamSet phi = init_evaluator_params(kDims, 1);
  for (const auto& name : phi.names()) {
    for (double& v : phi.at(name).data()) v = 0.0;
  }
  for (double p : predict_click_probs(random_user(4, rng), random_items(5, 3, rng), phi)) {
    EXPECT_EQ(p, 0.5);
  }
}

TEST(PredictClickProbs, PositionChangesOutput) {
  std::mt19937_64 rng(7);
  const ParamSet phi = init_evaluator_params(kDims, 2, 2.0);
  const auto user = random_user(4, rng);
  // Same item repeated: only the position feature distinguishes the slots.
  Tensor items({5, 3});
  for (std::size_t i = 0; i < 5; ++i) {
    items.row(i)[0] = 0.3;
    items.row(i)[1] = -0.2;
    items.row(i)[2] = 0.9;
  }
  const auto p = predict_click_probs(user, items, phi);
  EXPECT_NE(p.front(), p.back());
}

TEST(PredictClickProbs, RangeAndDeterminism) {
  std::mt19937_64 rng(8);
  const ParamSet phi = init_evaluator_params(kDims, 3, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto user = random_user(4, rng);
    const Tensor items = random_items(1 + rng() % 8, 3, rng);
    const auto p = predict_click_probs(user, items, phi);
    ASSERT_EQ(p.size(), items.rows());
    for (double v : p) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
    EXPECT_EQ(p, predict_click_probs(user, items, phi));
  }
}

TEST(PredictClickProbs, ShapeMismatchThrows) {
  std::mt19937_64 rng(9);
  const ParamSet phi = init_evaluator_params(kDims, 3);
  EXPECT_THROW(predict_click_probs(random_user(3, rng), random_items(2, 3, rng), phi),
               ContractViolation);
  EXPECT_THROW(predict_click_probs(random_user(4, rng), random_items(2, 4, rng), phi),
               ContractViolation);
}

TEST(EvaluatorAtN, MeanOfLeadingPositions) {
  std::mt19937_64 rng(10);
  const ParamSet phi = init_evaluator_params(kDims, 4, 2.0);
  const auto user = random_user(4, rng);
  const Tensor items = random_items(5, 3, rng);
  const auto p = predict_click_probs(user, items, phi);
  EXPECT_EQ(evaluator_at_n(user, items, phi, 1), p[0]);
  for (std::size_t n = 1; n <= 5; ++n) {
    const double mean = std::accumulate(p.begin(), p.begin() + static_cast<long>(n), 0.0) / n;
    EXPECT_NEAR(evaluator_at_n(user, items, phi, n), mean, 1e-15);
  }
  EXPECT_THROW(evaluator_at_n(user, items, phi, 6), ContractViolation);
}

TEST(EvaluatorSession, MatchesDirectPrediction) {
  std::mt19937_64 rng(11);
  const ParamSet phi = init_evaluator_params(kDims, 5, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto user = random_user(4, rng);
    const Tensor cands = random_items(8, 3, rng);
    EvaluatorSession session(user, cands, phi);
    std::vector<std::size_t> order(8);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(5);
    const auto direct = predict_click_probs(user, gather_rows(cands, order), phi);
    const auto cached = session.click_probs(order);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(cached[i], direct[i], 1e-12);
    EXPECT_NEAR(session.at_n(order, 3), evaluator_at_n(user, gather_rows(cands, order), phi, 3), 1e-12);
  }
}

TEST(EvaluatorSession, PermutationChangesPerItemOutputs) {
  std::mt19937_64 rng(12);
  const ParamSet phi = init_evaluator_params(kDims, 6, 2.0);
  const auto user = random_user(4, rng);
  const Tensor cands = random_items(4, 3, rng);
  EvaluatorSession session(user, cands, phi);
  const auto a = session.click_probs(std::vector<std::size_t>{0, 1, 2});
  const auto b = session.click_probs(std::vector<std::size_t>{2, 1, 0});
  EXPECT_NE(a[0], b[2]);
}

TEST(LearnedListScore, ClampsCutoffToListLength) {
  std::mt19937_64 rng(13);
  const ParamSet phi = init_evaluator_params(kDims, 7, 2.0);
  const auto user = random_user(4, rng);
  const Tensor cands = random_items(6, 3, rng);
  const std::vector<std::size_t> order{4, 1, 0};
  const ListScore at10 = learned_list_score(user, cands, phi, 10);
  EXPECT_NEAR(at10(order), evaluator_at_n(user, gather_rows(cands, order), phi, 3), 1e-12);
}

// Monotone in each top-n probability: built directly on the mean.
TEST(EvaluatorAtN, MonotoneInEachLeadingProbability) {
  std::mt19937_64 rng(14);
  const ParamSet phi = init_evaluator_params(kDims, 8, 2.0);
  const auto user = random_user(4, rng);
  const Tensor items = random_items(5, 3, rng);
  auto p = predict_click_probs(user, items, phi);
  const double base = std::accumulate(p.begin(), p.begin() + 3, 0.0) / 3.0;
  EXPECT_NEAR(base, evaluator_at_n(user, items, phi, 3), 1e-15);
  for (std::size_t i = 0; i < 3; ++i) {
    auto q = p;
    q[i] = std::min(1.0, q[i] + 0.01);
    EXPECT_GT(std::accumulate(q.begin(), q.begin() + 3, 0.0) / 3.0, base);
  }
}

TEST(BceGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(15);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ParamSet phi = init_evaluator_params(kDims, 400 + trial, 1.5);
    const AdaptableMask mask = AdaptableMask::all(phi);
    const auto user = random_user(4, rng);
    const Tensor items = random_items(5, 3, rng);
    std::vector<int> clicks(5);
    for (int& c : clicks) c = static_cast<int>(rng() % 2);
    ParamSet grads = phi.zeros_like();
    accumulate_bce_grad(user, items, clicks, phi, 1.0, grads);
    const auto g = mask.gather(grads);
    for (int c = 0; c < 20; ++c) {
      const std::size_t idx = rng() % g.size();
      const double fd = oracle::central_difference(phi, mask, idx, 1e-3, [&](const ParamView& v) {
        return bce_sum(user, items, clicks, v);
      });
      worst = std::max(worst, oracle::rel_err(g[idx], fd, 1e-6));
    }
  }
  EXPECT_LT(worst, 1e-4);
}
