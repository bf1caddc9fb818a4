#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lastrank/data.hpp"
#include "lastrank/serving.hpp"

namespace lastrank {

enum class Policy { greedy, sampling, last, cascade };

Policy parse_policy(std::string_view name);
std::string policy_name(Policy policy);
std::vector<Policy> parse_policy_list(std::string_view comma_separated);

// Which list evaluation drives serving-time selection.
enum class Objective { ndcg, learned };

Objective parse_objective(std::string_view name);

// Step sizes and cascade schedule that spend exactly `budget` generations.
LastConfig config_for_budget(LastConfig base, std::size_t budget);

// Runs one policy on one request with the given generation budget.
ServedResult serve_policy(Policy policy, const Request& request, const ParamSet& theta,
                          const ListScore& evaluate, std::size_t budget, const LastConfig& config);

struct BenchmarkConfig {
  std::vector<Policy> policies{Policy::greedy, Policy::sampling, Policy::last, Policy::cascade};
  std::size_t budget = 7;
  std::size_t list_len = 5;
  Objective objective = Objective::learned;
  std::size_t metric_k = 5;  // NDCG cutoff when objective is ndcg
  LastConfig last;
  std::uint64_t seed = 42;
};

struct PolicyRow {
  std::string policy;
  double map5 = 0.0;
  double map10 = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  std::optional<double> evaluator5;
  std::optional<double> evaluator10;
  std::size_t lists_generated = 0;
  double wall_time_s = 0.0;
  double mean_objective = 0.0;
  std::vector<double> per_request;  // serving objective per request
};

struct PairedTest {
  std::string policy_a;
  std::string policy_b;
  std::size_t a_wins = 0;
  std::size_t b_wins = 0;
  std::size_t ties = 0;
  double p_value = 1.0;
};

struct BenchmarkReport {
  std::vector<PolicyRow> rows;
  std::vector<PairedTest> tests;  // LAST variants against each baseline

  const PolicyRow& row(std::string_view policy) const;
};

// Exact two-sided paired sign test; ties are dropped. 1.0 when every pair ties.
double sign_test_p_value(std::span<const double> a, std::span<const double> b);
PairedTest paired_sign_test(const PolicyRow& a, const PolicyRow& b);

// Serves every test record with every policy. Metric columns use the
// logged labels; evaluator columns need `evaluator`. Cutoffs larger than the
// list length are clamped to it.
BenchmarkReport run_benchmark(const Dataset& test, const ParamSet& actor, const ParamSet* evaluator,
                              const BenchmarkConfig& config);

void write_report_csv(std::ostream& out, const BenchmarkReport& report, bool include_timing = true);
void write_sign_tests_csv(std::ostream& out, const BenchmarkReport& report);
void print_report(std::ostream& out, const BenchmarkReport& report);

enum class SweepParam { steps, alpha };

SweepParam parse_sweep_param(std::string_view name);

struct SweepPoint {
  double value = 0.0;
  double mean_score = 0.0;
  double mean_lists_generated = 0.0;
};

// last_parallel over a grid. For `steps` each value is a step-set size
// (nested_step_sizes); for `alpha` each value replaces alpha.
std::vector<SweepPoint> run_sweep(const Dataset& test, const ParamSet& actor,
                                  const ParamSet* evaluator, SweepParam param,
                                  std::span<const double> values, const BenchmarkConfig& config);

void write_sweep_csv(std::ostream& out, SweepParam param, std::span<const SweepPoint> points);

// The serving objective bound to one record.
ListScore objective_score(const InteractionRecord& record, Objective objective,
                          const ParamSet* evaluator, std::size_t list_len, std::size_t metric_k);

}  // namespace lastrank
