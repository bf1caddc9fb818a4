#include "lastrank/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lastrank/error.hpp"
#include "lastrank/evaluator.hpp"

namespace lastrank {

Policy parse_policy(std::string_view name) {
  if (name == "greedy") return Policy::greedy;
  if (name == "sampling") return Policy::sampling;
  if (name == "last") return Policy::last;
  if (name == "cascade") return Policy::cascade;
  throw ContractViolation("unknown policy \"" + std::string(name) +
                          "\" (expected greedy, sampling, last or cascade)");
}

std::string policy_name(Policy policy) {
  switch (policy) {
    case Policy::greedy: return "greedy";
    case Policy::sampling: return "sampling";
    case Policy::last: return "last";
    case Policy::cascade: return "cascade";
  }
  return "?";
}

std::vector<Policy> parse_policy_list(std::string_view text) {
  std::vector<Policy> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view token = text.substr(start, comma - start);
    require(!token.empty(), "empty entry in policy list \"" + std::string(text) + "\"");
    out.push_back(parse_policy(token));
    start = comma + 1;
  }
  require(!out.empty(), "no policies given");
  return out;
}

Objective parse_objective(std::string_view name) {
  if (name == "ndcg") return Objective::ndcg;
  if (name == "learned") return Objective::learned;
  throw ContractViolation("unknown objective \"" + std::string(name) + "\" (expected ndcg or learned)");
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "steps") return SweepParam::steps;
  if (name == "alpha") return SweepParam::alpha;
  throw ContractViolation("unknown sweep parameter \"" + std::string(name) + "\" (expected steps or alpha)");
}

LastConfig config_for_budget(LastConfig base, std::size_t budget) {
  require(budget >= 1, "generation budget must be at least 1");
  base.step_sizes = nested_step_sizes(budget);
  // One greedy list plus iterations * samples sampled lists.
  const std::size_t extra = budget - 1;
  if (extra == 0) {
    base.cascade_samples = 1;
    base.cascade_max_iters = 1;
  } else {
    base.cascade_samples = std::min(base.cascade_samples, extra);
    base.cascade_max_iters = static_cast<int>(extra / base.cascade_samples);
  }
  return base;
}

ServedResult serve_policy(Policy policy, const Request& request, const ParamSet& theta,
                          const ListScore& evaluate, std::size_t budget, const LastConfig& base) {
  const LastConfig config = config_for_budget(base, budget);
  switch (policy) {
    case Policy::greedy: {
      ServedResult r;
      r.list = serve_greedy(request, theta);
      r.lists_generated = 1;
      r.base_score = r.score = evaluate(r.list.order);
      r.scores.emplace_back(0.0, r.score);
      return r;
    }
    case Policy::sampling:
      return serve_sampling(request, theta, evaluate, budget, config.seed);
    case Policy::last:
      return last_parallel(request, theta, evaluate, config);
    case Policy::cascade:
      return last_cascade(request, theta, evaluate, config);
  }
  throw ContractViolation("unhandled policy");
}

const PolicyRow& BenchmarkReport::row(std::string_view policy) const {
  for (const auto& r : rows) {
    if (r.policy == policy) return r;
  }
  throw ContractViolation("report has no row for policy " + std::string(policy));
}

double sign_test_p_value(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "sign test needs paired samples");
  std::size_t plus = 0, minus = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) ++plus;
    else if (a[i] < b[i]) ++minus;
  }
  const std::size_t n = plus + minus;
  if (n == 0) return 1.0;
  const std::size_t tail = std::min(plus, minus);
  // P(X <= tail) for X ~ Binomial(n, 1/2), summed in log space.
  double cdf = 0.0;
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  for (std::size_t i = 0; i <= tail; ++i) {
    const double log_choose = std::lgamma(static_cast<double>(n) + 1.0) -
                              std::lgamma(static_cast<double>(i) + 1.0) -
                              std::lgamma(static_cast<double>(n - i) + 1.0);
    cdf += std::exp(log_choose + log_half_n);
  }
  return std::min(1.0, 2.0 * cdf);
}

PairedTest paired_sign_test(const PolicyRow& a, const PolicyRow& b) {
  PairedTest t;
  t.policy_a = a.policy;
  t.policy_b = b.policy;
  for (std::size_t i = 0; i < a.per_request.size(); ++i) {
    if (a.per_request[i] > b.per_request[i]) ++t.a_wins;
    else if (a.per_request[i] < b.per_request[i]) ++t.b_wins;
    else ++t.ties;
  }
  t.p_value = sign_test_p_value(a.per_request, b.per_request);
  return t;
}

ListScore objective_score(const InteractionRecord& record, Objective objective,
                          const ParamSet* evaluator, std::size_t list_len, std::size_t metric_k) {
  if (objective == Objective::learned) {
    require(evaluator != nullptr, "the learned objective needs an evaluator checkpoint");
    return learned_list_score(record.user, record.items, *evaluator, list_len);
  }
  require(record.clicks.size() == record.items.rows(), "the ndcg objective needs labels for every candidate");
  return metric_list_score(record.clicks, metric_k);
}

BenchmarkReport run_benchmark(const Dataset& test, const ParamSet& actor, const ParamSet* evaluator,
                              const BenchmarkConfig& config) {
  require(!test.empty(), "benchmark needs at least one test record");
  require(!config.policies.empty(), "benchmark needs at least one policy");
  const LastConfig last = config_for_budget(config.last, config.budget);
  BenchmarkReport report;
  for (Policy policy : config.policies) {
    PolicyRow row;
    row.policy = policy_name(policy);
    row.per_request.reserve(test.size());
    double e5 = 0.0, e10 = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& record : test) {
      const Request req = to_request(record, config.list_len);
      const ListScore evaluate =
          objective_score(record, config.objective, evaluator, config.list_len, config.metric_k);
      const ServedResult served = serve_policy(policy, req, actor, evaluate, config.budget, last);
      const auto& order = served.list.order;
      row.per_request.push_back(served.score);
      row.lists_generated += served.lists_generated;
      if (!record.clicks.empty()) {
        row.map5 += map_evaluate(record.clicks, order, 5);
        row.map10 += map_evaluate(record.clicks, order, 10);
        row.ndcg5 += metric_evaluate(record.clicks, order, 5);
        row.ndcg10 += metric_evaluate(record.clicks, order, 10);
      }
      if (evaluator) {
        const EvaluatorSession session(record.user, record.items, *evaluator);
        e5 += session.at_n(order, std::min<std::size_t>(5, order.size()));
        e10 += session.at_n(order, std::min<std::size_t>(10, order.size()));
      }
    }
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double n = static_cast<double>(test.size());
    row.map5 /= n;
    row.map10 /= n;
    row.ndcg5 /= n;
    row.ndcg10 /= n;
    if (evaluator) {
      row.evaluator5 = e5 / n;
      row.evaluator10 = e10 / n;
    }
    double total = 0.0;
    for (double s : row.per_request) total += s;
    row.mean_objective = total / n;
    report.rows.push_back(std::move(row));
  }
  for (const auto& a : report.rows) {
    if (a.policy != "last" && a.policy != "cascade") continue;
    for (const auto& b : report.rows) {
      if (b.policy == "last" || b.policy == "cascade") continue;
      report.tests.push_back(paired_sign_test(a, b));
    }
  }
  return report;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

void write_report_csv(std::ostream& out, const BenchmarkReport& report, bool include_timing) {
  out << "policy,map@5,map@10,ndcg@5,ndcg@10,evaluator@5,evaluator@10,objective,lists_generated";
  if (include_timing) out << ",wall_time_s";
  out << '\n';
  for (const auto& r : report.rows) {
    out << r.policy << ',' << fmt(r.map5) << ',' << fmt(r.map10) << ',' << fmt(r.ndcg5) << ','
        << fmt(r.ndcg10) << ',' << fmt(r.evaluator5) << ',' << fmt(r.evaluator10) << ','
        << fmt(r.mean_objective) << ',' << r.lists_generated;
    if (include_timing) out << ',' << fmt(r.wall_time_s);
    out << '\n';
  }
}

void write_sign_tests_csv(std::ostream& out, const BenchmarkReport& report) {
  out << "policy_a,policy_b,a_wins,b_wins,ties,p_value\n";
  for (const auto& t : report.tests) {
    out << t.policy_a << ',' << t.policy_b << ',' << t.a_wins << ',' << t.b_wins << ','
        << t.ties << ',' << fmt(t.p_value) << '\n';
  }
}

void print_report(std::ostream& out, const BenchmarkReport& report) {
  const auto cell = [](const std::optional<double>& v) {
    std::ostringstream os;
    if (v) os << std::fixed << std::setprecision(4) << *v;
    else os << "-";
    return os.str();
  };
  out << std::left << std::setw(10) << "policy";
  for (const char* h : {"map@5", "map@10", "ndcg@5", "ndcg@10", "eval@5", "eval@10", "lists", "time(s)"}) {
    out << std::right << std::setw(10) << h;
  }
  out << '\n';
  for (const auto& r : report.rows) {
    out << std::left << std::setw(10) << r.policy << std::right << std::setw(10) << cell(r.map5)
        << std::setw(10) << cell(r.map10) << std::setw(10) << cell(r.ndcg5) << std::setw(10)
        << cell(r.ndcg10) << std::setw(10) << cell(r.evaluator5) << std::setw(10)
        << cell(r.evaluator10) << std::setw(10) << r.lists_generated << std::setw(10)
        << cell(r.wall_time_s) << '\n';
  }
  for (const auto& t : report.tests) {
    out << "sign test " << t.policy_a << " vs " << t.policy_b << ": " << t.a_wins << " wins, "
        << t.b_wins << " losses, " << t.ties << " ties, p=" << std::setprecision(4) << t.p_value
        << '\n';
  }
}

std::vector<SweepPoint> run_sweep(const Dataset& test, const ParamSet& actor,
                                  const ParamSet* evaluator, SweepParam param,
                                  std::span<const double> values, const BenchmarkConfig& config) {
  require(!values.empty(), "sweep needs at least one value");
  require(!test.empty(), "sweep needs at least one test record");
  std::vector<SweepPoint> points;
  for (double value : values) {
    LastConfig last = config_for_budget(config.last, config.budget);
    if (param == SweepParam::steps) {
      require(value >= 1.0 && value == std::floor(value), "step-set sizes must be positive integers");
      last.step_sizes = nested_step_sizes(static_cast<std::size_t>(value));
    } else {
      require(value > 0.0, "alpha values must be positive");
      last.alpha = value;
    }
    SweepPoint p;
    p.value = value;
    for (const auto& record : test) {
      const Request req = to_request(record, config.list_len);
      const ListScore evaluate =
          objective_score(record, config.objective, evaluator, config.list_len, config.metric_k);
      const ServedResult r = last_parallel(req, actor, evaluate, last);
      p.mean_score += r.score;
      p.mean_lists_generated += static_cast<double>(r.lists_generated);
    }
    p.mean_score /= static_cast<double>(test.size());
    p.mean_lists_generated /= static_cast<double>(test.size());
    points.push_back(p);
  }
  return points;
}

void write_sweep_csv(std::ostream& out, SweepParam param, std::span<const SweepPoint> points) {
  out << "param,value,mean_score,mean_lists_generated\n";
  const char* name = param == SweepParam::steps ? "steps" : "alpha";
  for (const auto& p : points) {
    out << name << ',' << fmt(p.value) << ',' << fmt(p.mean_score) << ','
        << fmt(p.mean_lists_generated) << '\n';
  }
}

}  // namespace lastrank
