#include "lastrank/commands.hpp"

#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "lastrank/checkpoint.hpp"
#include "lastrank/error.hpp"

namespace lastrank {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void check_dims(const ModelDims& a, const ModelDims& b, const std::string& what) {
  require(a.user_dim == b.user_dim && a.item_dim == b.item_dim,
          what + ": actor and evaluator feature dimensions differ");
}

BenchmarkConfig benchmark_config(const std::string& policies, const std::string& objective,
                                 std::size_t budget, std::size_t list_len, std::size_t metric_k,
                                 const LastConfig& last, std::uint64_t seed) {
  BenchmarkConfig c;
  c.policies = parse_policy_list(policies);
  c.objective = parse_objective(objective);
  c.budget = budget;
  c.list_len = list_len;
  c.metric_k = metric_k;
  c.last = last;
  c.last.seed = seed;
  c.seed = seed;
  return c;
}

}  // namespace

GeneratedData generate_splits(const GenDataOptions& o) {
  require(o.list_len >= 1, "--n must be at least 1");
  require(o.candidates >= o.list_len, "--m (" + std::to_string(o.candidates) +
                                          ") must be at least --n (" +
                                          std::to_string(o.list_len) + ")");
  GeneratedData d;
  d.world = generate_world(o.world, derive_seed(o.seed, 0x3011d));
  d.train = generate_dataset(d.world, o.train_records, o.candidates, o.list_len,
                             derive_seed(o.seed, 0x7a1));
  d.test = generate_dataset(d.world, o.test_records, o.candidates, o.list_len,
                            derive_seed(o.seed, 0x7e5));
  return d;
}

void cmd_gen_data(const GenDataOptions& o, std::ostream& log) {
  const GeneratedData d = generate_splits(o);
  std::filesystem::create_directories(o.out_dir);
  save_world(o.out_dir / "world.json", d.world);
  save_dataset(o.out_dir / "train.jsonl", d.train);
  save_dataset(o.out_dir / "test.jsonl", d.test);
  log << "wrote " << d.train.size() << " train and " << d.test.size() << " test records to "
      << o.out_dir.string() << '\n';
}

void cmd_train(const TrainOptions& o, std::ostream& log) {
  require(o.target == "actor" || o.target == "evaluator",
          "--target must be actor or evaluator, got \"" + o.target + "\"");
  const Dataset data = load_dataset(o.data);
  require(!data.empty(), "training data " + o.data.string() + " is empty");
  ModelDims dims = o.dims;
  dims.user_dim = data.front().user.size();
  dims.item_dim = data.front().items.cols();
  TrainConfig config = o.train;
  config.learning_rate =
      o.learning_rate.value_or(o.target == "actor" ? kActorLearningRate : kEvaluatorLearningRate);

  if (o.target == "evaluator") {
    const EvaluatorFit fit = train_evaluator(data, dims, config);
    save_checkpoint(o.out, Checkpoint{kCheckpointSchemaVersion, CheckpointKind::evaluator, dims, fit.params});
    if (o.curve) {
      auto out = open_out(*o.curve);
      out << "epoch,train_bce\n";
      for (std::size_t e = 0; e < fit.loss_curve.size(); ++e) {
        out << e + 1 << ',' << format_hex_double(fit.loss_curve[e]) << '\n';
      }
    }
    log << "evaluator BCE " << fit.initial_loss << " -> " << fit.loss_curve.back() << '\n';
    return;
  }

  require(o.reward == "ndcg" || o.reward == "learned",
          "--reward must be ndcg or learned, got \"" + o.reward + "\"");
  ActorReward reward = ActorReward::ndcg(o.reward_k);
  if (o.reward == "learned") {
    // The evaluator is trained first and stays frozen during actor training.
    if (!o.evaluator) {
      throw ContractViolation("--reward learned needs --evaluator <checkpoint>; train the evaluator first");
    }
    const Checkpoint ev = load_checkpoint(*o.evaluator, CheckpointKind::evaluator);
    check_dims(dims, ev.dims, "train");
    reward = ActorReward::learned(ev.params, o.list_len);
  }
  const ActorFit fit = train_actor(data, o.list_len, reward, dims, config);
  save_checkpoint(o.out, Checkpoint{kCheckpointSchemaVersion, CheckpointKind::actor, dims, fit.params});
  if (o.curve) {
    auto out = open_out(*o.curve);
    out << "epoch,heldout_reward,train_reward\n";
    for (std::size_t e = 0; e < fit.reward_curve.size(); ++e) {
      out << e + 1 << ',' << format_hex_double(fit.reward_curve[e]) << ','
          << format_hex_double(fit.train_reward_curve[e]) << '\n';
    }
  }
  log << "actor held-out reward " << fit.initial_reward << " -> " << fit.reward_curve.back() << '\n';
}

BenchmarkReport cmd_eval(const EvalOptions& o, std::ostream& out) {
  const BenchmarkConfig config =
      benchmark_config(o.policies, o.objective, o.budget, o.list_len, o.metric_k, o.last, o.seed);
  const Checkpoint actor = load_checkpoint(o.actor, CheckpointKind::actor);
  std::optional<Checkpoint> evaluator;
  if (o.evaluator) {
    evaluator = load_checkpoint(*o.evaluator, CheckpointKind::evaluator);
    check_dims(actor.dims, evaluator->dims, "eval");
  }
  require(config.objective == Objective::ndcg || evaluator.has_value(),
          "--objective learned needs --evaluator <checkpoint>");
  const Dataset test = load_dataset(o.data);
  const BenchmarkReport report =
      run_benchmark(test, actor.params, evaluator ? &evaluator->params : nullptr, config);
  print_report(out, report);
  if (o.csv) {
    auto f = open_out(*o.csv);
    write_report_csv(f, report);
  }
  if (o.tests_csv) {
    auto f = open_out(*o.tests_csv);
    write_sign_tests_csv(f, report);
  }
  return report;
}

void cmd_sweep(const SweepOptions& o, std::ostream& out) {
  const SweepParam param = parse_sweep_param(o.param);
  require(!o.values.empty(), "--values must list at least one value");
  const BenchmarkConfig config =
      benchmark_config("last", o.objective, o.budget, o.list_len, o.metric_k, o.last, o.seed);
  const Checkpoint actor = load_checkpoint(o.actor, CheckpointKind::actor);
  std::optional<Checkpoint> evaluator;
  if (o.evaluator) {
    evaluator = load_checkpoint(*o.evaluator, CheckpointKind::evaluator);
    check_dims(actor.dims, evaluator->dims, "sweep");
  }
  require(config.objective == Objective::ndcg || evaluator.has_value(),
          "--objective learned needs --evaluator <checkpoint>");
  const Dataset test = load_dataset(o.data);
  const auto points = run_sweep(test, actor.params, evaluator ? &evaluator->params : nullptr,
                                param, o.values, config);
  if (o.csv) {
    auto f = open_out(*o.csv);
    write_sweep_csv(f, param, points);
  } else {
    write_sweep_csv(out, param, points);
  }
}

namespace {

Request parse_request(const std::string& line, const ModelDims& dims) {
  const json j = json::parse(line);
  if (!j.is_object()) throw std::runtime_error("request must be a JSON object");
  for (const char* field : {"user", "candidates", "n"}) {
    if (!j.contains(field)) throw std::runtime_error(std::string("missing field \"") + field + "\"");
  }
  Request r;
  r.user = j.at("user").get<std::vector<double>>();
  const auto rows = j.at("candidates").get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw std::runtime_error("\"candidates\" must not be empty");
  std::vector<double> flat;
  for (const auto& row : rows) {
    if (row.size() != rows.front().size()) throw std::runtime_error("\"candidates\" rows differ in length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  r.candidates = Tensor({rows.size(), rows.front().size()}, std::move(flat));
  const json& n = j.at("n");
  if (!n.is_number_integer() || n.get<long long>() < 1) {
    throw std::runtime_error("\"n\" must be a positive integer");
  }
  r.list_len = n.get<std::size_t>();
  r.validate(dims);
  return r;
}

}  // namespace

ServeStats serve_stream(Policy policy, const ParamSet& theta, const ParamSet& phi,
                        std::size_t budget, const LastConfig& config, std::istream& in,
                        std::ostream& out) {
  const LastConfig last = config_for_budget(config, budget);
  const ModelDims dims = actor_dims(theta);
  check_dims(dims, evaluator_dims(phi), "serve");
  const std::uint64_t theta_before = param_fingerprint(theta);
  const std::uint64_t phi_before = param_fingerprint(phi);

  ServeStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++stats.requests;
    ordered_json response;
    try {
      const Request req = parse_request(line, dims);
      const ListScore evaluate = learned_list_score(req.user, req.candidates, phi, req.list_len);
      const ServedResult r = serve_policy(policy, req, theta, evaluate, budget, last);
      response = ordered_json{{"order", r.list.order}, {"eta_star", r.eta_star}, {"score", r.score}};
    } catch (const std::exception& e) {
      ++stats.errors;
      response = ordered_json{{"error", std::string(e.what())}};
    }
    out << response.dump() << '\n';
    out.flush();
  }
  if (param_fingerprint(theta) != theta_before || param_fingerprint(phi) != phi_before) {
    throw std::logic_error("model parameters changed while serving");
  }
  return stats;
}

ServeStats cmd_serve(const ServeOptions& o, std::istream& in, std::ostream& out) {
  const Policy policy = parse_policy(o.mode);
  const Checkpoint actor = load_checkpoint(o.actor, CheckpointKind::actor);
  const Checkpoint evaluator = load_checkpoint(o.evaluator, CheckpointKind::evaluator);
  LastConfig last = o.last;
  last.seed = o.seed;
  return serve_stream(policy, actor.params, evaluator.params, o.budget, last, in, out);
}

}  // namespace lastrank
