// lastrank: synthetic data, training, benchmarking and streaming serving for
// actor-evaluator re-ranking with serving-time learning.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lastrank/commands.hpp"
#include "lastrank/error.hpp"

namespace {

void add_last_flags(CLI::App* cmd, lastrank::LastConfig& last) {
  cmd->add_option("--alpha", last.alpha, "Gradient normalisation factor")->check(CLI::PositiveNumber);
  cmd->add_option("--cascade-samples", last.cascade_samples, "Sampled lists per cascade iteration")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--cascade-lr", last.cascade_inner_lr, "Cascade step length relative to |theta|");
  cmd->add_option("--cascade-tol", last.cascade_tol, "Stop when the best score improves less than this");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lastrank - re-ranking with learning at serving time"};
  app.require_subcommand(1);

  lastrank::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic world and train/test JSONL splits");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--train", gen.train_records, "Training records");
  gen_cmd->add_option("--test", gen.test_records, "Test records");
  gen_cmd->add_option("--m", gen.candidates, "Candidates per record (M)");
  gen_cmd->add_option("--n", gen.list_len, "List length (N)");
  gen_cmd->add_option("--user-dim", gen.world.user_dim, "User feature dimension");
  gen_cmd->add_option("--item-dim", gen.world.item_dim, "Item feature dimension");
  gen_cmd->add_option("--users", gen.world.n_users, "User pool size");
  gen_cmd->add_option("--items", gen.world.n_items, "Item pool size");
  gen_cmd->add_option("--position-decay", gen.world.position_decay, "Click decay per position (rho)");
  gen_cmd->add_option("--similarity-penalty", gen.world.similarity_penalty, "Similarity penalty (lambda_sim)");

  lastrank::TrainOptions train;
  std::string evaluator_path, curve_path;
  auto* train_cmd = app.add_subcommand("train", "Train the evaluator or the actor");
  train_cmd->add_option("--target", train.target, "evaluator | actor")
      ->required()
      ->check(CLI::IsMember({"evaluator", "actor"}));
  train_cmd->add_option("--reward", train.reward, "Actor reward: ndcg | learned")
      ->check(CLI::IsMember({"ndcg", "learned"}));
  train_cmd->add_option("--data", train.data, "Training JSONL")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--evaluator", evaluator_path, "Evaluator checkpoint (learned reward)");
  train_cmd->add_option("--out", train.out, "Checkpoint to write")->required();
  train_cmd->add_option("--curve", curve_path, "Per-epoch CSV to write");
  train_cmd->add_option("--n", train.list_len, "List length (N)");
  train_cmd->add_option("--k", train.reward_k, "NDCG cutoff for --reward ndcg");
  train_cmd->add_option("--hidden", train.dims.hidden, "Hidden width H");
  train_cmd->add_option("--epochs", train.train.epochs, "Epochs");
  train_cmd->add_option("--lr", train.learning_rate,
                        "Learning rate (default 0.05 evaluator, 0.2 actor)");
  train_cmd->add_option("--momentum", train.train.momentum, "Momentum");
  train_cmd->add_option("--batch", train.train.batch_size, "Mini-batch size");
  train_cmd->add_option("--samples", train.train.samples_per_request, "Sampled lists per request (actor)");
  train_cmd->add_option("--entropy", train.train.entropy_bonus, "Entropy bonus (actor)");
  train_cmd->add_option("--seed", train.train.seed, "Random seed");

  lastrank::EvalOptions eval;
  std::string eval_evaluator, eval_csv, eval_tests_csv;
  auto* eval_cmd = app.add_subcommand("eval", "Benchmark serving policies on a test split");
  eval_cmd->add_option("--data", eval.data, "Test JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--actor", eval.actor, "Actor checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--evaluator", eval_evaluator, "Evaluator checkpoint");
  eval_cmd->add_option("--policies", eval.policies, "Comma-separated: greedy,sampling,last,cascade");
  eval_cmd->add_option("--objective", eval.objective, "Serving evaluation: ndcg | learned")
      ->check(CLI::IsMember({"ndcg", "learned"}));
  eval_cmd->add_option("--budget", eval.budget, "Lists generated per request (K)")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--n", eval.list_len, "List length (N)");
  eval_cmd->add_option("--k", eval.metric_k, "NDCG cutoff for --objective ndcg");
  eval_cmd->add_option("--seed", eval.seed, "Random seed");
  eval_cmd->add_option("--csv", eval_csv, "Report CSV to write");
  eval_cmd->add_option("--tests-csv", eval_tests_csv, "Sign-test CSV to write");
  add_last_flags(eval_cmd, eval.last);

  lastrank::SweepOptions sweep;
  std::string sweep_evaluator, sweep_csv;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep step-set size or alpha for parallel LAST");
  sweep_cmd->add_option("--data", sweep.data, "Test JSONL")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--actor", sweep.actor, "Actor checkpoint")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--evaluator", sweep_evaluator, "Evaluator checkpoint");
  sweep_cmd->add_option("--param", sweep.param, "steps | alpha")->required()->check(CLI::IsMember({"steps", "alpha"}));
  sweep_cmd->add_option("--values", sweep.values, "Grid values")->required()->delimiter(',');
  sweep_cmd->add_option("--objective", sweep.objective, "Serving evaluation: ndcg | learned")
      ->check(CLI::IsMember({"ndcg", "learned"}));
  sweep_cmd->add_option("--budget", sweep.budget, "Step-set size when sweeping alpha");
  sweep_cmd->add_option("--n", sweep.list_len, "List length (N)");
  sweep_cmd->add_option("--k", sweep.metric_k, "NDCG cutoff for --objective ndcg");
  sweep_cmd->add_option("--seed", sweep.seed, "Random seed");
  sweep_cmd->add_option("--csv", sweep_csv, "CSV to write (default: stdout)");
  add_last_flags(sweep_cmd, sweep.last);

  lastrank::ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve JSONL requests from stdin to stdout");
  serve_cmd->add_option("--mode", serve.mode, "greedy | sampling | last | cascade")
      ->check(CLI::IsMember({"greedy", "sampling", "last", "cascade"}));
  serve_cmd->add_option("--actor", serve.actor, "Actor checkpoint")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--evaluator", serve.evaluator, "Evaluator checkpoint")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--budget", serve.budget, "Lists generated per request (K)")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--seed", serve.seed, "Random seed");
  add_last_flags(serve_cmd, serve.last);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      lastrank::cmd_gen_data(gen, std::cerr);
    } else if (*train_cmd) {
      if (!evaluator_path.empty()) train.evaluator = evaluator_path;
      if (!curve_path.empty()) train.curve = curve_path;
      lastrank::cmd_train(train, std::cerr);
    } else if (*eval_cmd) {
      if (!eval_evaluator.empty()) eval.evaluator = eval_evaluator;
      if (!eval_csv.empty()) eval.csv = eval_csv;
      if (!eval_tests_csv.empty()) eval.tests_csv = eval_tests_csv;
      lastrank::cmd_eval(eval, std::cout);
    } else if (*sweep_cmd) {
      if (!sweep_evaluator.empty()) sweep.evaluator = sweep_evaluator;
      if (!sweep_csv.empty()) sweep.csv = sweep_csv;
      lastrank::cmd_sweep(sweep, std::cout);
    } else if (*serve_cmd) {
      std::ios::sync_with_stdio(false);
      lastrank::cmd_serve(serve, std::cin, std::cout);
    }
  } catch (const lastrank::ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
