#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lastrank/actor.hpp"
#include "lastrank/data.hpp"
#include "lastrank/harness.hpp"
#include "lastrank/training.hpp"

namespace lastrank {

// Library entry points behind the `lastrank` subcommands. Each throws on
// invalid input; the CLI maps exceptions to a message and exit status.

struct GenDataOptions {
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 42;
  std::size_t train_records = 20000;
  std::size_t test_records = 2000;
  std::size_t candidates = 8;  // M
  std::size_t list_len = 5;    // N
  WorldConfig world;
};

struct GeneratedData {
  WorldModel world;
  Dataset train;
  Dataset test;
};

// The world and splits cmd_gen_data writes, without touching the disk.
GeneratedData generate_splits(const GenDataOptions& options);

// Writes train.jsonl, test.jsonl and world.json into out_dir.
void cmd_gen_data(const GenDataOptions& options, std::ostream& log);

struct TrainOptions {
  std::string target = "actor";    // actor | evaluator
  std::string reward = "learned";  // ndcg | learned (actor only)
  std::filesystem::path data;
  std::optional<std::filesystem::path> evaluator;  // required for --reward learned
  std::filesystem::path out;
  std::optional<std::filesystem::path> curve;      // per-epoch CSV
  std::size_t list_len = 5;
  std::size_t reward_k = 5;
  ModelDims dims;
  TrainConfig train;  // learning_rate is taken from `learning_rate` below
  std::optional<double> learning_rate;  // per-target default when absent
};

void cmd_train(const TrainOptions& options, std::ostream& log);

struct EvalOptions {
  std::filesystem::path data;
  std::filesystem::path actor;
  std::optional<std::filesystem::path> evaluator;
  std::string policies = "greedy,sampling,last,cascade";
  std::string objective = "learned";
  std::size_t budget = 7;
  std::size_t list_len = 5;
  std::size_t metric_k = 5;
  LastConfig last;
  std::uint64_t seed = 42;
  std::optional<std::filesystem::path> csv;
  std::optional<std::filesystem::path> tests_csv;
};

BenchmarkReport cmd_eval(const EvalOptions& options, std::ostream& out);

struct SweepOptions {
  std::filesystem::path data;
  std::filesystem::path actor;
  std::optional<std::filesystem::path> evaluator;
  std::string param = "alpha";  // steps | alpha
  std::vector<double> values;
  std::string objective = "learned";
  std::size_t budget = 7;
  std::size_t list_len = 5;
  std::size_t metric_k = 5;
  LastConfig last;
  std::uint64_t seed = 42;
  std::optional<std::filesystem::path> csv;  // stdout when absent
};

void cmd_sweep(const SweepOptions& options, std::ostream& out);

struct ServeOptions {
  std::string mode = "last";  // greedy | sampling | last | cascade
  std::filesystem::path actor;
  std::filesystem::path evaluator;
  std::size_t budget = 7;
  LastConfig last;
  std::uint64_t seed = 42;
};

struct ServeStats {
  std::size_t requests = 0;
  std::size_t errors = 0;
};

// Reads {"user":[...],"candidates":[[...],...],"n":N} lines from `in` and
// writes {"order":[...],"eta_star":x,"score":y} (or {"error":"..."}) lines to
// `out`, one per non-blank input line, in input order.
ServeStats cmd_serve(const ServeOptions& options, std::istream& in, std::ostream& out);

// Core of cmd_serve with models already loaded. Throws if theta or phi
// changed while serving.
ServeStats serve_stream(Policy policy, const ParamSet& theta, const ParamSet& phi,
                        std::size_t budget, const LastConfig& config, std::istream& in,
                        std::ostream& out);

}  // namespace lastrank
