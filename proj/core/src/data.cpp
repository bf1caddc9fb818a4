#include "lastrank/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

#include "lastrank/error.hpp"
#include "lastrank/rng.hpp"

namespace lastrank {

using nlohmann::json;

bool InteractionRecord::identical(const InteractionRecord& other) const {
  return user.size() == other.user.size() &&
         (user.empty() || std::memcmp(user.data(), other.user.data(), user.size() * sizeof(double)) == 0) &&
         items.identical(other.items) && clicks == other.clicks;
}

WorldModel generate_world(const WorldConfig& config, std::uint64_t seed) {
  require(config.position_decay > 0.0 && config.position_decay <= 1.0,
          "position decay must lie in (0, 1]");
  require(config.similarity_penalty >= 0.0 && std::isfinite(config.similarity_penalty),
          "similarity penalty must be finite and non-negative");
  require(config.n_users >= 1 && config.n_items >= 1, "world needs users and items");
  WorldModel w;
  w.config = config;
  w.seed = seed;
  Rng rng(seed);
  w.user_factors = Tensor({config.n_users, config.user_dim});
  for (double& v : w.user_factors.data()) v = uniform(rng, -1.0, 1.0);
  w.item_factors = Tensor({config.n_items, config.item_dim});
  for (double& v : w.item_factors.data()) v = uniform(rng, -1.0, 1.0);
  return w;
}

std::vector<double> click_model(const WorldModel& world, std::span<const double> user,
                                const Tensor& items) {
  const std::size_t len = items.rows();
  require(len >= 1, "click_model: list must be non-empty");
  const std::size_t shared = std::min(user.size(), items.cols());
  std::vector<double> norms(len);
  for (std::size_t j = 0; j < len; ++j) norms[j] = l2_norm(items.row(j));

  std::vector<double> probs(len);
  double decay = 1.0;
  for (std::size_t j = 0; j < len; ++j) {
    const auto item = items.row(j);
    double affinity = 0.0;
    for (std::size_t k = 0; k < shared; ++k) affinity += user[k] * item[k];
    double max_cos = 0.0;
    if (j > 0) {
      max_cos = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < j; ++s) {
        const double denom = norms[j] * norms[s];
        const double c = denom > 0.0 ? dot(item, items.row(s)) / denom : 0.0;
        max_cos = std::max(max_cos, c);
      }
    }
    const double p = sigmoid(affinity) * decay *
                     std::exp(-world.config.similarity_penalty * max_cos);
    probs[j] = std::clamp(p, 0.001, 0.999);
    decay *= world.config.position_decay;
  }
  return probs;
}

ListScore world_list_score(const WorldModel& world, std::vector<double> user, Tensor candidates) {
  return [&world, user = std::move(user), cands = std::move(candidates)](
             std::span<const std::size_t> order) {
    Tensor items({order.size(), cands.cols()});
    for (std::size_t j = 0; j < order.size(); ++j) {
      const auto src = cands.row(order[j]);
      std::copy(src.begin(), src.end(), items.row(j).begin());
    }
    const auto probs = click_model(world, user, items);
    return std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
  };
}

Dataset generate_dataset(const WorldModel& world, std::size_t n_records, std::size_t candidates,
                         std::size_t list_len, std::uint64_t seed) {
  require(list_len >= 1, "list length must be at least 1");
  require(candidates >= list_len, "candidate count M=" + std::to_string(candidates) +
                                      " is smaller than list length N=" +
                                      std::to_string(list_len));
  require(candidates <= world.config.n_items, "candidate count exceeds the world's item pool");
  Rng rng(seed);
  Dataset out;
  out.reserve(n_records);
  std::vector<std::size_t> pool(world.config.n_items);
  const std::size_t item_dim = world.config.item_dim;
  for (std::size_t r = 0; r < n_records; ++r) {
    InteractionRecord rec;
    const std::size_t u = std::uniform_int_distribution<std::size_t>(0, world.config.n_users - 1)(rng);
    const auto urow = world.user_factors.row(u);
    rec.user.assign(urow.begin(), urow.end());
    // Partial Fisher-Yates: the first M slots become a uniformly random
    // ordered sample, which doubles as the logged order.
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < candidates; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
      std::swap(pool[i], pool[j]);
    }
    rec.items = Tensor({candidates, item_dim});
    for (std::size_t i = 0; i < candidates; ++i) {
      const auto src = world.item_factors.row(pool[i]);
      std::copy(src.begin(), src.end(), rec.items.row(i).begin());
    }
    const auto probs = click_model(world, rec.user, rec.items);
    rec.clicks.resize(candidates);
    for (std::size_t i = 0; i < candidates; ++i) rec.clicks[i] = uniform(rng, 0.0, 1.0) < probs[i] ? 1 : 0;
    out.push_back(std::move(rec));
  }
  return out;
}

Request to_request(const InteractionRecord& record, std::size_t list_len) {
  return Request{record.user, record.items, list_len};
}

std::uint64_t arrangement_count(std::size_t m, std::size_t n) {
  if (n > m) return 0;
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t factor = m - i;
    if (count > std::numeric_limits<std::uint64_t>::max() / factor) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= factor;
  }
  return count;
}

BestList brute_force_best_list(std::size_t m, std::size_t n, const ListScore& evaluate) {
  require(n >= 1 && n <= m, "brute force needs 1 <= N <= M");
  require(arrangement_count(m, n) <= kMaxEnumeratedArrangements,
          "instance too large to enumerate: " + std::to_string(arrangement_count(m, n)) +
              " arrangements");
  BestList best;
  bool have_best = false;
  std::vector<std::size_t> order;
  std::vector<bool> used(m, false);
  order.reserve(n);
  // Depth-first in lexicographic order; strict improvement keeps the first
  // (lexicographically smallest) maximiser.
  auto visit = [&](auto&& self) -> void {
    if (order.size() == n) {
      const double s = evaluate(order);
      if (!have_best || s > best.score) {
        best.score = s;
        best.order = order;
        have_best = true;
      }
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      used[i] = true;
      order.push_back(i);
      self(self);
      order.pop_back();
      used[i] = false;
    }
  };
  visit(visit);
  return best;
}

namespace {

json record_to_json(const InteractionRecord& r) {
  json items = json::array();
  for (std::size_t i = 0; i < r.items.rows(); ++i) {
    const auto row = r.items.row(i);
    items.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"user", r.user}, {"items", std::move(items)}, {"clicks", r.clicks}};
}

std::vector<double> number_array(const json& j, const char* field) {
  if (!j.is_array()) throw std::runtime_error(std::string("\"") + field + "\" must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw std::runtime_error(std::string("\"") + field + "\" must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

InteractionRecord record_from_json(const json& j) {
  if (!j.is_object()) throw std::runtime_error("record must be a JSON object");
  for (const char* field : {"user", "items", "clicks"}) {
    if (!j.contains(field)) throw std::runtime_error(std::string("missing field \"") + field + "\"");
  }
  InteractionRecord r;
  r.user = number_array(j.at("user"), "user");
  const json& items = j.at("items");
  if (!items.is_array() || items.empty()) throw std::runtime_error("\"items\" must be a non-empty array");
  std::vector<double> flat;
  std::size_t width = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto row = number_array(items[i], "items");
    if (i == 0) width = row.size();
    if (row.size() != width || width == 0) throw std::runtime_error("\"items\" rows differ in length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  r.items = Tensor({items.size(), width}, std::move(flat));
  const json& clicks = j.at("clicks");
  if (!clicks.is_array()) throw std::runtime_error("\"clicks\" must be an array");
  for (const auto& c : clicks) {
    if (!c.is_number_integer() || (c.get<int>() != 0 && c.get<int>() != 1)) {
      throw std::runtime_error("\"clicks\" entries must be 0 or 1");
    }
    r.clicks.push_back(c.get<int>());
  }
  if (r.clicks.size() != r.items.rows()) throw std::runtime_error("\"clicks\" not aligned with \"items\"");
  return r;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& r : dataset) out << record_to_json(r).dump() << '\n';
}

Dataset read_dataset(std::istream& in) {
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(out, dataset);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_dataset(in);
}

void save_world(const std::filesystem::path& path, const WorldModel& world) {
  const auto& c = world.config;
  json j{{"seed", world.seed},
         {"config",
          {{"user_dim", c.user_dim},
           {"item_dim", c.item_dim},
           {"n_users", c.n_users},
           {"n_items", c.n_items},
           {"position_decay", c.position_decay},
           {"similarity_penalty", c.similarity_penalty}}},
         {"user_factors", std::vector<double>(world.user_factors.data().begin(),
                                              world.user_factors.data().end())},
         {"item_factors", std::vector<double>(world.item_factors.data().begin(),
                                              world.item_factors.data().end())}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

WorldModel load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    const json j = json::parse(in);
    WorldModel w;
    w.seed = j.at("seed").get<std::uint64_t>();
    const json& c = j.at("config");
    w.config.user_dim = c.at("user_dim").get<std::size_t>();
    w.config.item_dim = c.at("item_dim").get<std::size_t>();
    w.config.n_users = c.at("n_users").get<std::size_t>();
    w.config.n_items = c.at("n_items").get<std::size_t>();
    w.config.position_decay = c.at("position_decay").get<double>();
    w.config.similarity_penalty = c.at("similarity_penalty").get<double>();
    w.user_factors = Tensor({w.config.n_users, w.config.user_dim},
                            j.at("user_factors").get<std::vector<double>>());
    w.item_factors = Tensor({w.config.n_items, w.config.item_dim},
                            j.at("item_factors").get<std::vector<double>>());
    return w;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace lastrank
