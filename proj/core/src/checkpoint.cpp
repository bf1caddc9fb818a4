#include "lastrank/checkpoint.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lastrank/error.hpp"
#include "lastrank/rng.hpp"

namespace lastrank {

using ordered_json = nlohmann::ordered_json;

std::string kind_name(CheckpointKind kind) {
  return kind == CheckpointKind::actor ? "actor" : "evaluator";
}

std::string format_hex_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", value);
  return buf;
}

double parse_hex_double(const std::string& text) {
  if (text.empty()) throw ParseError("empty numeric value");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE) {
    throw ParseError("malformed numeric value \"" + text + "\"");
  }
  return v;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  ordered_json params = ordered_json::object();
  for (std::size_t i = 0; i < ck.params.entry_count(); ++i) {
    const Tensor& t = ck.params.tensor(i);
    ordered_json values = ordered_json::array();
    for (double v : t.data()) values.push_back(format_hex_double(v));
    params[ck.params.names()[i]] = ordered_json{{"shape", t.shape()}, {"values", std::move(values)}};
  }
  ordered_json doc{{"schema_version", ck.schema_version},
                   {"kind", kind_name(ck.kind)},
                   {"dims",
                    {{"user_dim", ck.dims.user_dim},
                     {"item_dim", ck.dims.item_dim},
                     {"hidden", ck.dims.hidden}}},
                   {"params", std::move(params)}};
  out << doc.dump(1) << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    Checkpoint ck;
    ck.schema_version = doc.at("schema_version").get<int>();
    if (ck.schema_version != kCheckpointSchemaVersion) {
      throw ParseError("unsupported checkpoint schema_version " + std::to_string(ck.schema_version) +
                       " (expected " + std::to_string(kCheckpointSchemaVersion) + ")");
    }
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "actor") {
      ck.kind = CheckpointKind::actor;
    } else if (kind == "evaluator") {
      ck.kind = CheckpointKind::evaluator;
    } else {
      throw ParseError("unknown checkpoint kind \"" + kind + "\"");
    }
    const auto& dims = doc.at("dims");
    ck.dims.user_dim = dims.at("user_dim").get<std::size_t>();
    ck.dims.item_dim = dims.at("item_dim").get<std::size_t>();
    ck.dims.hidden = dims.at("hidden").get<std::size_t>();
    for (const auto& [name, entry] : doc.at("params").items()) {
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      std::vector<double> values;
      for (const auto& v : entry.at("values")) values.push_back(parse_hex_double(v.get<std::string>()));
      ck.params.add(name, Tensor(std::move(shape), std::move(values)));
    }
    return ck;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_checkpoint(in);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, CheckpointKind expected) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.kind != expected) {
    throw ContractViolation(path.string() + " holds an " + kind_name(ck.kind) +
                            " checkpoint, expected " + kind_name(expected));
  }
  return ck;
}

std::uint64_t param_fingerprint(const ParamSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < params.entry_count(); ++i) {
    for (char c : params.names()[i]) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    for (std::size_t d : params.tensor(i).shape()) h = mix64(h ^ d);
    h = hash_values(params.tensor(i).data(), h);
  }
  return h;
}

}  // namespace lastrank
