#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "lastrank/actor.hpp"
#include "lastrank/param_set.hpp"

namespace lastrank {

inline constexpr int kCheckpointSchemaVersion = 1;

enum class CheckpointKind { actor, evaluator };

// JSON document:
//   {"schema_version":1,"kind":"actor",
//    "dims":{"user_dim":8,"item_dim":8,"hidden":32},
//    "params":{"<name>":{"shape":[...],"values":["0x1.8p+0",...]},...}}
// Values are hexadecimal floats, so a round trip is bit-exact. params keeps
// the ParamSet's entry order.
struct Checkpoint {
  int schema_version = kCheckpointSchemaVersion;
  CheckpointKind kind = CheckpointKind::actor;
  ModelDims dims;
  ParamSet params;
};

std::string kind_name(CheckpointKind kind);

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Loads and checks the kind.
Checkpoint load_checkpoint(const std::filesystem::path& path, CheckpointKind expected);

std::string format_hex_double(double value);
double parse_hex_double(const std::string& text);

// FNV-1a over names, shapes and value bits.
std::uint64_t param_fingerprint(const ParamSet& params);

}  // namespace lastrank
