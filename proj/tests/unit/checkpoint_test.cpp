#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "lastrank/checkpoint.hpp"
#include "lastrank/error.hpp"
#include "lastrank/evaluator.hpp"

using namespace lastrank;

TEST(HexDouble, RoundTripsSpecialValues) {
  for (double v : {0.0, -0.0, 1.0, -2.5, 1e-300, 4.9e-324, 1.7976931348623157e308, 0.1,
                   std::numeric_limits<double>::denorm_min()}) {
    const double back = parse_hex_double(format_hex_double(v));
    EXPECT_EQ(std::signbit(back), std::signbit(v));
    EXPECT_EQ(back, v);
  }
  EXPECT_THROW(parse_hex_double("zz"), ParseError);
  EXPECT_THROW(parse_hex_double("0x1p+0junk"), ParseError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const ModelDims dims{5, 3, 7};
  for (auto [kind, params] : {std::pair{CheckpointKind::actor, init_actor_params(dims, 1)},
                              std::pair{CheckpointKind::evaluator, init_evaluator_params(dims, 2)}}) {
    const Checkpoint ck{kCheckpointSchemaVersion, kind, dims, params};
    std::stringstream ss;
    write_checkpoint(ss, ck);
    const Checkpoint back = read_checkpoint(ss);
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(back.dims.hidden, 7u);
    EXPECT_EQ(back.params.names(), params.names());
    EXPECT_TRUE(back.params.identical(params));
    EXPECT_EQ(param_fingerprint(back.params), param_fingerprint(params));
  }
}

TEST(Checkpoint, RejectsUnknownVersion) {
  const ModelDims dims{2, 2, 2};
  Checkpoint ck{kCheckpointSchemaVersion, CheckpointKind::actor, dims, init_actor_params(dims, 1)};
  std::stringstream ss;
  write_checkpoint(ss, ck);
  std::string text = ss.str();
  const std::string key = "\"schema_version\": 1";
  const auto at = text.find(key);
  ASSERT_NE(at, std::string::npos);
  text.replace(at, key.size(), "\"schema_version\": 2");
  std::stringstream in(text);
  EXPECT_THROW(read_checkpoint(in), ParseError);
}

TEST(Checkpoint, RejectsTruncatedFile) {
  const ModelDims dims{2, 2, 2};
  Checkpoint ck{kCheckpointSchemaVersion, CheckpointKind::actor, dims, init_actor_params(dims, 1)};
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const std::string text = ss.str();
  std::stringstream in(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(in), ParseError);
}

TEST(Checkpoint, RejectsWrongKindAndShapeMismatch) {
  const ModelDims dims{2, 2, 2};
  const auto path = std::filesystem::temp_directory_path() / "lastrank_ck_test.json";
  save_checkpoint(path, Checkpoint{kCheckpointSchemaVersion, CheckpointKind::evaluator, dims,
                                   init_evaluator_params(dims, 1)});
  EXPECT_THROW(load_checkpoint(path, CheckpointKind::actor), ContractViolation);
  EXPECT_NO_THROW(load_checkpoint(path, CheckpointKind::evaluator));
  std::filesystem::remove(path);

  std::stringstream bad(
      R"({"schema_version":1,"kind":"actor","dims":{"user_dim":1,"item_dim":1,"hidden":1},)"
      R"("params":{"w":{"shape":[2],"values":["0x1p+0"]}}})");
  EXPECT_THROW(read_checkpoint(bad), ParseError);
}

TEST(ParamFingerprint, SensitiveToSingleBit) {
  ParamSet p = init_actor_params(ModelDims{2, 2, 2}, 3);
  const auto before = param_fingerprint(p);
  p.at(p.names().front()).data()[0] = std::nextafter(p.at(p.names().front()).data()[0], 10.0);
  EXPECT_NE(param_fingerprint(p), before);
}
