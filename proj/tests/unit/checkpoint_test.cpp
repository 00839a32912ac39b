#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <json.hpp>

#include "langadapt/model/transformer.hpp"
#include "langadapt/train/checkpoint.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"
#include "test_support.hpp"

namespace langadapt::train {
namespace {

Checkpoint sample_checkpoint() {
  model::ModelConfig c;
  c.n_layers = 2;
  c.d_model = 8;
  c.n_heads = 2;
  c.vocab_size = testing::base_vocab().size();
  c.max_seq = 16;
  c.lora_rank = 2;
  c.lora_alpha = 3.0;
  c.seed = 5;
  auto m = model::init_model<float>(c);
  m = model::extend_embeddings(std::move(m), testing::merged_vocab().size(), 2);
  m = model::attach_lora(std::move(m));
  for (auto& a : m.adapters) a.b.fill(0.25f);
  return Checkpoint{std::move(m), testing::merged_vocab(), {Stage::kExpand, Stage::kPretrain}};
}

void expect_identical(const Checkpoint& a, const Checkpoint& b) {
  EXPECT_TRUE(a.model.config == b.model.config);
  EXPECT_EQ(a.model.old_vocab_size, b.model.old_vocab_size);
  EXPECT_EQ(a.stages, b.stages);
  EXPECT_TRUE(a.vocab == b.vocab);
  EXPECT_TRUE(a.model.mask == b.model.mask);
  const auto x = a.model.named_tensors();
  const auto y = b.model.named_tensors();
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].name, y[i].name);
    EXPECT_TRUE(x[i].tensor->bit_equal(*y[i].tensor)) << x[i].name;
  }
}

TEST(Checkpoint, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto ckpt = sample_checkpoint();
  const std::string bytes = encode_checkpoint(ckpt);
  expect_identical(ckpt, decode_checkpoint(bytes));
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
  testing::TempDir dir;
  save_checkpoint(ckpt, dir / "a.blsm");
  expect_identical(ckpt, load_checkpoint(dir / "a.blsm"));
}

TEST(Checkpoint, PlainModelRoundTrip) {
  model::ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.max_seq = 8;
  c.vocab_size = testing::base_vocab().size();
  const Checkpoint ckpt{model::init_model<float>(c), testing::base_vocab(), {}};
  expect_identical(ckpt, decode_checkpoint(encode_checkpoint(ckpt)));
}

TEST(Checkpoint, LayoutFraming) {
  const std::string bytes = encode_checkpoint(sample_checkpoint());
  ASSERT_GT(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "BLSM");
  std::uint32_t version = 0, header_len = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&header_len, bytes.data() + 8, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  const auto header = nlohmann::json::parse(bytes.substr(12, header_len));
  EXPECT_EQ(header.at("stages"), nlohmann::json::array({"expand", "pretrain"}));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  EXPECT_EQ(stored, fnv1a64(std::string_view(bytes).substr(0, bytes.size() - 8)));
}

TEST(Checkpoint, EveryCorruptionIsDetected) {
  const std::string bytes = encode_checkpoint(sample_checkpoint());
  for (std::size_t pos : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2,
                          bytes.size() - 1}) {
    std::string bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x01);
    EXPECT_THROW(decode_checkpoint(bad), ValidationError) << pos;
  }
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ValidationError);
  EXPECT_THROW(decode_checkpoint(""), ValidationError);
}

TEST(Checkpoint, InspectShowsHeader) {
  testing::TempDir dir;
  save_checkpoint(sample_checkpoint(), dir / "a.blsm");
  const auto header = nlohmann::json::parse(inspect_checkpoint(dir / "a.blsm"));
  EXPECT_EQ(header.at("vocab_size"), testing::merged_vocab().size());
  EXPECT_EQ(header.at("old_vocab_size"), testing::base_vocab().size());
  EXPECT_TRUE(header.contains("payload_bytes"));
  EXPECT_EQ(header.at("adapters").size(), 6u);
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/x.blsm"), Error);
}

TEST(Stage, Names) {
  EXPECT_EQ(parse_stage("sft"), Stage::kSft);
  EXPECT_EQ(to_string(Stage::kExpand), "expand");
  EXPECT_FALSE(parse_stage("SFT").has_value());
}

}  // namespace
}  // namespace langadapt::train
