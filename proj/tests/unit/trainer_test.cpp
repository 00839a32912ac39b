#include <gtest/gtest.h>

#include <bit>

#include "langadapt/data/corpus.hpp"
#include "langadapt/data/instructions.hpp"
#include "langadapt/model/transformer.hpp"
#include "langadapt/train/checkpoint.hpp"
#include "langadapt/train/losses.hpp"
#include "langadapt/train/trainer.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"
#include "test_support.hpp"

namespace langadapt::train {
namespace {

model::Model<float> small_model(std::size_t vocab) {
  model::ModelConfig c;
  c.n_layers = 1;
  c.d_model = 16;
  c.n_heads = 2;
  c.vocab_size = vocab;
  c.max_seq = 64;
  c.lora_rank = 2;
  c.seed = 3;
  return model::init_model<float>(c);
}

bool same_params(model::Model<float>& a, model::Model<float>& b) {
  auto x = a.named_tensors();
  auto y = b.named_tensors();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].name != y[i].name || !x[i].tensor->bit_equal(*y[i].tensor)) return false;
  }
  return true;
}

std::vector<data::RenderedExample> fixture_examples(std::size_t max_seq) {
  const auto set = data::load_instructions(testing::fixture("instructions.jsonl"));
  const auto tmpl = data::load_template(testing::fixture("template.txt"));
  return data::render_all(testing::merged_vocab(), set.examples, tmpl, max_seq).rendered;
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = TrainConfig{};
  c.lr = -1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = TrainConfig{};
  c.optimizer = "rmsprop";
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Trainer, BatchLossIsTokenWeighted) {
  const auto m = small_model(270);
  const std::vector<tokenizer::TokenId> a{5, 9, 11, 2, 7, 100};
  const std::vector<tokenizer::TokenId> b{1, 3, 4};
  const std::vector<std::uint8_t> mask_b{0, 0, 1};
  const std::vector<Sequence> batch{{a, {}}, {b, mask_b}};
  const auto r = loss_and_grads(m, batch);
  EXPECT_EQ(r.scored, 6u);
  const double la = clm_loss_value(model::forward(m, std::span<const std::uint32_t>(a)),
                                   std::span<const std::uint32_t>(a));
  const double lb = sft_loss_value(model::forward(m, std::span<const std::uint32_t>(b)),
                                   std::span<const std::uint32_t>(b), mask_b);
  EXPECT_NEAR(r.loss, (5.0 * la + 1.0 * lb) / 6.0, 1e-5);
  EXPECT_EQ(r.grads.size(), m.params.order.size());
}

TEST(Trainer, ZeroLearningRateLeavesParametersUntouched) {
  auto m = small_model(testing::merged_vocab().size());
  auto ref = m;
  const auto ex = fixture_examples(64);
  TrainConfig cfg;
  cfg.stage = Stage::kSft;
  cfg.lr = 0.0;
  cfg.steps = 5;
  cfg.batch_size = 2;
  train_sft(m, ex, cfg);
  EXPECT_TRUE(same_params(m, ref));
}

TEST(Trainer, SftIsDeterministicAndLearns) {
  const auto ex = fixture_examples(64);
  ASSERT_FALSE(ex.empty());
  TrainConfig cfg;
  cfg.stage = Stage::kSft;
  cfg.lr = 0.05;
  cfg.steps = 30;
  cfg.batch_size = 4;
  cfg.seed = 12;
  auto a = small_model(testing::merged_vocab().size());
  auto b = a;
  const auto ra = train_sft(a, ex, cfg);
  const auto rb = train_sft(b, ex, cfg);
  EXPECT_EQ(ra.losses, rb.losses);
  EXPECT_TRUE(same_params(a, b));
  EXPECT_EQ(ra.steps(), 30u);
  EXPECT_LT(ra.losses.back(), ra.losses.front());
}

TEST(Trainer, ClmWritesMetricsAndRespectsFreezeMask) {
  const auto& vocab = testing::base_vocab();
  auto m = model::attach_lora(small_model(vocab.size()));
  const auto before = m;
  data::MixSpec spec;
  spec.block_size = 16;
  spec.seed = 1;
  data::MixStream stream(data::ingest_corpus(testing::fixture("corpus")).shards, vocab, spec);
  testing::TempDir dir;
  MetricsLog log(dir / "metrics.csv");
  TrainConfig cfg;
  cfg.steps = 6;
  cfg.batch_size = 2;
  cfg.lr = 0.1;
  const auto r = train_clm(m, stream, cfg, &log);
  EXPECT_EQ(r.tokens_seen, 6u * 2u * 16u);
  const std::string csv = read_file(dir / "metrics.csv");
  EXPECT_EQ(csv.rfind("step,stage,loss,lr,tokens_seen\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_EQ(log.rows(), 6u);
  for (const auto& name : m.params.order) {
    EXPECT_TRUE(m.params.at(name).bit_equal(before.params.at(name))) << name;
  }
  bool adapter_moved = false;
  for (std::size_t i = 0; i < m.adapters.size(); ++i) {
    adapter_moved |= !m.adapters[i].b.bit_equal(before.adapters[i].b);
  }
  EXPECT_TRUE(adapter_moved);
}

TEST(Trainer, BlockLongerThanContextIsRejected) {
  const auto& vocab = testing::base_vocab();
  auto m = small_model(vocab.size());
  data::MixSpec spec;
  spec.block_size = 65;
  data::MixStream stream(data::ingest_corpus(testing::fixture("corpus")).shards, vocab, spec);
  TrainConfig cfg;
  cfg.steps = 1;
  EXPECT_THROW(train_clm(m, stream, cfg), ValidationError);
}

TEST(Trainer, DivergenceNamesTheStep) {
  auto m = small_model(testing::merged_vocab().size());
  const auto ex = fixture_examples(64);
  TrainConfig cfg;
  cfg.stage = Stage::kSft;
  cfg.lr = 1e30;
  cfg.grad_clip = 0.0;
  cfg.steps = 10;
  cfg.batch_size = 2;
  try {
    train_sft(m, ex, cfg);
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("diverged at step"), std::string::npos) << e.what();
  }
}

TEST(Trainer, EmptySftDatasetIsAnError) {
  auto m = small_model(300);
  TrainConfig cfg;
  cfg.steps = 1;
  EXPECT_THROW(train_sft(m, {}, cfg), ValidationError);
}

}  // namespace
}  // namespace langadapt::train
