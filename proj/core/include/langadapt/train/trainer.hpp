#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "langadapt/data/corpus.hpp"
#include "langadapt/data/instructions.hpp"
#include "langadapt/model/parameters.hpp"
#include "langadapt/train/checkpoint.hpp"
#include "langadapt/train/optimizer.hpp"

namespace langadapt::train {

struct TrainConfig {
  Stage stage = Stage::kPretrain;
  std::size_t batch_size = 8;
  double lr = 0.01;
  // Fixed step count; 0 derives the count from epochs.
  std::size_t steps = 0;
  std::size_t epochs = 1;
  double grad_clip = 1.0;
  double momentum = 0.9;
  std::string optimizer = "sgd";
  std::uint64_t seed = 0;

  void validate() const;
};

// CSV rows step,stage,loss,lr,tokens_seen kept in memory and written
// atomically by flush().
class MetricsLog {
 public:
  explicit MetricsLog(std::filesystem::path path);
  void append(std::size_t step, Stage stage, double loss, double lr, std::uint64_t tokens_seen);
  void flush() const;
  std::size_t rows() const noexcept { return rows_; }
  const std::string& text() const noexcept { return text_; }

 private:
  std::filesystem::path path_;
  std::string text_;
  std::size_t rows_ = 0;
};

struct TrainReport {
  std::vector<double> losses;
  std::uint64_t tokens_seen = 0;
  std::size_t steps() const { return losses.size(); }
};

// One training sequence; an empty mask scores every next-token position.
struct Sequence {
  std::span<const tokenizer::TokenId> ids;
  std::span<const std::uint8_t> mask;
};

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;  // one entry per tensor with a trainable scalar
  std::size_t scored = 0;
};

// Token-weighted mean loss over the batch and its gradient with frozen
// scalars zeroed.
LossAndGrads loss_and_grads(const model::Model<float>& model, std::span<const Sequence> batch);

// Pretraining on blocks from the stream. Throws NumericError naming the
// step when the loss stops being finite.
TrainReport train_clm(model::Model<float>& model, data::MixStream& stream, const TrainConfig& cfg,
                      MetricsLog* metrics = nullptr);

// Output-masked fine-tuning; example order is reshuffled every epoch.
TrainReport train_sft(model::Model<float>& model, std::span<const data::RenderedExample> examples,
                      const TrainConfig& cfg, MetricsLog* metrics = nullptr);

}  // namespace langadapt::train
