#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "langadapt/model/parameters.hpp"
#include "langadapt/numerics/tensor.hpp"
#include "langadapt/tokenizer/vocab.hpp"

namespace langadapt::model {

// Anything that maps a token prefix to next-token logits. The evaluation
// harness and generation only depend on this interface.
class CausalLm {
 public:
  virtual ~CausalLm() = default;
  // Logits [ids.size() x vocab_size()]; row i predicts token i + 1.
  virtual numerics::Tensor<float> logits(std::span<const std::uint32_t> ids) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t max_context() const = 0;
};

// Read-only view of a trained model. The model must outlive the view.
class TransformerLm final : public CausalLm {
 public:
  explicit TransformerLm(const Model<float>& model) : model_(model) {}
  numerics::Tensor<float> logits(std::span<const std::uint32_t> ids) const override;
  std::size_t vocab_size() const override { return model_.config.vocab_size; }
  std::size_t max_context() const override { return model_.config.max_seq; }

 private:
  const Model<float>& model_;
};

struct GenerationSettings {
  int max_new = 64;
  // 0 selects greedy argmax decoding (lowest id wins ties).
  double temperature = 0.0;
  std::uint64_t seed = 0;
};

// Autoregressive sampling from the encoded prompt. Stops at the
// end-of-sequence control token (not included in the output) or after
// max_new tokens, and returns the decoded continuation. When the context
// exceeds the model window only the most recent tokens are fed.
// Throws ValidationError if max_new <= 0 or the prompt encodes to nothing
// and the vocabulary has no begin-of-sequence token.
std::string generate(const CausalLm& lm, const tokenizer::Vocabulary& vocab,
                     std::string_view prompt, const GenerationSettings& settings);

// Token-level variant used by tests and the CLI.
std::vector<std::uint32_t> generate_ids(const CausalLm& lm, const tokenizer::Vocabulary& vocab,
                                        std::span<const std::uint32_t> prompt_ids,
                                        const GenerationSettings& settings);

}  // namespace langadapt::model
