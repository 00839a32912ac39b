#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "langadapt/model/causal_lm.hpp"
#include "langadapt/model/transformer.hpp"
#include "langadapt/tokenizer/tokenizer.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::model {

numerics::Tensor<float> TransformerLm::logits(std::span<const std::uint32_t> ids) const {
  return forward(model_, ids);
}

namespace {

std::uint32_t pick_token(std::span<const float> row, double temperature, std::mt19937_64& rng) {
  if (temperature <= 0.0) {
    return static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  const float m = *std::max_element(row.begin(), row.end());
  std::vector<double> weights(row.size());
  double z = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    weights[j] = std::exp((static_cast<double>(row[j]) - m) / temperature);
    z += weights[j];
  }
  // 53-bit uniform in [0, 1); avoids implementation-defined distributions.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * z;
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += weights[j];
    if (u < acc) return static_cast<std::uint32_t>(j);
  }
  return static_cast<std::uint32_t>(row.size() - 1);
}

}  // namespace

std::vector<std::uint32_t> generate_ids(const CausalLm& lm, const tokenizer::Vocabulary& vocab,
                                        std::span<const std::uint32_t> prompt_ids,
                                        const GenerationSettings& settings) {
  if (settings.max_new <= 0) {
    throw ValidationError("generate: max_new must be positive");
  }
  std::vector<std::uint32_t> context(prompt_ids.begin(), prompt_ids.end());
  if (context.empty()) {
    const auto bos = vocab.bos_id();
    if (!bos) {
      throw ValidationError("generate: empty prompt and no begin-of-sequence token");
    }
    context.push_back(*bos);
  }
  const auto eos = vocab.eos_id();
  std::mt19937_64 rng(settings.seed);
  std::vector<std::uint32_t> produced;
  const std::size_t window = lm.max_context();
  for (int step = 0; step < settings.max_new; ++step) {
    const std::size_t start = context.size() > window ? context.size() - window : 0;
    const std::span<const std::uint32_t> view(context.data() + start, context.size() - start);
    const numerics::Tensor<float> logits = lm.logits(view);
    const std::uint32_t next = pick_token(logits.row(logits.rows() - 1), settings.temperature, rng);
    if (eos && next == *eos) {
      break;
    }
    produced.push_back(next);
    context.push_back(next);
  }
  return produced;
}

std::string generate(const CausalLm& lm, const tokenizer::Vocabulary& vocab,
                     std::string_view prompt, const GenerationSettings& settings) {
  const tokenizer::TokenIds ids = tokenizer::encode(vocab, prompt);
  const auto produced = generate_ids(lm, vocab, ids, settings);
  return tokenizer::decode(vocab, produced, {.strip_prefix_marker = false});
}

}  // namespace langadapt::model
