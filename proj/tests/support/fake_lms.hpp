#pragma once

#include <cmath>
#include <vector>

#include "langadapt/eval/harness.hpp"
#include "langadapt/model/causal_lm.hpp"
#include "langadapt/tokenizer/tokenizer.hpp"

namespace langadapt::testing {

// Knows the gold answer of every task: while the input is a prefix of a
// gold sequence the next gold token gets a large logit, otherwise logits
// are flat.
class RiggedLm final : public model::CausalLm {
 public:
  RiggedLm(const tokenizer::Vocabulary& vocab, const std::vector<eval::ClassificationTask>& tasks,
           std::size_t context = 256)
      : vocab_size_(vocab.size()), context_(context) {
    for (const auto& t : tasks) {
      auto ids = tokenizer::encode(vocab, t.prompt);
      const auto opt = tokenizer::encode(vocab, t.options[t.gold], {.add_prefix_marker = false});
      ids.insert(ids.end(), opt.begin(), opt.end());
      gold_.push_back(std::move(ids));
    }
  }

  numerics::Tensor<float> logits(std::span<const std::uint32_t> ids) const override {
    numerics::Tensor<float> out({ids.size(), vocab_size_});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (const auto& g : gold_) {
        if (g.size() > i + 1 && std::equal(ids.begin(), ids.begin() + i + 1, g.begin())) {
          out.at(i, g[i + 1]) = 30.0f;
        }
      }
    }
    return out;
  }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t max_context() const override { return context_; }

 private:
  std::size_t vocab_size_;
  std::size_t context_;
  std::vector<std::vector<std::uint32_t>> gold_;
};

// Deterministic pseudo-random logits that depend on the whole prefix.
class HashLm final : public model::CausalLm {
 public:
  explicit HashLm(std::size_t vocab, std::size_t context = 256) : vocab_(vocab), context_(context) {}
  numerics::Tensor<float> logits(std::span<const std::uint32_t> ids) const override {
    numerics::Tensor<float> out({ids.size(), vocab_});
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      h = (h ^ ids[i]) * 1099511628211ULL;
      for (std::size_t j = 0; j < vocab_; ++j) {
        out.at(i, j) = static_cast<float>(std::sin(static_cast<double>((h >> 20) % 1000 + 7 * j)));
      }
    }
    return out;
  }
  std::size_t vocab_size() const override { return vocab_; }
  std::size_t max_context() const override { return context_; }

 private:
  std::size_t vocab_;
  std::size_t context_;
};

}  // namespace langadapt::testing
