#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/model/config.hpp"
#include "langadapt/numerics/tensor.hpp"

namespace langadapt::model {

using numerics::Tensor;

// Tensor names used throughout (checkpoints, masks, optimiser state).
namespace names {
inline constexpr std::string_view kTokenEmbedding = "tok_embedding";
inline constexpr std::string_view kPositionEmbedding = "pos_embedding";
inline constexpr std::string_view kFinalNorm = "final_norm";
inline constexpr std::string_view kOutput = "output";

std::string layer(std::size_t index, std::string_view leaf);
}  // namespace names

// Base weights. token_embedding and output are stored [vocab x d_model] so
// that one row belongs to one token id. Norm gains are stored as offsets
// from 1.
template <typename T>
struct Parameters {
  // Insertion order is the canonical order (initialisation, checkpoints).
  std::vector<std::string> order;
  std::map<std::string, Tensor<T>, std::less<>> tensors;

  Tensor<T>& at(std::string_view name);
  const Tensor<T>& at(std::string_view name) const;
  void add(std::string name, Tensor<T> value);
  std::size_t scalar_count() const;
};

enum class LoraTarget { kQuery, kKey, kValue };

std::string_view to_string(LoraTarget target);

// Low-rank update of one attention projection: W + (alpha / r) * A . B.
template <typename T>
struct LoraAdapter {
  LoraTarget target = LoraTarget::kQuery;
  std::size_t layer = 0;
  Tensor<T> a;  // [d_model x r]
  Tensor<T> b;  // [r x d_model], zero at attach time
  double alpha = 16.0;

  std::size_t rank() const { return a.cols(); }
  double scale() const { return alpha / static_cast<double>(rank()); }
  // Name of the base projection this adapter modifies.
  std::string base_name() const;
  std::string a_name() const { return base_name() + ".lora_a"; }
  std::string b_name() const { return base_name() + ".lora_b"; }
};

// Trainable/frozen designation per tensor, with a row cut-off for the
// vocabulary-indexed tensors: rows >= first_trainable_row are trainable.
class FreezeMask {
 public:
  struct Rule {
    bool trainable = false;
    std::size_t first_trainable_row = 0;
    bool operator==(const Rule&) const = default;
  };

  void set_trainable(std::string name);
  void set_frozen(std::string name);
  void set_rows_from(std::string name, std::size_t first_row);

  bool is_trainable(std::string_view name, std::size_t row) const;
  // True when any scalar of the tensor is trainable.
  bool any_trainable(std::string_view name) const;
  const Rule& rule(std::string_view name) const;
  std::size_t trainable_scalars(std::string_view name, const numerics::Shape& shape) const;

  const std::map<std::string, Rule, std::less<>>& rules() const { return rules_; }
  bool operator==(const FreezeMask&) const = default;

 private:
  std::map<std::string, Rule, std::less<>> rules_;
};

// A tensor reference handed to optimisers and serialisers.
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
struct NamedConstTensor {
  std::string name;
  const Tensor<T>* tensor;
};

template <typename T>
struct Model {
  ModelConfig config;
  Parameters<T> params;
  std::vector<LoraAdapter<T>> adapters;
  FreezeMask mask;
  // Vocabulary size before extension; equals config.vocab_size when the
  // embedding table was never extended.
  std::size_t old_vocab_size = 0;

  // Base tensors in canonical order followed by adapter A, B pairs.
  std::vector<NamedTensor<T>> named_tensors();
  std::vector<NamedConstTensor<T>> named_tensors() const;
  std::size_t total_scalars() const;

  template <typename U>
  Model<U> cast() const;
};

extern template struct Parameters<float>;
extern template struct Parameters<double>;
extern template struct LoraAdapter<float>;
extern template struct LoraAdapter<double>;
extern template struct Model<float>;
extern template struct Model<double>;

}  // namespace langadapt::model
