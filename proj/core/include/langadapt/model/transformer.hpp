#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "langadapt/model/parameters.hpp"
#include "langadapt/numerics/graph.hpp"

namespace langadapt::model {

using numerics::Graph;
using numerics::Var;

// Decoder-only transformer: learned positions, pre-RMSNorm blocks with
// multi-head causal attention and a SiLU-gated MLP, untied output head.

// Seeded initialisation: weights ~ N(0, init_std), norm offsets zero. All
// tensors start trainable. Same seed gives bit-identical parameters.
template <typename T>
Model<T> init_model(const ModelConfig& config);

// Number of scalars init_model allocates for `config`.
std::size_t parameter_count(const ModelConfig& config);

// Appends rows [old, new_vocab) to the token embedding and to the output
// head. New rows are drawn from N(0, s) where s is the empirical
// per-element standard deviation of that tensor's existing rows. Existing
// scalars are untouched. Afterwards only the new rows are trainable.
template <typename T>
Model<T> extend_embeddings(Model<T> model, std::size_t new_vocab, std::uint64_t seed);

// Adds one adapter per (layer, Q/K/V) with A ~ N(0, init_std) and B = 0,
// then freezes every base tensor except the vocabulary rows added by
// extend_embeddings. Throws ValidationError if adapters are present.
template <typename T>
Model<T> attach_lora(Model<T> model);

// The mask init_model, extend_embeddings and attach_lora would leave on a
// model of this shape: everything trainable for a plain model, otherwise
// base tensors frozen except rows >= old_vocab_size of the vocabulary
// tensors, with adapters trainable.
template <typename T>
FreezeMask standard_freeze_mask(const Model<T>& model);

// Trainable scalars / all scalars (adapters included).
template <typename T>
double trainable_fraction(const Model<T>& model);

// Leaves for every tensor of a model on one graph.
struct Binding {
  std::map<std::string, Var, std::less<>> vars;
  Var at(std::string_view name) const;
};

template <typename T>
Binding bind(Graph<T>& g, const Model<T>& model);

// Records the forward pass and returns logits [len x vocab_size].
// Throws ValidationError when ids is empty, longer than max_seq, or holds
// an id outside the vocabulary.
template <typename T>
Var forward(Graph<T>& g, const Model<T>& model, const Binding& binding,
            std::span<const std::uint32_t> ids);

// Convenience wrapper on a private graph.
template <typename T>
Tensor<T> forward(const Model<T>& model, std::span<const std::uint32_t> ids);

}  // namespace langadapt::model
