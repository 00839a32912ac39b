#pragma once

#include <cstdint>
#include <span>

#include "langadapt/numerics/graph.hpp"

namespace langadapt::train {

using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

// Next-token cross-entropy: row i of logits [n x V] predicts ids[i + 1].
// Mean over the n - 1 predicted positions. Throws ValidationError if n < 2.
template <typename T>
Var clm_loss(Graph<T>& g, Var logits, std::span<const std::uint32_t> ids);

// As clm_loss, restricted to positions i >= 1 with mask[i] set, i.e. the
// prediction of ids[i] is scored when ids[i] lies in the output region.
// Throws ValidationError("no scored positions") when no such i exists.
// With an all-ones mask the result is bit-identical to clm_loss.
template <typename T>
Var sft_loss(Graph<T>& g, Var logits, std::span<const std::uint32_t> ids,
             std::span<const std::uint8_t> mask);

// Value-only helpers on an existing logits tensor.
template <typename T>
T clm_loss_value(const Tensor<T>& logits, std::span<const std::uint32_t> ids);
template <typename T>
T sft_loss_value(const Tensor<T>& logits, std::span<const std::uint32_t> ids,
                 std::span<const std::uint8_t> mask);

// Number of positions sft_loss scores for this mask.
std::size_t scored_positions(std::span<const std::uint8_t> mask);

}  // namespace langadapt::train
