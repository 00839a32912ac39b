#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "langadapt/numerics/graph.hpp"

namespace langadapt::numerics {

// Differentiable ops recorded on a Graph. Matrices are rank-2 tensors.
// Every op throws ShapeError on incompatible inputs and NumericError if its
// forward value is not finite.

template <typename T>
Var matmul(Graph<T>& g, Var a, Var b);  // [m x k] . [k x n]

template <typename T>
Var matmul_nt(Graph<T>& g, Var a, Var b);  // [m x k] . [n x k]^T

template <typename T>
Var transpose(Graph<T>& g, Var a);

template <typename T>
Var add(Graph<T>& g, Var a, Var b);

// x[n x d] + bias[d] broadcast over rows; the only broadcast supported.
template <typename T>
Var add_bias(Graph<T>& g, Var x, Var bias);

template <typename T>
Var mul(Graph<T>& g, Var a, Var b);

template <typename T>
Var scale(Graph<T>& g, Var a, T factor);

template <typename T>
Var add_scalar(Graph<T>& g, Var a, T offset);

template <typename T>
Var silu(Graph<T>& g, Var a);

template <typename T>
Var sum(Graph<T>& g, Var a);

inline constexpr double kRmsNormEpsilon = 1e-5;

// x / sqrt(mean(x^2) + eps) * gain over the last axis.
template <typename T>
Var rmsnorm(Graph<T>& g, Var x, Var gain);

// Rows of table[V x d] selected by ids -> [n x d].
template <typename T>
Var embedding(Graph<T>& g, Var table, std::span<const std::uint32_t> ids);

template <typename T>
Var slice_cols(Graph<T>& g, Var x, std::size_t begin, std::size_t width);

template <typename T>
Var concat_cols(Graph<T>& g, std::span<const Var> parts);

template <typename T>
Var concat_rows(Graph<T>& g, std::span<const Var> parts);

// Row-wise softmax of a square score matrix where column j > row i is masked.
template <typename T>
Var causal_softmax(Graph<T>& g, Var scores);

// Mean over rows with mask[i] of -log softmax(logits[i])[targets[i]],
// stabilised by max subtraction. An empty mask means every row is scored.
// Throws ValidationError("no scored positions") when nothing is scored.
template <typename T>
Var softmax_cross_entropy(Graph<T>& g, Var logits, std::span<const std::uint32_t> targets,
                          std::span<const std::uint8_t> mask = {});

}  // namespace langadapt::numerics
