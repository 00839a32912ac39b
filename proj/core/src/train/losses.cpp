#include "langadapt/train/losses.hpp"

#include <string>
#include <vector>

#include "langadapt/numerics/ops.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::train {

namespace {

// Both losses funnel through here so the all-ones case matches exactly.
template <typename T>
Var shifted_loss(Graph<T>& g, Var logits, std::span<const std::uint32_t> ids,
                 std::span<const std::uint8_t> mask) {
  const std::size_t n = ids.size();
  if (n < 2) {
    throw ValidationError("loss needs at least 2 tokens, got " + std::to_string(n));
  }
  if (g.value(logits).rank() != 2 || g.value(logits).dim(0) != n) {
    throw ShapeError("loss: logits rows do not match " + std::to_string(n) + " ids");
  }
  if (!mask.empty() && mask.size() != n) {
    throw ShapeError("loss: mask length " + std::to_string(mask.size()) + " for " +
                     std::to_string(n) + " ids");
  }
  std::vector<std::uint32_t> targets(n, 0);
  std::vector<std::uint8_t> scored(n, 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    targets[i] = ids[i + 1];
    scored[i] = mask.empty() ? 1 : static_cast<std::uint8_t>(mask[i + 1] != 0);
  }
  return numerics::softmax_cross_entropy(g, logits, targets, scored);
}

}  // namespace

template <typename T>
Var clm_loss(Graph<T>& g, Var logits, std::span<const std::uint32_t> ids) {
  return shifted_loss(g, logits, ids, {});
}

template <typename T>
Var sft_loss(Graph<T>& g, Var logits, std::span<const std::uint32_t> ids,
             std::span<const std::uint8_t> mask) {
  if (mask.size() != ids.size()) {
    throw ShapeError("sft_loss: mask length " + std::to_string(mask.size()) + " for " +
                     std::to_string(ids.size()) + " ids");
  }
  return shifted_loss(g, logits, ids, mask);
}

template <typename T>
T clm_loss_value(const Tensor<T>& logits, std::span<const std::uint32_t> ids) {
  Graph<T> g;
  const Var l = g.leaf(logits);
  return g.value(clm_loss(g, l, ids))[0];
}

template <typename T>
T sft_loss_value(const Tensor<T>& logits, std::span<const std::uint32_t> ids,
                 std::span<const std::uint8_t> mask) {
  Graph<T> g;
  const Var l = g.leaf(logits);
  return g.value(sft_loss(g, l, ids, mask))[0];
}

std::size_t scored_positions(std::span<const std::uint8_t> mask) {
  std::size_t count = 0;
  for (std::size_t i = 1; i < mask.size(); ++i) count += mask[i] != 0 ? 1 : 0;
  return count;
}

#define LANGADAPT_INSTANTIATE_LOSSES(T)                                                      \
  template Var clm_loss<T>(Graph<T>&, Var, std::span<const std::uint32_t>);                  \
  template Var sft_loss<T>(Graph<T>&, Var, std::span<const std::uint32_t>,                   \
                           std::span<const std::uint8_t>);                                   \
  template T clm_loss_value<T>(const Tensor<T>&, std::span<const std::uint32_t>);            \
  template T sft_loss_value<T>(const Tensor<T>&, std::span<const std::uint32_t>,             \
                               std::span<const std::uint8_t>);

LANGADAPT_INSTANTIATE_LOSSES(float)
LANGADAPT_INSTANTIATE_LOSSES(double)

}  // namespace langadapt::train
