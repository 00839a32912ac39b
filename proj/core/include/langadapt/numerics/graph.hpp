#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "langadapt/numerics/tensor.hpp"

namespace langadapt::numerics {

// Handle to a value recorded on a Graph.
struct Var {
  std::size_t id = 0;
};

// Reverse-mode tape with eager recording. Nodes are appended in evaluation
// order, so ids are a topological order and backward() simply walks them in
// reverse, visiting each reachable node once.
//
// A Graph is single-owner and must not be shared while recording.
template <typename T>
class Graph {
 public:
  // Accumulates the node's gradient into its parents' gradient buffers.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Var leaf(Tensor<T> value);

  // Used by ops. Validates that `value` is finite (NumericError otherwise).
  Var record(Tensor<T> value, std::vector<std::size_t> parents, BackwardFn backward,
             const char* op_name);

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }

  // Gradient of the last backward() loss w.r.t. v; zeros when v was not
  // reachable from that loss or backward() has not run.
  const Tensor<T>& grad(Var v);
  Tensor<T>& grad_buffer(std::size_t id);

  // Throws ShapeError if `loss` is not a single-element tensor.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // empty until first touched
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace langadapt::numerics
