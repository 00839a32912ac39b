#include "langadapt/numerics/graph.hpp"

#include "langadapt/util/error.hpp"

namespace langadapt::numerics {

template <typename T>
Var Graph<T>::leaf(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Graph<T>::record(Tensor<T> value, std::vector<std::size_t> parents, BackwardFn backward,
                     const char* op_name) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op_name) + " produced a non-finite value");
  }
  nodes_.push_back(Node{std::move(value), {}, std::move(parents), std::move(backward)});
  return Var{nodes_.size() - 1};
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.grad.shape() != node.value.shape()) {
    node.grad = Tensor<T>(node.value.shape());
  }
  return node.grad;
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Var v) {
  return grad_buffer(v.id);
}

template <typename T>
void Graph<T>::backward(Var loss) {
  if (loss.id >= nodes_.size()) {
    throw Error("backward: unknown node");
  }
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " +
                     shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& node : nodes_) {
    node.grad = Tensor<T>(node.value.shape());
  }
  std::vector<bool> reachable(nodes_.size(), false);
  reachable[loss.id] = true;
  nodes_[loss.id].grad[0] = T{1};
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    if (!reachable[id]) {
      continue;
    }
    Node& node = nodes_[id];
    if (node.backward) {
      node.backward(*this, id);
    }
    for (const std::size_t p : nodes_[id].parents) {
      reachable[p] = true;
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace langadapt::numerics
