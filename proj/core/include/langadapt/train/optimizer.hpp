#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "langadapt/model/parameters.hpp"

namespace langadapt::train {

using Gradients = std::map<std::string, numerics::Tensor<float>, std::less<>>;

// Updates only scalars the model's FreezeMask marks trainable. Tensors
// absent from the gradient map are left alone.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(model::Model<float>& model, const Gradients& grads, double lr) = 0;
  virtual std::string_view name() const = 0;
};

// v <- mu * v + g; p <- p - lr * v.
class MomentumSgd final : public Optimizer {
 public:
  explicit MomentumSgd(double momentum = 0.9);
  void step(model::Model<float>& model, const Gradients& grads, double lr) override;
  std::string_view name() const override { return "sgd"; }

 private:
  double momentum_;
  std::map<std::string, std::vector<float>, std::less<>> velocity_;
};

// Bias-corrected Adam without weight decay.
class Adam final : public Optimizer {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void step(model::Model<float>& model, const Gradients& grads, double lr) override;
  std::string_view name() const override { return "adam"; }

 private:
  double beta1_, beta2_, epsilon_;
  std::uint64_t t_ = 0;
  std::map<std::string, std::vector<float>, std::less<>> m_, v_;
};

// "sgd" or "adam"; throws ValidationError otherwise.
std::unique_ptr<Optimizer> make_optimizer(std::string_view name, double momentum);

// Scales every gradient by max_norm / norm when the global L2 norm exceeds
// max_norm (max_norm <= 0 disables). Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

// Zeroes the gradient entries of frozen scalars and drops tensors with no
// trainable scalar.
void mask_gradients(const model::FreezeMask& mask, Gradients& grads);

}  // namespace langadapt::train
