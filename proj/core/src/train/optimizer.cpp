#include "langadapt/train/optimizer.hpp"

#include <cmath>

#include "langadapt/util/error.hpp"

namespace langadapt::train {

namespace {

// Calls fn(index) for every trainable element of a tensor. The row of an
// element is its index along dimension 0.
template <typename Fn>
void for_trainable(const model::FreezeMask& mask, std::string_view name,
                   const numerics::Tensor<float>& tensor, Fn&& fn) {
  const auto& rule = mask.rule(name);
  if (!rule.trainable || tensor.size() == 0) return;
  const std::size_t rows = tensor.dim(0);
  const std::size_t per_row = tensor.size() / rows;
  for (std::size_t i = rule.first_trainable_row * per_row; i < tensor.size(); ++i) fn(i);
}

numerics::Tensor<float>& target_tensor(model::Model<float>& model, std::string_view name) {
  for (auto& named : model.named_tensors()) {
    if (named.name == name) return *named.tensor;
  }
  throw ValidationError("optimizer: unknown tensor " + std::string(name));
}

void check_shape(const numerics::Tensor<float>& param, const numerics::Tensor<float>& grad,
                 std::string_view name) {
  if (param.shape() != grad.shape()) {
    throw ShapeError("optimizer: gradient for " + std::string(name) + " has shape " +
                     numerics::shape_string(grad.shape()) + ", parameter " +
                     numerics::shape_string(param.shape()));
  }
}

}  // namespace

MomentumSgd::MomentumSgd(double momentum) : momentum_(momentum) {
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ValidationError("momentum must be in [0, 1)");
  }
}

void MomentumSgd::step(model::Model<float>& model, const Gradients& grads, double lr) {
  for (const auto& [name, grad] : grads) {
    auto& param = target_tensor(model, name);
    check_shape(param, grad, name);
    auto& vel = velocity_[name];
    if (vel.empty()) vel.assign(param.size(), 0.0f);
    auto p = param.data();
    const auto gd = grad.data();
    const float mu = static_cast<float>(momentum_);
    const float rate = static_cast<float>(lr);
    for_trainable(model.mask, name, param, [&](std::size_t i) {
      vel[i] = mu * vel[i] + gd[i];
      p[i] -= rate * vel[i];
    });
  }
}

Adam::Adam(double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::step(model::Model<float>& model, const Gradients& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, grad] : grads) {
    auto& param = target_tensor(model, name);
    check_shape(param, grad, name);
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(param.size(), 0.0f);
      v.assign(param.size(), 0.0f);
    }
    auto p = param.data();
    const auto gd = grad.data();
    for_trainable(model.mask, name, param, [&](std::size_t i) {
      const double gi = gd[i];
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * gi);
      v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] = static_cast<float>(p[i] - lr * mhat / (std::sqrt(vhat) + epsilon_));
    });
  }
}

std::unique_ptr<Optimizer> make_optimizer(std::string_view name, double momentum) {
  if (name == "sgd") return std::make_unique<MomentumSgd>(momentum);
  if (name == "adam") return std::make_unique<Adam>();
  throw ValidationError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

double clip_global_norm(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, grad] : grads) {
    for (const float x : grad.data()) sq += static_cast<double>(x) * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const float factor = static_cast<float>(max_norm / norm);
    for (auto& [name, grad] : grads) {
      for (float& x : grad.data()) x *= factor;
    }
  }
  return norm;
}

void mask_gradients(const model::FreezeMask& mask, Gradients& grads) {
  for (auto it = grads.begin(); it != grads.end();) {
    const auto& rule = mask.rule(it->first);
    if (!rule.trainable) {
      it = grads.erase(it);
      continue;
    }
    auto& grad = it->second;
    if (rule.first_trainable_row > 0 && grad.size() > 0) {
      const std::size_t per_row = grad.size() / grad.dim(0);
      const std::size_t stop = std::min(grad.size(), rule.first_trainable_row * per_row);
      auto d = grad.data();
      for (std::size_t i = 0; i < stop; ++i) d[i] = 0.0f;
    }
    ++it;
  }
}

}  // namespace langadapt::train
