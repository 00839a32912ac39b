#include "langadapt/model/parameters.hpp"

#include "langadapt/util/error.hpp"

namespace langadapt::model {

std::string names::layer(std::size_t index, std::string_view leaf) {
  return "layers." + std::to_string(index) + "." + std::string(leaf);
}

std::string_view to_string(LoraTarget target) {
  switch (target) {
    case LoraTarget::kQuery:
      return "q";
    case LoraTarget::kKey:
      return "k";
    case LoraTarget::kValue:
      return "v";
  }
  return "q";
}

template <typename T>
Tensor<T>& Parameters<T>::at(std::string_view name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw ValidationError("no parameter named " + std::string(name));
  }
  return it->second;
}

template <typename T>
const Tensor<T>& Parameters<T>::at(std::string_view name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw ValidationError("no parameter named " + std::string(name));
  }
  return it->second;
}

template <typename T>
void Parameters<T>::add(std::string name, Tensor<T> value) {
  if (tensors.contains(name)) {
    throw ValidationError("duplicate parameter " + name);
  }
  order.push_back(name);
  tensors.emplace(std::move(name), std::move(value));
}

template <typename T>
std::size_t Parameters<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

template <typename T>
std::string LoraAdapter<T>::base_name() const {
  const char* leaf = target == LoraTarget::kQuery ? "wq" : target == LoraTarget::kKey ? "wk" : "wv";
  return names::layer(layer, leaf);
}

void FreezeMask::set_trainable(std::string name) { rules_[std::move(name)] = Rule{true, 0}; }

void FreezeMask::set_frozen(std::string name) { rules_[std::move(name)] = Rule{false, 0}; }

void FreezeMask::set_rows_from(std::string name, std::size_t first_row) {
  rules_[std::move(name)] = Rule{true, first_row};
}

const FreezeMask::Rule& FreezeMask::rule(std::string_view name) const {
  static const Rule kFrozen{};
  const auto it = rules_.find(name);
  return it == rules_.end() ? kFrozen : it->second;
}

bool FreezeMask::is_trainable(std::string_view name, std::size_t row) const {
  const Rule& r = rule(name);
  return r.trainable && row >= r.first_trainable_row;
}

bool FreezeMask::any_trainable(std::string_view name) const { return rule(name).trainable; }

std::size_t FreezeMask::trainable_scalars(std::string_view name, const numerics::Shape& shape) const {
  const Rule& r = rule(name);
  if (!r.trainable) return 0;
  const std::size_t total = numerics::element_count(shape);
  if (r.first_trainable_row == 0 || shape.empty()) return total;
  const std::size_t rows = shape[0];
  const std::size_t per_row = rows == 0 ? 0 : total / rows;
  return rows > r.first_trainable_row ? (rows - r.first_trainable_row) * per_row : 0;
}

template <typename T>
std::vector<NamedTensor<T>> Model<T>::named_tensors() {
  std::vector<NamedTensor<T>> out;
  for (const std::string& name : params.order) {
    out.push_back({name, &params.at(name)});
  }
  for (LoraAdapter<T>& adapter : adapters) {
    out.push_back({adapter.a_name(), &adapter.a});
    out.push_back({adapter.b_name(), &adapter.b});
  }
  return out;
}

template <typename T>
std::vector<NamedConstTensor<T>> Model<T>::named_tensors() const {
  std::vector<NamedConstTensor<T>> out;
  for (const std::string& name : params.order) {
    out.push_back({name, &params.at(name)});
  }
  for (const LoraAdapter<T>& adapter : adapters) {
    out.push_back({adapter.a_name(), &adapter.a});
    out.push_back({adapter.b_name(), &adapter.b});
  }
  return out;
}

template <typename T>
std::size_t Model<T>::total_scalars() const {
  std::size_t n = params.scalar_count();
  for (const auto& adapter : adapters) n += adapter.a.size() + adapter.b.size();
  return n;
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  Model<U> out;
  out.config = config;
  out.mask = mask;
  out.old_vocab_size = old_vocab_size;
  for (const std::string& name : params.order) {
    out.params.add(name, params.at(name).template cast<U>());
  }
  for (const auto& adapter : adapters) {
    out.adapters.push_back(LoraAdapter<U>{adapter.target, adapter.layer, adapter.a.template cast<U>(),
                                          adapter.b.template cast<U>(), adapter.alpha});
  }
  return out;
}

template struct Parameters<float>;
template struct Parameters<double>;
template struct LoraAdapter<float>;
template struct LoraAdapter<double>;
template struct Model<float>;
template struct Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;

}  // namespace langadapt::model
