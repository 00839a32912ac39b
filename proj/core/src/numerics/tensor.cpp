#include "langadapt/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "langadapt/util/error.hpp"

namespace langadapt::numerics {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape) : shape_(std::move(shape)), data_(element_count(shape_), T{0}) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

template <typename T>
Tensor<T> Tensor<T>::matrix(std::size_t rows, std::size_t cols,
                            std::initializer_list<std::initializer_list<T>> values) {
  std::vector<T> data;
  data.reserve(rows * cols);
  if (values.size() != rows) {
    throw ShapeError("matrix literal row count mismatch");
  }
  for (const auto& r : values) {
    if (r.size() != cols) {
      throw ShapeError("matrix literal column count mismatch");
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows, cols}, std::move(data));
}

template <typename T>
Tensor<T> Tensor<T>::filled(Shape shape, T value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  if (shape_.empty()) return 1;
  return cols() == 0 ? 0 : data_.size() / cols();
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  return shape_.empty() ? 1 : shape_.back();
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (const T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
bool Tensor<T>::bit_equal(const Tensor& other) const {
  return shape_ == other.shape_ &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(T)) == 0);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace langadapt::numerics
