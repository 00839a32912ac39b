#include "langadapt/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "langadapt/util/error.hpp"

namespace langadapt::numerics {

namespace {

double evaluate(const RecordedFn& f, std::span<Tensor<double>* const> params) {
  Graph<double> g;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (Tensor<double>* p : params) {
    leaves.push_back(g.leaf(*p));
  }
  const Var out = f(g, leaves);
  const Tensor<double>& v = g.value(out);
  if (v.size() != 1) {
    throw ShapeError("grad_check: function must be scalar-valued");
  }
  return v[0];
}

}  // namespace

GradCheckResult grad_check(const RecordedFn& f, std::span<Tensor<double>* const> params,
                           GradCheckOptions options) {
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    std::vector<Var> leaves;
    for (Tensor<double>* p : params) {
      leaves.push_back(g.leaf(*p));
    }
    const Var out = f(g, leaves);
    g.backward(out);
    for (const Var leaf : leaves) {
      analytic.push_back(g.grad(leaf));
    }
  }

  if (options.order != 2 && options.order != 4) {
    throw ValidationError("grad_check: order must be 2 or 4");
  }
  GradCheckResult result;
  const double h = options.step;
  const auto at = [&](Tensor<double>& tensor, std::size_t i, double saved, double delta) {
    tensor[i] = saved + delta;
    return evaluate(f, params);
  };
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<double>& tensor = *params[p];
    const std::size_t n = tensor.size();
    std::size_t stride = 1;
    if (options.max_per_param > 0 && n > options.max_per_param) {
      stride = (n + options.max_per_param - 1) / options.max_per_param;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = tensor[i];
      double numeric = 0.0;
      if (options.order == 2) {
        numeric = (at(tensor, i, saved, h) - at(tensor, i, saved, -h)) / (2.0 * h);
      } else {
        numeric = (8.0 * (at(tensor, i, saved, h) - at(tensor, i, saved, -h)) -
                   (at(tensor, i, saved, 2.0 * h) - at(tensor, i, saved, -2.0 * h))) /
                  (12.0 * h);
      }
      tensor[i] = saved;
      const double a = analytic[p][i];
      const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      ++result.checked;
      if (err > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = std::max(result.max_relative_error, err);
        if (err >= result.max_relative_error) {
          result.worst_param = p;
          result.worst_index = i;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace langadapt::numerics
