#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "langadapt/numerics/graph.hpp"

namespace langadapt::numerics {

// Records a scalar computation on `g` from leaf handles of the parameters.
using RecordedFn = std::function<Var(Graph<double>& g, std::span<const Var> params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Location of the worst scalar.
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  double step = 1e-5;
  // Upper bound on scalars checked per parameter tensor (evenly strided);
  // 0 checks every scalar.
  std::size_t max_per_param = 0;
  // Accuracy order of the central difference: 2 (two evaluations per
  // scalar) or 4 (four evaluations, error O(step^4)).
  int order = 2;
};

// Compares reverse-mode gradients against central differences. The error
// for one scalar is |a - n| / (|a| + |n| + 1e-12); the maximum is returned.
// Parameters are restored exactly before returning.
GradCheckResult grad_check(const RecordedFn& f, std::span<Tensor<double>* const> params,
                           GradCheckOptions options = {});

}  // namespace langadapt::numerics
