#pragma once

#include "warpal/common.hpp"

#include <functional>
#include <optional>

namespace warpal {

// Objective returning f(x) and writing the gradient. Non-finite values are treated as
// infeasible and rejected by the line search.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsOptions {
  int max_iterations = 300;
  int history = 10;
  double grad_tol = 1e-6;  // on the projected-gradient infinity norm
  double f_tol = 1e-9;     // relative decrease (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)
  int max_line_search = 25;
  // Optional box. Iterates are projected after each line-search step and curvature
  // pairs from projected steps are skipped.
  std::optional<Vector> lower;
  std::optional<Vector> upper;
};

enum class LbfgsStatus { converged_gradient, converged_function, max_iterations, line_search_failed, non_finite_start };

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  double initial_f = 0.0;  // objective at the projected start
  Vector grad;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
};

// Limited-memory BFGS with a strong-Wolfe line search (cubic interpolation, zoom).
LbfgsResult lbfgs_minimize(const Objective& objective, Vector x0, const LbfgsOptions& options);

}  // namespace warpal
