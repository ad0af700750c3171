#pragma once

#include "warpal/benchmarks.hpp"
#include "warpal/gp.hpp"

#include <cstdint>
#include <span>

namespace warpal {

// Fixed test set for one benchmark. Targets equal the clean values unless the benchmark
// scores CRPS against noisy observations.
struct EvalGrid {
  Matrix X;        // T x D
  Vector f_clean;  // T
  Matrix grad;     // T x D
  Vector targets;  // T, CRPS targets
  bool observation = false;
};

// T scrambled-Sobol points whose scramble depends only on the benchmark name.
EvalGrid make_eval_grid(const Oracle& oracle, Index num_points = 1024, double noise_sd = 0.0);

double mse(const GPState& state, const EvalGrid& grid);
double crps_gaussian(double mu, double sigma, double y);
// Grid-mean CRPS of the latent (or, for observation grids, the observation) predictive.
double crps(const GPState& state, const EvalGrid& grid);
// Mean over points and dimensions of the squared error of the posterior-mean gradient.
double mean_derivative_error(const GPState& state, const EvalGrid& grid);

// Trapezoidal area with unit spacing.
double auc(std::span<const double> curve);

// Rows are runs; columns are iterations.
using CurveSet = Matrix;

struct AreaReduction {
  double mean = 0.0;
  double variance = 0.0;  // NaN when fewer than two runs
};

// Ratio-of-means estimate of (A_metric - A_baseline) / A_baseline over seed-paired runs, with the
// delta-method variance. Multiply by -100 for a larger-is-better percentage.
AreaReduction area_reduction(const CurveSet& metric, const CurveSet& baseline);

CurveSet lower_bound_shift(const CurveSet& curves, double best_value);

}  // namespace warpal
