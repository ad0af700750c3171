#pragma once

#include "warpal/gp.hpp"
#include "warpal/rng.hpp"

#include <functional>

namespace warpal {

struct AcquisitionConfig {
  int n_candidates = 500;
  int opt_steps = 300;
  double dedupe_radius = 1e-9;
  double grad_tol = 1e-9;  // early stop for each candidate's optimizer
  double f_tol = 1e-9;
};

// Expected information gain up to the additive constant: 0.5 log(1 + s2(T(x)) / noise_variance).
// If grad is given, writes the gradient with respect to the unwarped x.
double eig(const GPState& state, const Vector& x, Vector* grad = nullptr);

using ScalarField = std::function<double(const Vector& x, Vector* grad)>;

struct MaximizeResult {
  Vector x;
  double value = 0.0;
  Index candidate = 0;       // index of the winning start
  bool from_initial = false; // the winner is the start itself rather than its optimized iterate
};

// Maximizes f over [0,1]^D from every row of X0 independently with box-projected L-BFGS and
// returns the best of all final iterates and all starts. Ties resolve to the lowest index.
MaximizeResult lbfgs_maximize(const ScalarField& f, const Matrix& X0, int steps, double grad_tol = 1e-9,
                              double f_tol = 1e-9);

struct Proposal {
  Vector x;
  double value = 0.0;
  Index candidate = 0;
  int jitter_attempts = 0;
};

// Next query: LHS starts, per-start L-BFGS on eig, best point, then dedupe against the data.
Proposal propose(const GPState& state, const AcquisitionConfig& cfg, Rng& rng);

}  // namespace warpal
