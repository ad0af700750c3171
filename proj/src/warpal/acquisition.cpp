#include "warpal/acquisition.hpp"

#include "warpal/lbfgs.hpp"
#include "warpal/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace warpal {

double eig(const GPState& state, const Vector& x, Vector* grad) {
  require(x.size() == state.dataset().dim(), ErrorCode::shape, "eig: query dimension mismatch");
  require((x.array() >= 0.0).all() && (x.array() <= 1.0).all(), ErrorCode::domain, "eig: query outside [0,1]^D");
  const double sn2 = state.hyperparams().noise_variance;
  const double s2 = state.variance_with_grad(x, grad);
  if (grad) *grad *= 0.5 / (sn2 + s2);
  return 0.5 * std::log1p(s2 / sn2);
}

MaximizeResult lbfgs_maximize(const ScalarField& f, const Matrix& X0, int steps, double grad_tol, double f_tol) {
  require(X0.rows() >= 1 && X0.cols() >= 1, ErrorCode::invalid_argument, "lbfgs_maximize: no candidates");
  require(steps >= 1, ErrorCode::invalid_argument, "lbfgs_maximize: steps must be >= 1");
  const Index D = X0.cols();
  LbfgsOptions opt;
  opt.max_iterations = steps;
  opt.grad_tol = grad_tol;
  opt.f_tol = f_tol;
  opt.lower = Vector::Zero(D);
  opt.upper = Vector::Ones(D);
  const Objective neg = [&](const Vector& x, Vector& g) {
    const double v = f(x, &g);
    g = -g;
    return -v;
  };

  MaximizeResult best;
  best.value = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Vector& x, double v, Index i, bool initial) {
    if (std::isfinite(v) && v > best.value) {
      best.x = x;
      best.value = v;
      best.candidate = i;
      best.from_initial = initial;
    }
  };
  for (Index i = 0; i < X0.rows(); ++i) {
    const Vector x0 = X0.row(i).transpose();
    const LbfgsResult r = lbfgs_minimize(neg, x0, opt);
    consider(x0, -r.initial_f, i, true);
    if (r.iterations > 0) consider(r.x, -r.f, i, false);
  }
  require(std::isfinite(best.value), ErrorCode::numeric, "lbfgs_maximize: objective non-finite at every candidate");
  return best;
}

Proposal propose(const GPState& state, const AcquisitionConfig& cfg, Rng& rng) {
  require(cfg.n_candidates >= 1 && cfg.opt_steps >= 1, ErrorCode::invalid_argument,
          "propose: n_candidates and opt_steps must be >= 1");
  const Dataset& data = state.dataset();
  const Matrix X0 = lhs_sample(cfg.n_candidates, data.dim(), rng);
  const ScalarField f = [&](const Vector& x, Vector* g) { return eig(state, x, g); };
  const MaximizeResult m = lbfgs_maximize(f, X0, cfg.opt_steps, cfg.grad_tol, cfg.f_tol);

  Proposal p{m.x, m.value, m.candidate, 0};
  auto too_close = [&](const Vector& x) {
    for (Index i = 0; i < data.size(); ++i)
      if ((data.X().row(i).transpose() - x).norm() <= cfg.dedupe_radius) return true;
    return false;
  };
  while (too_close(p.x)) {
    require(p.jitter_attempts < 10, ErrorCode::numeric, "propose: proposal collapses onto existing data");
    ++p.jitter_attempts;
    for (Index d = 0; d < p.x.size(); ++d) p.x[d] = std::clamp(p.x[d] + rng.uniform(-1e-6, 1e-6), 0.0, 1.0);
    p.value = eig(state, p.x);
  }
  return p;
}

}  // namespace warpal
