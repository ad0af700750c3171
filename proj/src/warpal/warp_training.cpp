#include "warpal/warp_training.hpp"

#include "warpal/sampling.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace warpal {

ProbeSet build_reference(const Dataset& data, const GPHyperparams& hp, Index num_probes, std::uint64_t seed,
                         ProbeSampler sampler) {
  require(num_probes >= 1, ErrorCode::invalid_argument, "build_reference: need at least one probe");
  ProbeSet probes;
  probes.seed = seed;
  if (sampler == ProbeSampler::sobol) {
    probes.U = sobol_points(num_probes, data.dim(), seed);
  } else {
    Rng rng(seed);
    probes.U.resize(num_probes, data.dim());
    for (Index i = 0; i < num_probes; ++i)
      for (int d = 0; d < data.dim(); ++d) probes.U(i, d) = rng.uniform();
  }
  const GPState ref = GPState::condition(data, hp);
  Vector var;
  ref.posterior(probes.U, probes.mu_ref, var);
  return probes;
}

double ss_loss(const Dataset& data, const GPHyperparams& hp, const Warp& warp, const ProbeSet& probes, Vector* grad) {
  hp.validate();
  require(probes.U.cols() == data.dim() && probes.U.rows() == probes.mu_ref.size() && probes.U.rows() >= 1,
          ErrorCode::shape, "ss_loss: probe set does not match the dataset");
  const Index N = data.size();
  const Index M = probes.U.rows();
  const auto stdz = Standardization::fit(data.y());
  const Vector ym = stdz.apply(data.y());
  const Vector target = stdz.apply(probes.mu_ref);

  Matrix Z(N + M, data.dim());
  Z << data.X(), probes.U;
  WarpTape tape;
  const Matrix Wz = warp.forward(Z, grad ? &tape : nullptr);
  const Matrix W = Wz.topRows(N);
  const Matrix Wu = Wz.bottomRows(M);

  if (!Wz.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  Matrix dK, dKs;
  Matrix K = detail::kernel_matrix_terms(W, W, hp, dK);
  K.diagonal().array() += hp.noise_variance;
  const auto chol = robust_cholesky(K);
  const Vector alpha = chol.llt.solve(ym);
  const Matrix Ks = detail::kernel_matrix_terms(Wu, W, hp, dKs);  // M x N
  const Vector mu = Ks * alpha;
  const Matrix V = chol.llt.matrixL().solve(Ks.transpose());  // N x M
  const Vector s2raw = (hp.signal_variance - V.colwise().squaredNorm().array()).transpose();

  const double log2pi = std::log(2.0 * std::numbers::pi);
  double loss = 0.0;
  Vector gmu(M), gtau(M);
  for (Index m = 0; m < M; ++m) {
    const double tau = std::max(s2raw[m], 0.0) + hp.noise_variance;
    const double r = target[m] - mu[m];
    loss += 0.5 * (log2pi + std::log(tau)) + r * r / (2.0 * tau);
    gmu[m] = -r / tau / static_cast<double>(M);
    gtau[m] = s2raw[m] > 0.0 ? (0.5 / tau - r * r / (2.0 * tau * tau)) / static_cast<double>(M) : 0.0;
  }
  loss /= static_cast<double>(M);
  if (!grad) return loss;

  // Adjoints of the two kernel blocks.
  const Matrix Bm = chol.llt.matrixU().solve(V);  // K^-1 Ks^T, N x M
  const Vector beta = Bm * gmu;
  Matrix GK = -beta * alpha.transpose();
  GK.noalias() += Bm * gtau.asDiagonal() * Bm.transpose();
  Matrix GKs = gmu * alpha.transpose();
  GKs.noalias() -= 2.0 * gtau.asDiagonal() * Bm.transpose();

  Matrix gZ = Matrix::Zero(N + M, data.dim());
  Matrix gW = Matrix::Zero(N, data.dim());
  Matrix gWu = Matrix::Zero(M, data.dim());
  detail::kernel_input_adjoint(W, W, GK, hp, &gW, &gW, &dK);
  detail::kernel_input_adjoint(Wu, W, GKs, hp, &gWu, &gW, &dKs);
  gZ << gW, gWu;
  grad->setZero(warp.num_params());
  warp.backward(tape, gZ, nullptr, grad);
  return loss;
}

double warp_mll_loss(const Dataset& data, const GPHyperparams& hp, const Warp& warp, Vector* grad) {
  hp.validate();
  const Vector ym = Standardization::fit(data.y()).apply(data.y());
  WarpTape tape;
  const Matrix W = warp.forward(data.X(), grad ? &tape : nullptr);
  if (!grad) return -detail::mll_on_inputs(W, ym, hp, nullptr, nullptr);
  Matrix gW;
  const double value = detail::mll_on_inputs(W, ym, hp, nullptr, &gW);
  grad->setZero(warp.num_params());
  warp.backward(tape, -gW, nullptr, grad);
  return -value;
}

WarpTrainResult train_warp(const Dataset& data, const GPHyperparams& hp, Warp& warp, const WarpTrainConfig& cfg,
                           const ProbeSet* probes) {
  require(cfg.steps >= 1, ErrorCode::invalid_argument, "train_warp: steps must be >= 1");
  require(cfg.adam.learning_rate >= 0.0 && cfg.adam.weight_decay >= 0.0, ErrorCode::invalid_argument,
          "train_warp: rates must be non-negative");
  const bool ss = cfg.objective == WarpObjective::self_supervised;
  require(!ss || probes != nullptr, ErrorCode::invalid_argument, "train_warp: self-supervised objective needs probes");

  auto objective = [&](Vector* g) {
    return ss ? ss_loss(data, hp, warp, *probes, g) : warp_mll_loss(data, hp, warp, g);
  };

  WarpTrainResult res;
  const Vector initial = warp.params();
  Vector phi = initial;
  AdamWState state;
  auto abort_with = [&](const std::string& why) {
    warp.set_params(initial);
    res.aborted = true;
    res.warning = true;
    res.diagnostic = why;
    res.final_loss = res.loss_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : res.loss_trace.front();
    return res;
  };

  res.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    Vector g;
    double loss;
    try {
      loss = objective(&g);
    } catch (const IllConditionedError&) {
      return abort_with(std::string("ill-conditioned warped kernel at step ") + std::to_string(step));
    }
    if (!std::isfinite(loss) || !g.allFinite())
      return abort_with("non-finite loss or gradient at step " + std::to_string(step));
    res.loss_trace.push_back(loss);
    if (warp.num_params() == 0) continue;
    adamw_step(phi, g, state, cfg.adam);
    warp.set_params(phi);
  }
  res.initial_loss = res.loss_trace.front();
  try {
    res.final_loss = objective(nullptr);
  } catch (const IllConditionedError&) {
    return abort_with("ill-conditioned warped kernel after training");
  }
  if (!std::isfinite(res.final_loss)) return abort_with("non-finite loss after training");
  res.warning = res.final_loss > res.initial_loss;
  return res;
}

}  // namespace warpal
