#include "warpal/gp.hpp"

#include "warpal/lbfgs.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace warpal {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void validate_inputs(const Matrix& X) {
  require(X.allFinite(), ErrorCode::domain, "dataset: non-finite input");
  require((X.array() >= 0.0).all() && (X.array() <= 1.0).all(), ErrorCode::domain,
          "dataset: inputs must lie in [0,1]^D");
}

std::shared_ptr<const Warp> identity_or(std::shared_ptr<const Warp> warp, int dim) {
  if (!warp) return std::make_shared<IdentityWarp>(dim);
  require(warp->dim() == dim, ErrorCode::shape, "warp dimension does not match data");
  return warp;
}

}  // namespace

Dataset::Dataset(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
  require(X_.rows() >= 1 && X_.cols() >= 1, ErrorCode::invalid_argument, "dataset: need N >= 1 and D >= 1");
  require(X_.rows() == y_.size(), ErrorCode::shape, "dataset: X rows and y length differ");
  require(y_.allFinite(), ErrorCode::domain, "dataset: non-finite response");
  validate_inputs(X_);
  for (Index i = 0; i < X_.rows(); ++i)
    for (Index j = i + 1; j < X_.rows(); ++j)
      require((X_.row(i).array() != X_.row(j).array()).any(), ErrorCode::invalid_argument,
              "dataset: duplicate input row");
}

bool Dataset::contains(const Vector& x) const {
  for (Index i = 0; i < X_.rows(); ++i)
    if ((X_.row(i).transpose().array() == x.array()).all()) return true;
  return false;
}

void Dataset::append(const Vector& x, double y) {
  require(x.size() == X_.cols(), ErrorCode::shape, "dataset: appended point has wrong dimension");
  require(std::isfinite(y), ErrorCode::domain, "dataset: non-finite response");
  validate_inputs(x.transpose());
  require(!contains(x), ErrorCode::invalid_argument, "dataset: duplicate input row");
  X_.conservativeResize(X_.rows() + 1, Eigen::NoChange);
  X_.row(X_.rows() - 1) = x.transpose();
  y_.conservativeResize(y_.size() + 1);
  y_[y_.size() - 1] = y;
}

Standardization Standardization::fit(const Vector& y) {
  Standardization s;
  if (y.size() < 2) return s;
  s.offset = y.mean();
  const double var = (y.array() - s.offset).square().sum() / static_cast<double>(y.size() - 1);
  const double sd = std::sqrt(var);
  s.scale = (std::isfinite(sd) && sd > 0.0) ? sd : 1.0;
  return s;
}

CholeskyResult robust_cholesky(const Matrix& K) {
  CholeskyResult out;
  out.llt.compute(K);
  if (out.llt.info() == Eigen::Success) return out;
  const double base = K.diagonal().mean();
  std::vector<double> tried;
  for (double factor = 1e-8; factor <= 1e-2 * 1.0000001; factor *= 10.0) {
    const double jitter = factor * base;
    tried.push_back(jitter);
    Matrix Kj = K;
    Kj.diagonal().array() += jitter;
    out.llt.compute(Kj);
    if (out.llt.info() == Eigen::Success && std::isfinite(jitter)) {
      out.jitter = jitter;
      return out;
    }
  }
  throw IllConditionedError("cholesky failed after maximum jitter", std::move(tried));
}

// ---------------------------------------------------------------------------

GPState::GPState(Dataset data, GPHyperparams hp, std::shared_ptr<const Warp> warp)
    : data_(std::move(data)), hp_(std::move(hp)), warp_(std::move(warp)) {}

GPState GPState::condition(const Dataset& data, const GPHyperparams& hp, std::shared_ptr<const Warp> warp) {
  hp.validate();
  require(hp.dim() == data.dim(), ErrorCode::shape, "condition: hyperparameter dimension mismatch");
  GPState s(data, hp, identity_or(std::move(warp), data.dim()));
  s.stdz_ = Standardization::fit(data.y());
  s.W_ = s.warp_->forward(data.X());
  s.inv_l2_ = hp.lengthscales.array().square().inverse();
  Matrix K = kernel_matrix(s.W_, s.W_, hp);
  K.diagonal().array() += hp.noise_variance;
  auto chol = robust_cholesky(K);
  s.llt_ = std::move(chol.llt);
  s.jitter_ = chol.jitter;
  s.alpha_ = s.llt_.solve(s.stdz_.apply(data.y()));
  return s;
}

Posterior GPState::posterior(const Vector& x) const {
  require(x.size() == data_.dim(), ErrorCode::shape, "posterior: query dimension mismatch");
  Vector mean, var;
  posterior(x.transpose(), mean, var);
  return {mean[0], var[0]};
}

void GPState::posterior(const Matrix& Xq, Vector& mean, Vector& variance) const {
  require(Xq.cols() == data_.dim(), ErrorCode::shape, "posterior: query dimension mismatch");
  require((Xq.array() >= 0.0).all() && (Xq.array() <= 1.0).all(), ErrorCode::domain,
          "posterior: query outside [0,1]^D");
  const Matrix Wq = warp_->forward(Xq);
  const Matrix Ks = kernel_matrix(Wq, W_, hp_);  // M x N
  mean = (Ks * alpha_).array() * stdz_.scale + stdz_.offset;
  const Matrix V = llt_.matrixL().solve(Ks.transpose());
  variance = (hp_.signal_variance - V.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
}

double GPState::variance_with_grad(const Vector& x, Vector* grad) const {
  const int D = data_.dim();
  const Index N = data_.size();
  WarpTape tape;
  const Matrix w = warp_->forward(x.transpose(), grad ? &tape : nullptr);
  Vector ks(N), dkw(N);
  for (Index i = 0; i < N; ++i) {
    const double r = detail::scaled_distance(w.data(), &W_(i, 0), 1, N, inv_l2_, D);
    const auto t = detail::matern52_terms(r, hp_.signal_variance);
    ks[i] = t.k;
    dkw[i] = t.dk_w;
  }
  const Vector v = llt_.matrixL().solve(ks);
  const double raw = hp_.signal_variance - v.squaredNorm();
  const double var = std::max(raw, 0.0);
  if (grad) {
    const Vector b = llt_.matrixU().solve(v);
    Matrix gw = Matrix::Zero(1, D);
    if (raw > 0.0) {
      for (Index i = 0; i < N; ++i) {
        const double c = 2.0 * b[i] * dkw[i];
        for (int d = 0; d < D; ++d) gw(0, d) += c * (w(0, d) - W_(i, d)) * inv_l2_[d];
      }
    }
    Matrix gx;
    warp_->backward(tape, gw, &gx, nullptr);
    *grad = gx.row(0).transpose();
  }
  return var;
}

Vector GPState::posterior_mean_grad(const Vector& x) const {
  require(identity_warp(), ErrorCode::unsupported, "posterior_mean_grad: requires an identity warp");
  require(x.size() == data_.dim(), ErrorCode::shape, "posterior_mean_grad: query dimension mismatch");
  const int D = data_.dim();
  const Index N = data_.size();
  Vector g = Vector::Zero(D);
  for (Index i = 0; i < N; ++i) {
    const double r = detail::scaled_distance(x.data(), &W_(i, 0), 1, N, inv_l2_, D);
    const double c = alpha_[i] * detail::matern52_terms(r, hp_.signal_variance).dk_w;
    for (int d = 0; d < D; ++d) g[d] -= c * (x[d] - W_(i, d)) * inv_l2_[d];
  }
  return g * stdz_.scale;
}

// ---------------------------------------------------------------------------

namespace detail {

void kernel_input_adjoint(const Matrix& Wa, const Matrix& Wb, const Matrix& G, const GPHyperparams& hp,
                          Matrix* gWa, Matrix* gWb, const Matrix* dkw) {
  const int D = hp.dim();
  const Vector inv_l2 = hp.lengthscales.array().square().inverse();
  for (Index j = 0; j < Wb.rows(); ++j) {
    for (Index i = 0; i < Wa.rows(); ++i) {
      const double gij = G(i, j);
      if (gij == 0.0) continue;
      double c = gij;
      if (dkw) {
        c *= (*dkw)(i, j);
      } else {
        const double r = scaled_distance(&Wa(i, 0), &Wb(j, 0), Wa.rows(), Wb.rows(), inv_l2, D);
        c *= matern52_terms(r, hp.signal_variance).dk_w;
      }
      for (int d = 0; d < D; ++d) {
        const double t = c * (Wa(i, d) - Wb(j, d)) * inv_l2[d];
        if (gWa) (*gWa)(i, d) -= t;
        if (gWb) (*gWb)(j, d) += t;
      }
    }
  }
}

double mll_on_inputs(const Matrix& W, const Vector& y_model, const GPHyperparams& hp, Vector* grad_log,
                     Matrix* grad_W) {
  const Index N = W.rows();
  const int D = hp.dim();
  Matrix K = kernel_matrix(W, W, hp);
  Matrix Kn = K;
  Kn.diagonal().array() += hp.noise_variance;
  const auto chol = robust_cholesky(Kn);
  const Vector alpha = chol.llt.solve(y_model);
  const Matrix L = chol.llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double value = -0.5 * y_model.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(N) * kLog2Pi;
  if (!grad_log && !grad_W) return value;

  // dMLL = 1/2 tr((alpha alpha^T - K^-1) dK)
  const Matrix Kinv = chol.llt.solve(Matrix::Identity(N, N));
  const Matrix A = alpha * alpha.transpose() - Kinv;
  if (grad_log) {
    grad_log->setZero(D + 2);
    const Vector inv_l2 = hp.lengthscales.array().square().inverse();
    for (Index j = 0; j < N; ++j) {
      for (Index i = 0; i < N; ++i) {
        const double r = scaled_distance(&W(i, 0), &W(j, 0), N, N, inv_l2, D);
        const double dkw = matern52_terms(r, hp.signal_variance).dk_w;
        for (int d = 0; d < D; ++d) {
          const double diff = W(i, d) - W(j, d);
          (*grad_log)[d] += 0.5 * A(i, j) * dkw * diff * diff * inv_l2[d];
        }
      }
    }
    (*grad_log)[D] = 0.5 * (A.array() * K.array()).sum();
    (*grad_log)[D + 1] = 0.5 * hp.noise_variance * A.trace();
  }
  if (grad_W) {
    grad_W->setZero(N, D);
    const Matrix G = 0.5 * A;
    kernel_input_adjoint(W, W, G, hp, grad_W, grad_W);
  }
  return value;
}

}  // namespace detail

double mll(const Dataset& data, const GPHyperparams& hp, const Warp* warp) {
  hp.validate();
  const Matrix W = warp ? warp->forward(data.X()) : data.X();
  return detail::mll_on_inputs(W, Standardization::fit(data.y()).apply(data.y()), hp, nullptr, nullptr);
}

double mll_with_grad(const Dataset& data, const GPHyperparams& hp, const Warp* warp, Vector& grad_log) {
  hp.validate();
  const Matrix W = warp ? warp->forward(data.X()) : data.X();
  return detail::mll_on_inputs(W, Standardization::fit(data.y()).apply(data.y()), hp, &grad_log, nullptr);
}

FitResult fit_hyperparams(const Dataset& data, const Warp* warp, const GPHyperparams& init,
                          const FitOptions& options) {
  require(data.size() >= 2, ErrorCode::invalid_argument, "fit_hyperparams: need at least two observations");
  init.validate();
  const int D = data.dim();
  const Matrix W = warp ? warp->forward(data.X()) : data.X();
  const Vector ym = Standardization::fit(data.y()).apply(data.y());

  LbfgsOptions opt;
  opt.max_iterations = options.max_iterations;
  opt.grad_tol = options.grad_tol;
  opt.f_tol = options.f_tol;
  Vector lo(D + 2), hi(D + 2);
  lo.head(D).setConstant(std::log(options.min_lengthscale));
  hi.head(D).setConstant(std::log(options.max_lengthscale));
  lo[D] = std::log(options.min_signal_variance);
  hi[D] = std::log(options.max_signal_variance);
  lo[D + 1] = std::log(options.min_noise_variance);
  hi[D + 1] = std::log(options.max_noise_variance);
  opt.lower = lo;
  opt.upper = hi;

  const Objective objective = [&](const Vector& theta, Vector& grad) {
    try {
      Vector g;
      const double v = detail::mll_on_inputs(W, ym, GPHyperparams::from_log(theta), &g, nullptr);
      grad = -g;
      return -v;
    } catch (const IllConditionedError&) {
      grad.setZero(theta.size());
      return std::numeric_limits<double>::infinity();
    }
  };

  FitResult out;
  out.initial_mll = detail::mll_on_inputs(W, ym, init, nullptr, nullptr);
  const Vector x0 = init.to_log().cwiseMax(lo).cwiseMin(hi);
  const LbfgsResult res = lbfgs_minimize(objective, x0, opt);
  out.iterations = res.iterations;
  if (std::isfinite(res.f) && -res.f >= out.initial_mll) {
    out.hp = GPHyperparams::from_log(res.x);
    out.mll = -res.f;
  } else {
    out.hp = init;
    out.mll = out.initial_mll;
  }
  const bool stalled = res.status == LbfgsStatus::line_search_failed &&
                       res.grad.cwiseAbs().maxCoeff() > 1e-3 * std::max(1.0, std::abs(res.f));
  out.warning = res.status == LbfgsStatus::non_finite_start || stalled;
  return out;
}

}  // namespace warpal
