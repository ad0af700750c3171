#pragma once

#include "warpal/common.hpp"
#include "warpal/kernel.hpp"
#include "warpal/warp.hpp"

#include <memory>

namespace warpal {

// Observed inputs in [0,1]^D (rows) and scalar responses. Exact duplicate rows are rejected.
class Dataset {
 public:
  Dataset(Matrix X, Vector y);

  [[nodiscard]] const Matrix& X() const noexcept { return X_; }
  [[nodiscard]] const Vector& y() const noexcept { return y_; }
  [[nodiscard]] Index size() const noexcept { return X_.rows(); }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(X_.cols()); }

  void append(const Vector& x, double y);
  [[nodiscard]] bool contains(const Vector& x) const;

 private:
  Matrix X_;
  Vector y_;
};

// Affine response standardization: model units = (y - offset) / scale.
// A single observation is left untransformed since its spread is undefined.
struct Standardization {
  double offset = 0.0;
  double scale = 1.0;
  static Standardization fit(const Vector& y);
  [[nodiscard]] Vector apply(const Vector& y) const { return (y.array() - offset) / scale; }
};

struct Posterior {
  double mean;      // response units
  double variance;  // latent variance in model (standardized) units, comparable to signal_variance
};

struct CholeskyResult {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// Factorizes K with escalating jitter 1e-8 * mean(diag K) ... 1e-2 * mean(diag K).
CholeskyResult robust_cholesky(const Matrix& K);

// Conditioned GP surrogate; immutable once constructed.
class GPState {
 public:
  static GPState condition(const Dataset& data, const GPHyperparams& hp, std::shared_ptr<const Warp> warp = nullptr);

  [[nodiscard]] Posterior posterior(const Vector& x) const;
  // Batched posterior over rows of Xq: means (response units) and latent variances (model units).
  void posterior(const Matrix& Xq, Vector& mean, Vector& variance) const;
  // Latent variance and its gradient with respect to the unwarped query.
  double variance_with_grad(const Vector& x, Vector* grad) const;
  // d mean / d x in original coordinates, response units. Requires an identity warp.
  [[nodiscard]] Vector posterior_mean_grad(const Vector& x) const;

  [[nodiscard]] const Dataset& dataset() const noexcept { return data_; }
  [[nodiscard]] const GPHyperparams& hyperparams() const noexcept { return hp_; }
  [[nodiscard]] const Warp& warp() const noexcept { return *warp_; }
  [[nodiscard]] std::shared_ptr<const Warp> warp_ptr() const noexcept { return warp_; }
  [[nodiscard]] bool identity_warp() const noexcept { return warp_->kind() == WarpKind::identity; }
  [[nodiscard]] const Standardization& standardization() const noexcept { return stdz_; }
  [[nodiscard]] const Matrix& warped_inputs() const noexcept { return W_; }
  [[nodiscard]] Matrix chol() const { return llt_.matrixL(); }
  [[nodiscard]] const Vector& alpha() const noexcept { return alpha_; }
  [[nodiscard]] double jitter() const noexcept { return jitter_; }

 private:
  GPState(Dataset data, GPHyperparams hp, std::shared_ptr<const Warp> warp);

  Dataset data_;
  GPHyperparams hp_;
  std::shared_ptr<const Warp> warp_;
  Standardization stdz_;
  Matrix W_;
  Eigen::LLT<Matrix> llt_;
  Vector alpha_;
  Vector inv_l2_;
  double jitter_ = 0.0;
};

// Log marginal likelihood of the standardized responses under the (warped) kernel.
double mll(const Dataset& data, const GPHyperparams& hp, const Warp* warp = nullptr);

// Returns the MLL and writes its gradient w.r.t. (log l_i, log signal_variance, log noise_variance).
double mll_with_grad(const Dataset& data, const GPHyperparams& hp, const Warp* warp, Vector& grad_log);

namespace detail {

// MLL on already-warped inputs W. If grad_W is given, also writes dMLL/dW.
double mll_on_inputs(const Matrix& W, const Vector& y_model, const GPHyperparams& hp, Vector* grad_log,
                     Matrix* grad_W);

// Backpropagates an adjoint G of a kernel block K(Wa, Wb) to the inputs, accumulating into gWa and gWb.
// dkw, when given, holds the cached dk_w factors from kernel_matrix_terms.
void kernel_input_adjoint(const Matrix& Wa, const Matrix& Wb, const Matrix& G, const GPHyperparams& hp,
                          Matrix* gWa, Matrix* gWb, const Matrix* dkw = nullptr);

}  // namespace detail

struct FitOptions {
  int max_iterations = 300;
  double grad_tol = 1e-6;
  double f_tol = 1e-9;
  // Log-space box keeping the optimizer inside a numerically sane region.
  double min_lengthscale = 1e-3, max_lengthscale = 1e2;
  double min_signal_variance = 1e-4, max_signal_variance = 1e2;
  double min_noise_variance = 1e-6, max_noise_variance = 1e1;
};

struct FitResult {
  GPHyperparams hp;
  double mll = 0.0;
  double initial_mll = 0.0;
  int iterations = 0;
  bool warning = false;  // optimizer stopped abnormally; hp is the best iterate seen
};

// Maximizes the MLL over kernel and likelihood parameters with the warp frozen.
FitResult fit_hyperparams(const Dataset& data, const Warp* warp, const GPHyperparams& init,
                          const FitOptions& options = {});

}  // namespace warpal
