#include "warpal/kernel.hpp"

#include <atomic>
#include <cmath>

namespace warpal {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687313;
std::atomic<double> g_fault_scale{1.0};

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

void GPHyperparams::validate() const {
  require(lengthscales.size() >= 1, ErrorCode::invalid_argument, "hyperparams: empty lengthscales");
  require(all_finite(lengthscales) && (lengthscales.array() > 0.0).all(), ErrorCode::invalid_argument,
          "hyperparams: lengthscales must be finite and positive");
  require(std::isfinite(signal_variance) && signal_variance > 0.0, ErrorCode::invalid_argument,
          "hyperparams: signal variance must be finite and positive");
  require(std::isfinite(noise_variance) && noise_variance > 0.0, ErrorCode::invalid_argument,
          "hyperparams: noise variance must be finite and positive");
}

Vector GPHyperparams::to_log() const {
  const Index d = lengthscales.size();
  Vector out(d + 2);
  out.head(d) = lengthscales.array().log();
  out[d] = std::log(signal_variance);
  out[d + 1] = std::log(noise_variance);
  return out;
}

GPHyperparams GPHyperparams::from_log(const Vector& log_params) {
  require(log_params.size() >= 3, ErrorCode::shape, "hyperparams: log vector too short");
  const Index d = log_params.size() - 2;
  GPHyperparams hp;
  hp.lengthscales = log_params.head(d).array().exp();
  hp.signal_variance = std::exp(log_params[d]);
  hp.noise_variance = std::exp(log_params[d + 1]);
  return hp;
}

GPHyperparams GPHyperparams::defaults(int dim) {
  GPHyperparams hp;
  hp.lengthscales = Vector::Constant(dim, 0.3);
  hp.signal_variance = 1.0;
  hp.noise_variance = 0.01;
  return hp;
}

namespace detail {

double scaled_distance(const double* a, const double* b, Index a_stride, Index b_stride, const Vector& inv_l2,
                       int dim) {
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double diff = a[d * a_stride] - b[d * b_stride];
    r2 += diff * diff * inv_l2[d];
  }
  return std::sqrt(r2);
}

Matern52Terms matern52_terms(double r, double signal_variance) {
  const double s5 = kSqrt5 * g_fault_scale.load(std::memory_order_relaxed);
  const double sr = s5 * r;
  const double e = std::exp(-sr);
  return {signal_variance * (1.0 + sr + sr * sr / 3.0) * e, signal_variance * (5.0 / 3.0) * (1.0 + sr) * e};
}

Matrix kernel_matrix_terms(const Matrix& Xa, const Matrix& Xb, const GPHyperparams& hp, Matrix& dkw) {
  const Vector inv_l2 = hp.lengthscales.array().square().inverse();
  const int dim = hp.dim();
  Matrix K(Xa.rows(), Xb.rows());
  dkw.resize(Xa.rows(), Xb.rows());
  for (Index j = 0; j < Xb.rows(); ++j) {
    for (Index i = 0; i < Xa.rows(); ++i) {
      const auto t = matern52_terms(scaled_distance(&Xa(i, 0), &Xb(j, 0), Xa.rows(), Xb.rows(), inv_l2, dim),
                                    hp.signal_variance);
      K(i, j) = t.k;
      dkw(i, j) = t.dk_w;
    }
  }
  return K;
}

void set_kernel_fault_scale(double scale) { g_fault_scale.store(scale); }
double kernel_fault_scale() { return g_fault_scale.load(); }

}  // namespace detail

double kernel(const Vector& xa, const Vector& xb, const GPHyperparams& hp) {
  require(xa.size() == hp.dim() && xb.size() == hp.dim(), ErrorCode::shape, "kernel: dimension mismatch");
  require(xa.allFinite() && xb.allFinite(), ErrorCode::domain, "kernel: non-finite input");
  const Vector inv_l2 = hp.lengthscales.array().square().inverse();
  // Accumulate squared differences in a fixed order so k(a,b) == k(b,a) bitwise.
  const double r = detail::scaled_distance(xa.data(), xb.data(), 1, 1, inv_l2, hp.dim());
  return detail::matern52_terms(r, hp.signal_variance).k;
}

Matrix kernel_matrix(const Matrix& Xa, const Matrix& Xb, const GPHyperparams& hp) {
  require(Xa.cols() == hp.dim() && Xb.cols() == hp.dim(), ErrorCode::shape, "kernel_matrix: dimension mismatch");
  require(Xa.allFinite() && Xb.allFinite(), ErrorCode::domain, "kernel_matrix: non-finite input");
  const Vector inv_l2 = hp.lengthscales.array().square().inverse();
  const int dim = hp.dim();
  Matrix K(Xa.rows(), Xb.rows());
  for (Index j = 0; j < Xb.rows(); ++j) {
    for (Index i = 0; i < Xa.rows(); ++i) {
      const double r = detail::scaled_distance(&Xa(i, 0), &Xb(j, 0), Xa.rows(), Xb.rows(), inv_l2, dim);
      K(i, j) = detail::matern52_terms(r, hp.signal_variance).k;
    }
  }
  return K;
}

}  // namespace warpal
