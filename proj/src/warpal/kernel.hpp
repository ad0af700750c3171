#pragma once

#include "warpal/common.hpp"

namespace warpal {

// Matérn 5/2 ARD hyperparameters. Positivity is enforced by optimizing in log space.
struct GPHyperparams {
  Vector lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 0.01;

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(lengthscales.size()); }
  void validate() const;

  // Layout: (log l_1..log l_D, log signal_variance, log noise_variance).
  [[nodiscard]] Vector to_log() const;
  static GPHyperparams from_log(const Vector& log_params);

  static GPHyperparams defaults(int dim);  // l = 0.3, signal 1, noise 0.01
};

double kernel(const Vector& xa, const Vector& xb, const GPHyperparams& hp);
Matrix kernel_matrix(const Matrix& Xa, const Matrix& Xb, const GPHyperparams& hp);

namespace detail {

// Scaled distance r for two rows, without validation.
double scaled_distance(const double* a, const double* b, Index a_stride, Index b_stride, const Vector& inv_l2, int dim);

struct Matern52Terms {
  double k;     // kernel value
  double dk_w;  // (5/3) sf2 (1 + sqrt5 r) exp(-sqrt5 r); dk/da_d = -dk_w (a_d - b_d) / l_d^2
};
Matern52Terms matern52_terms(double r, double signal_variance);

// Kernel block K(Xa, Xb) that also stores the dk_w factor of every entry, for reuse in adjoints.
Matrix kernel_matrix_terms(const Matrix& Xa, const Matrix& Xb, const GPHyperparams& hp, Matrix& dkw);

// Fault-injection hook used by the self-check suite: scales the sqrt(5) constant.
void set_kernel_fault_scale(double scale);
double kernel_fault_scale();

}  // namespace detail

}  // namespace warpal
