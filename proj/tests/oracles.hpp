#pragma once

// Independent reference computations shared by the unit tests and the acceptance binary.
// Nothing here calls into the library's numerical code.

#include "warpal/common.hpp"
#include "warpal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

using warpal::Index;
using warpal::Matrix;
using warpal::Vector;

inline double matern52(const Vector& a, const Vector& b, const Vector& ls, double sf2) {
  const double r = ((a - b).array() / ls.array()).matrix().norm();
  const double s = std::sqrt(5.0) * r;
  return sf2 * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

inline Matrix gram(const Matrix& A, const Matrix& B, const Vector& ls, double sf2) {
  Matrix K(A.rows(), B.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < B.rows(); ++j) K(i, j) = matern52(A.row(i).transpose(), B.row(j).transpose(), ls, sf2);
  return K;
}

struct Stdz {
  double offset = 0.0;
  double scale = 1.0;
};

inline Stdz standardize(const Vector& y) {
  Stdz s;
  if (y.size() < 2) return s;
  s.offset = y.sum() / static_cast<double>(y.size());
  double ss = 0.0;
  for (Index i = 0; i < y.size(); ++i) ss += (y[i] - s.offset) * (y[i] - s.offset);
  const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
  if (sd > 0.0) s.scale = sd;
  return s;
}

// Posterior mean (response units) and latent variance (model units) via an explicit inverse.
inline void dense_posterior(const Matrix& X, const Vector& y, const Vector& ls, double sf2, double sn2,
                            const Matrix& Xq, Vector& mean, Vector& var) {
  const Stdz s = standardize(y);
  const Vector ym = (y.array() - s.offset) / s.scale;
  Matrix K = gram(X, X, ls, sf2);
  K.diagonal().array() += sn2;
  const Matrix Kinv = K.fullPivLu().inverse();
  const Matrix Ks = gram(Xq, X, ls, sf2);
  mean = (Ks * Kinv * ym).array() * s.scale + s.offset;
  var.resize(Xq.rows());
  for (Index q = 0; q < Xq.rows(); ++q) var[q] = sf2 - Ks.row(q).dot(Kinv * Ks.row(q).transpose());
}

// Log marginal likelihood of standardized responses from a dense log-determinant and solve.
inline double dense_mll(const Matrix& X, const Vector& y, const Vector& ls, double sf2, double sn2) {
  const Stdz s = standardize(y);
  const Vector ym = (y.array() - s.offset) / s.scale;
  Matrix K = gram(X, X, ls, sf2);
  K.diagonal().array() += sn2;
  const auto lu = K.fullPivLu();
  const double logdet = std::log(std::abs(lu.determinant()));
  const double n = static_cast<double>(X.rows());
  return -0.5 * ym.dot(lu.solve(ym)) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

// Central finite-difference gradient of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Largest violation of |a - b| <= atol + rtol |b| across entries, expressed as a ratio (<= 1 passes).
inline double tolerance_ratio(const Vector& a, const Vector& b, double rtol, double atol) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / (atol + rtol * std::abs(b[i])));
  return worst;
}

inline bool allclose(const Vector& a, const Vector& b, double rtol, double atol = 0.0) {
  return a.size() == b.size() && tolerance_ratio(a, b, rtol, atol) <= 1.0;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, eps / 2.0, d - 1) + rec(mid, hi, fmid, frm, fhi, right, eps / 2.0, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

// CRPS of N(mu, sigma^2) against y by quadrature of (F(t) - 1[t >= y])^2, split at y.
inline double crps_quadrature(double mu, double sigma, double y) {
  const double lo = std::min(mu, y) - 12.0 * sigma, hi = std::max(mu, y) + 12.0 * sigma;
  auto below = [&](double t) {
    const double F = normal_cdf((t - mu) / sigma);
    return F * F;
  };
  auto above = [&](double t) {
    const double F = normal_cdf((t - mu) / sigma);
    return (1.0 - F) * (1.0 - F);
  };
  return adaptive_simpson(below, lo, y, 1e-13) + adaptive_simpson(above, y, hi, 1e-13);
}

// Area-reduction mean and variance written directly from the ratio-of-means formulas.
struct AreaStats {
  double mean;
  double variance;
};

inline AreaStats area_reduction_formula(const std::vector<double>& a_metric, const std::vector<double>& a_base) {
  const std::size_t R = a_metric.size();
  std::vector<double> num(R), den(R);
  for (std::size_t r = 0; r < R; ++r) {
    num[r] = a_metric[r] - a_base[r];
    den[r] = a_base[r];
  }
  double mn = 0.0, md = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    mn += num[r];
    md += den[r];
  }
  mn /= static_cast<double>(R);
  md /= static_cast<double>(R);
  double vn = 0.0, vd = 0.0, cnd = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    vn += (num[r] - mn) * (num[r] - mn);
    vd += (den[r] - md) * (den[r] - md);
    cnd += (num[r] - mn) * (den[r] - md);
  }
  const double q = static_cast<double>(R - 1);
  vn /= q;
  vd /= q;
  cnd /= q;
  const double var = (vn / (md * md) + mn * mn * vd / std::pow(md, 4) - 2.0 * mn * cnd / std::pow(md, 3)) /
                     static_cast<double>(R);
  return {mn / md, var};
}

inline double trapezoid(const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) s += 0.5 * (c[i - 1] + c[i]);
  return s;
}

// Random points in [0,1]^D with no duplicate rows.
inline Matrix random_points(warpal::Rng& rng, Index n, int d) {
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
  return X;
}

}  // namespace oracle
