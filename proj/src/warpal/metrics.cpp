#include "warpal/metrics.hpp"

#include "warpal/rng.hpp"
#include "warpal/sampling.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace warpal {

EvalGrid make_eval_grid(const Oracle& oracle, Index num_points, double noise_sd) {
  require(num_points >= 1, ErrorCode::invalid_argument, "eval grid: need at least one point");
  EvalGrid g;
  g.X = sobol_points(num_points, oracle.dim, derive_seed(0, "eval_grid/" + oracle.name));
  g.f_clean.resize(num_points);
  g.grad.resize(num_points, oracle.dim);
  for (Index i = 0; i < num_points; ++i) {
    const Vector x = g.X.row(i).transpose();
    g.f_clean[i] = oracle.eval(x);
    if (oracle.grad) {
      g.grad.row(i) = oracle.grad(x).transpose();
    } else {
      // Central differences, one-sided at the faces.
      for (int d = 0; d < oracle.dim; ++d) {
        const double h = 1e-6;
        Vector a = x, b = x;
        a[d] = std::min(1.0, x[d] + h);
        b[d] = std::max(0.0, x[d] - h);
        g.grad(i, d) = (oracle.eval(a) - oracle.eval(b)) / (a[d] - b[d]);
      }
    }
  }
  g.observation = oracle.crps_observation;
  g.targets = g.f_clean;
  if (g.observation && noise_sd > 0.0) {
    Rng rng(derive_seed(0, "eval_noise/" + oracle.name));
    for (Index i = 0; i < num_points; ++i) g.targets[i] += noise_sd * rng.normal();
  }
  return g;
}

double mse(const GPState& state, const EvalGrid& grid) {
  Vector mean, var;
  state.posterior(grid.X, mean, var);
  return (mean - grid.f_clean).squaredNorm() / static_cast<double>(grid.X.rows());
}

double crps_gaussian(double mu, double sigma, double y) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::domain, "crps: sigma must be positive");
  const double z = (y - mu) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

double crps(const GPState& state, const EvalGrid& grid) {
  Vector mean, var;
  state.posterior(grid.X, mean, var);
  const double scale = state.standardization().scale;
  const double extra = grid.observation ? state.hyperparams().noise_variance : 0.0;
  double total = 0.0;
  for (Index i = 0; i < mean.size(); ++i) {
    const double sigma = std::sqrt(var[i] + extra) * scale;
    // A collapsed predictive scores the absolute error, the sigma -> 0 limit.
    total += sigma > 0.0 ? crps_gaussian(mean[i], sigma, grid.targets[i]) : std::abs(grid.targets[i] - mean[i]);
  }
  return total / static_cast<double>(mean.size());
}

double mean_derivative_error(const GPState& state, const EvalGrid& grid) {
  double total = 0.0;
  for (Index i = 0; i < grid.X.rows(); ++i) {
    const Vector g = state.posterior_mean_grad(grid.X.row(i).transpose());
    total += (g - grid.grad.row(i).transpose()).squaredNorm();
  }
  return total / static_cast<double>(grid.X.rows() * grid.X.cols());
}

double auc(std::span<const double> curve) {
  require(curve.size() >= 2, ErrorCode::invalid_argument, "auc: need at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) area += 0.5 * (curve[i - 1] + curve[i]);
  return area;
}

AreaReduction area_reduction(const CurveSet& metric, const CurveSet& baseline) {
  require(metric.rows() == baseline.rows() && metric.rows() >= 1, ErrorCode::shape,
          "area_reduction: curve sets must pair the same runs");
  require(metric.cols() == baseline.cols(), ErrorCode::shape, "area_reduction: curve lengths differ");
  const Index R = metric.rows();
  Vector num(R), den(R);
  for (Index r = 0; r < R; ++r) {
    const Vector m = metric.row(r).transpose();
    const Vector b = baseline.row(r).transpose();
    den[r] = auc({b.data(), static_cast<std::size_t>(b.size())});
    num[r] = auc({m.data(), static_cast<std::size_t>(m.size())}) - den[r];
  }
  const double mu_n = num.mean();
  const double mu_d = den.mean();
  require(mu_d != 0.0, ErrorCode::numeric, "area_reduction: baseline mean area is zero");
  AreaReduction out;
  out.mean = mu_n / mu_d;
  if (R < 2) {
    out.variance = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double rm1 = static_cast<double>(R - 1);
  const double var_n = (num.array() - mu_n).square().sum() / rm1;
  const double var_d = (den.array() - mu_d).square().sum() / rm1;
  const double cov_nd = ((num.array() - mu_n) * (den.array() - mu_d)).sum() / rm1;
  out.variance = (var_n / (mu_d * mu_d) + mu_n * mu_n * var_d / std::pow(mu_d, 4) -
                  2.0 * mu_n * cov_nd / std::pow(mu_d, 3)) /
                 static_cast<double>(R);
  return out;
}

CurveSet lower_bound_shift(const CurveSet& curves, double best_value) { return curves.array() - best_value; }

}  // namespace warpal
