#include "warpal/benchmarks.hpp"

#include "warpal/gp.hpp"
#include "warpal/rng.hpp"

#include <array>
#include <cmath>
#include <memory>

namespace warpal {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

constexpr std::array<double, 4> kHartmannAlpha{1.0, 1.2, 3.0, 3.2};
constexpr double kH3A[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
constexpr double kH3P[4][3] = {
    {0.3689, 0.1170, 0.2673}, {0.4699, 0.4387, 0.7470}, {0.1091, 0.8732, 0.5547}, {0.0381, 0.5743, 0.8828}};
constexpr double kH6A[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                               {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                               {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                               {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
constexpr double kH6P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                               {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                               {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                               {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

// Returns sum_i alpha_i exp(-sum_j A_ij (x_j - P_ij)^2); optionally its gradient.
double hartmann_sum(const Vector& x, double alpha_scale, Vector* grad) {
  const Index D = x.size();
  require(D == 3 || D == 4, ErrorCode::unsupported, "hartmann: only D = 3 and D = 4 are supported");
  double total = 0.0;
  if (grad) grad->setZero(D);
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (Index j = 0; j < D; ++j) {
      const double a = D == 3 ? kH3A[i][j] : kH6A[i][j];
      const double p = D == 3 ? kH3P[i][j] : kH6P[i][j];
      s += a * (x[j] - p) * (x[j] - p);
    }
    const double term = alpha_scale * kHartmannAlpha[i] * std::exp(-s);
    total += term;
    if (grad) {
      for (Index j = 0; j < D; ++j) {
        const double a = D == 3 ? kH3A[i][j] : kH6A[i][j];
        const double p = D == 3 ? kH3P[i][j] : kH6P[i][j];
        (*grad)[j] -= term * 2.0 * a * (x[j] - p);
      }
    }
  }
  return total;
}

Vector constant(int dim, double v) { return Vector::Constant(dim, v); }

}  // namespace

double smooth_box(const Vector& x, double k, double b_start, std::optional<double> b_end) {
  double f = 1.0;
  for (Index i = 0; i < x.size(); ++i) {
    f *= sigmoid(k * (x[i] - b_start));
    if (b_end) f *= 1.0 - sigmoid(k * (x[i] - *b_end));
  }
  return f;
}

Vector smooth_box_grad(const Vector& x, double k, double b_start, std::optional<double> b_end) {
  const double f = smooth_box(x, k, b_start, b_end);
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    double dlog = k * (1.0 - sigmoid(k * (x[i] - b_start)));
    if (b_end) dlog -= k * sigmoid(k * (x[i] - *b_end));
    g[i] = f * dlog;
  }
  return g;
}

double grlee08(const Vector& x) { return x[0] * std::exp(-x[0] * x[0] - x[1] * x[1]); }

Vector grlee08_grad(const Vector& x) {
  const double e = std::exp(-x[0] * x[0] - x[1] * x[1]);
  Vector g(2);
  g << (1.0 - 2.0 * x[0] * x[0]) * e, -2.0 * x[0] * x[1] * e;
  return g;
}

double peaks(const Vector& v) {
  const double x = v[0], y = v[1];
  return 3.0 * (1.0 - x) * (1.0 - x) * std::exp(-x * x - (y + 1.0) * (y + 1.0)) -
         10.0 * (x / 5.0 - x * x * x - std::pow(y, 5)) * std::exp(-x * x - y * y) -
         std::exp(-(x + 1.0) * (x + 1.0) - y * y) / 3.0;
}

Vector peaks_grad(const Vector& v) {
  const double x = v[0], y = v[1];
  const double e1 = std::exp(-x * x - (y + 1.0) * (y + 1.0));
  const double e2 = std::exp(-x * x - y * y);
  const double e3 = std::exp(-(x + 1.0) * (x + 1.0) - y * y);
  const double q = x / 5.0 - x * x * x - std::pow(y, 5);
  Vector g(2);
  g[0] = 3.0 * (-2.0 * (1.0 - x) - 2.0 * x * (1.0 - x) * (1.0 - x)) * e1 -
         10.0 * ((0.2 - 3.0 * x * x) - 2.0 * x * q) * e2 + (2.0 / 3.0) * (x + 1.0) * e3;
  g[1] = -6.0 * (1.0 - x) * (1.0 - x) * (y + 1.0) * e1 - 10.0 * (-5.0 * std::pow(y, 4) - 2.0 * y * q) * e2 +
         (2.0 / 3.0) * y * e3;
  return g;
}

double hartmann(const Vector& x, double alpha_scale) {
  const double s = hartmann_sum(x, alpha_scale, nullptr);
  return x.size() == 3 ? -s : (1.1 - s) / 0.839;
}

Vector hartmann_grad(const Vector& x, double alpha_scale) {
  Vector g;
  hartmann_sum(x, alpha_scale, &g);
  return x.size() == 3 ? Vector(-g) : Vector(-g / 0.839);
}

Benchmark smooth_box_benchmark(int dim, double k, double b_start, std::optional<double> b_end) {
  require(dim >= 1, ErrorCode::invalid_argument, "smooth_box: dimension must be >= 1");
  Benchmark b;
  b.name = "box" + std::to_string(dim);
  b.dim = dim;
  b.lower = constant(dim, -1.0);
  b.upper = constant(dim, 1.0);
  b.eval = [=](const Vector& x) { return smooth_box(x, k, b_start, b_end); };
  b.grad = [=](const Vector& x) { return smooth_box_grad(x, k, b_start, b_end); };
  b.notes = "smooth box on [-1,1]^D, k=" + std::to_string(k) + ", b_start=" + std::to_string(b_start) +
            (b_end ? ", b_end=" + std::to_string(*b_end) : ", no end point");
  return b;
}

Benchmark grlee08_benchmark() {
  Benchmark b;
  b.name = "grlee08";
  b.dim = 2;
  b.lower = constant(2, -2.0);
  b.upper = constant(2, 6.0);
  b.eval = grlee08;
  b.grad = grlee08_grad;
  b.notes = "x1 exp(-x1^2 - x2^2) on [-2,6]^2";
  return b;
}

Benchmark peaks_benchmark() {
  Benchmark b;
  b.name = "peaks";
  b.dim = 2;
  b.lower = constant(2, -3.0);
  b.upper = constant(2, 3.0);
  b.eval = peaks;
  b.grad = peaks_grad;
  b.notes = "MATLAB peaks on [-3,3]^2";
  return b;
}

Benchmark hartmann_benchmark(int dim) {
  require(dim == 3 || dim == 4, ErrorCode::unsupported, "hartmann: only D = 3 and D = 4 are supported");
  Benchmark b;
  b.name = "hartmann" + std::to_string(dim);
  b.dim = dim;
  b.lower = constant(dim, 0.0);
  b.upper = constant(dim, 1.0);
  b.eval = [](const Vector& x) { return hartmann(x); };
  b.grad = [](const Vector& x) { return hartmann_grad(x); };
  b.notes = dim == 3 ? "Hartmann-3, standard constants"
                     : "Hartmann-4: first four Hartmann-6 columns, (1.1 - sum)/0.839";
  return b;
}

Benchmark gp_sample_benchmark(std::uint64_t seed, int dim, const GPHyperparams& hp) {
  require(dim >= 1, ErrorCode::invalid_argument, "gp_sample: dimension must be >= 1");
  require(hp.dim() == dim, ErrorCode::shape, "gp_sample: hyperparameter dimension mismatch");
  hp.validate();
  // Tensor grid with roughly 900 nodes.
  const int per = std::max(2, static_cast<int>(std::lround(std::pow(900.0, 1.0 / dim))));
  Index total = 1;
  for (int d = 0; d < dim; ++d) total *= per;
  Matrix G(total, dim);
  for (Index i = 0; i < total; ++i) {
    Index rem = i;
    for (int d = 0; d < dim; ++d) {
      G(i, d) = static_cast<double>(rem % per) / (per - 1);
      rem /= per;
    }
  }
  GPHyperparams prior = hp;
  const auto chol = robust_cholesky(kernel_matrix(G, G, prior));
  Rng rng(seed);
  Vector z(total);
  for (Index i = 0; i < total; ++i) z[i] = rng.normal();
  const Vector draw = chol.llt.matrixL() * z;

  GPHyperparams interp = hp;
  interp.noise_variance = 1e-10 * hp.signal_variance;
  auto state = std::make_shared<GPState>(GPState::condition(Dataset(G, draw), interp));
  Benchmark b;
  b.name = "gpsample";
  b.dim = dim;
  b.lower = constant(dim, 0.0);
  b.upper = constant(dim, 1.0);
  b.eval = [state](const Vector& x) { return state->posterior(x).mean; };
  b.grad = [state](const Vector& x) { return state->posterior_mean_grad(x); };
  b.crps_observation = true;
  b.notes = "Matern 5/2 prior draw, seed " + std::to_string(seed) + ", grid " + std::to_string(per) + "^" +
            std::to_string(dim);
  return b;
}

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"grlee08", "peaks", "box2", "box3", "hartmann3", "hartmann4", "gpsample"};
  return names;
}

Benchmark make_benchmark(const std::string& name) {
  if (name == "grlee08") return grlee08_benchmark();
  if (name == "peaks") return peaks_benchmark();
  if (name == "box2") return smooth_box_benchmark(2);
  if (name == "box3") return smooth_box_benchmark(3);
  if (name == "hartmann3") return hartmann_benchmark(3);
  if (name == "hartmann4") return hartmann_benchmark(4);
  if (name == "gpsample") {
    GPHyperparams hp;
    hp.lengthscales = Vector::Constant(2, 0.2);
    hp.signal_variance = 1.0;
    hp.noise_variance = 1e-6;
    return gp_sample_benchmark(0, 2, hp);
  }
  fail(ErrorCode::not_found, "unknown benchmark '" + name + "'");
}

Vector to_natural(const Benchmark& b, const Vector& u) {
  return (b.lower.array() + u.array() * (b.upper - b.lower).array()).matrix();
}

Vector to_unit(const Benchmark& b, const Vector& x) {
  return ((x - b.lower).array() / (b.upper - b.lower).array()).matrix();
}

Oracle rescale(const Benchmark& benchmark) {
  Oracle o;
  o.name = benchmark.name;
  o.dim = benchmark.dim;
  o.crps_observation = benchmark.crps_observation;
  const Vector lo = benchmark.lower;
  const Vector span = benchmark.upper - benchmark.lower;
  o.eval = [f = benchmark.eval, lo, span](const Vector& u) {
    return f((lo.array() + u.array() * span.array()).matrix());
  };
  if (benchmark.grad) {
    o.grad = [g = benchmark.grad, lo, span](const Vector& u) {
      return Vector(g((lo.array() + u.array() * span.array()).matrix()).array() * span.array());
    };
  }
  return o;
}

}  // namespace warpal
