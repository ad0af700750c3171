#include <doctest.h>

#include "oracles.hpp"
#include "warpal/benchmarks.hpp"
#include "warpal/gp.hpp"
#include "warpal/metrics.hpp"
#include "warpal/rng.hpp"

#include <cmath>
#include <numbers>

using namespace warpal;

namespace {

struct Fixture {
  Matrix X;
  Vector y;
  GPHyperparams hp;
  EvalGrid grid;
};

Fixture fixture(std::uint64_t seed, Index n = 12, int d = 2) {
  Rng rng(seed);
  Fixture f;
  f.X = oracle::random_points(rng, n, d);
  f.y.resize(n);
  for (Index i = 0; i < n; ++i) f.y[i] = std::sin(4.0 * f.X(i, 0)) + f.X.row(i).sum() + 0.1 * rng.normal();
  f.hp = GPHyperparams::defaults(d);
  f.hp.lengthscales.setConstant(0.3);
  f.hp.signal_variance = 1.2;
  f.hp.noise_variance = 0.02;
  f.grid.X = oracle::random_points(rng, 200, d);
  f.grid.f_clean.resize(200);
  f.grid.grad.resize(200, d);
  for (Index i = 0; i < 200; ++i) {
    f.grid.f_clean[i] = std::sin(4.0 * f.grid.X(i, 0)) + f.grid.X.row(i).sum();
    f.grid.grad.row(i).setOnes();
    f.grid.grad(i, 0) += 4.0 * std::cos(4.0 * f.grid.X(i, 0));
  }
  f.grid.targets = f.grid.f_clean;
  return f;
}

}  // namespace

TEST_CASE("MSE") {
  Fixture f = fixture(1);
  const GPState st = GPState::condition(Dataset(f.X, f.y), f.hp);
  Vector mean, var;
  st.posterior(f.grid.X, mean, var);

  EvalGrid exact = f.grid;
  exact.f_clean = mean;
  CHECK(mse(st, exact) == 0.0);
  exact.f_clean.array() += 0.3;
  CHECK(mse(st, exact) == doctest::Approx(0.09).epsilon(1e-12));

  Vector dm, dv;
  oracle::dense_posterior(f.X, f.y, f.hp.lengthscales, f.hp.signal_variance, f.hp.noise_variance, f.grid.X, dm, dv);
  double loop = 0.0;
  for (Index i = 0; i < dm.size(); ++i) loop += (dm[i] - f.grid.f_clean[i]) * (dm[i] - f.grid.f_clean[i]);
  CHECK(mse(st, f.grid) == doctest::Approx(loop / 200.0).epsilon(1e-9));
}

TEST_CASE("Gaussian CRPS closed form") {
  CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(2.0 / std::sqrt(2.0 * std::numbers::pi) - 1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-14));
  CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(oracle::crps_quadrature(0.0, 1.0, 0.0)).epsilon(1e-6));
  CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(0.23370).epsilon(1e-4));

  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const double mu = rng.uniform(-3.0, 3.0), sigma = std::exp(rng.uniform(-3.0, 1.5)), y = rng.uniform(-4.0, 4.0);
    const double c = crps_gaussian(mu, sigma, y);
    CHECK(c == doctest::Approx(oracle::crps_quadrature(mu, sigma, y)).epsilon(1e-6));
    CHECK_UNARY(c >= 0.0);
    const double k = std::exp(rng.uniform(-2.0, 2.0));
    CHECK(crps_gaussian(k * mu, k * sigma, k * y) == doctest::Approx(k * c).epsilon(1e-12));
  }
  // Far from the mean the score approaches |y - mu| - sigma / sqrt(pi).
  CHECK(std::abs(crps_gaussian(1.0, 2.0, 41.0) / 40.0 - 1.0) < 0.03);
  CHECK(crps_gaussian(1.0, 2.0, 41.0) == doctest::Approx(40.0 - 2.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
  CHECK(crps_gaussian(1.0, 2.0, 1.0 + 40.0) / oracle::crps_quadrature(1.0, 2.0, 41.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(crps_gaussian(0.5, 1e-8, 0.5) < 1e-7);
  CHECK_THROWS_AS(crps_gaussian(0.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(crps_gaussian(0.0, -1.0, 1.0), Error);
}

TEST_CASE("grid CRPS uses the latent or observation predictive") {
  Fixture f = fixture(3);
  const GPState st = GPState::condition(Dataset(f.X, f.y), f.hp);
  Vector dm, dv;
  oracle::dense_posterior(f.X, f.y, f.hp.lengthscales, f.hp.signal_variance, f.hp.noise_variance, f.grid.X, dm, dv);
  const double scale = oracle::standardize(f.y).scale;
  for (bool observation : {false, true}) {
    EvalGrid g = f.grid;
    g.observation = observation;
    double loop = 0.0;
    for (Index i = 0; i < dm.size(); ++i) {
      const double var = dv[i] + (observation ? f.hp.noise_variance : 0.0);
      loop += oracle::crps_quadrature(dm[i], std::sqrt(var) * scale, g.targets[i]);
    }
    CHECK(crps(st, g) == doctest::Approx(loop / 200.0).epsilon(1e-6));
  }
}

TEST_CASE("mean-derivative error") {
  Fixture f = fixture(4);
  const GPState st = GPState::condition(Dataset(f.X, f.y), f.hp);
  EvalGrid matched = f.grid;
  for (Index i = 0; i < matched.X.rows(); ++i) matched.grad.row(i) = st.posterior_mean_grad(matched.X.row(i).transpose()).transpose();
  CHECK(mean_derivative_error(st, matched) == 0.0);

  double loop = 0.0;
  for (Index i = 0; i < f.grid.X.rows(); ++i) {
    const Vector x = f.grid.X.row(i).transpose();
    const Vector fd = oracle::fd_gradient([&](const Vector& q) { return st.posterior(q).mean; }, x);
    loop += (fd - f.grid.grad.row(i).transpose()).squaredNorm();
  }
  CHECK(mean_derivative_error(st, f.grid) == doctest::Approx(loop / 400.0).epsilon(1e-6));

  // Constant responses give a constant posterior mean, so the error is |s|^2 / D.
  const GPState flat = GPState::condition(Dataset(f.X, Vector::Constant(f.X.rows(), 2.5)), f.hp);
  EvalGrid slope = f.grid;
  const Vector s = (Vector(2) << 0.6, -1.7).finished();
  for (Index i = 0; i < slope.X.rows(); ++i) slope.grad.row(i) = s.transpose();
  CHECK(mean_derivative_error(flat, slope) == doctest::Approx(s.squaredNorm() / 2.0).epsilon(1e-12));
}

TEST_CASE("evaluation grids") {
  const Oracle o = rescale(grlee08_benchmark());
  const EvalGrid a = make_eval_grid(o), b = make_eval_grid(o);
  CHECK(a.X.rows() == 1024);
  CHECK(a.X == b.X);
  CHECK(a.targets == a.f_clean);
  for (Index i = 0; i < 1024; i += 50) {
    CHECK(a.f_clean[i] == o.eval(a.X.row(i).transpose()));
    CHECK(a.grad.row(i) == o.grad(a.X.row(i).transpose()).transpose());
  }
  CHECK(make_eval_grid(rescale(peaks_benchmark())).X != a.X);

  // Finite-difference gradients stand in when no analytic gradient exists.
  Oracle nograd = o;
  nograd.grad = nullptr;
  const EvalGrid c = make_eval_grid(nograd, 64);
  CHECK(oracle::allclose(c.grad.reshaped(), make_eval_grid(o, 64).grad.reshaped(), 1e-5, 1e-8));

  Oracle obs = o;
  obs.crps_observation = true;
  const EvalGrid n = make_eval_grid(obs, 64, 0.1);
  CHECK(n.observation);
  CHECK(n.targets != n.f_clean);
  CHECK(make_eval_grid(obs, 64, 0.1).targets == n.targets);
}

TEST_CASE("trapezoidal area") {
  const std::vector<double> c(7, 1.5);
  CHECK(auc(c) == 1.5 * 6.0);
  CHECK(auc(std::vector<double>{0.0, 1.0}) == 0.5);
  Rng rng(5);
  std::vector<double> r(30), s(30), mix(30);
  for (std::size_t i = 0; i < 30; ++i) {
    r[i] = rng.uniform();
    s[i] = rng.normal();
    mix[i] = 2.0 * r[i] - 3.0 * s[i];
  }
  CHECK(auc(r) == doctest::Approx(oracle::trapezoid(r)).epsilon(1e-14));
  CHECK(auc(mix) == doctest::Approx(2.0 * auc(r) - 3.0 * auc(s)).epsilon(1e-12));
  CHECK_THROWS_AS(auc(std::vector<double>{1.0}), Error);
}

TEST_CASE("area reduction") {
  Rng rng(6);
  Matrix base(5, 20);
  for (Index i = 0; i < base.size(); ++i) base.data()[i] = rng.uniform(0.5, 1.5);
  const AreaReduction same = area_reduction(base, base);
  CHECK(same.mean == 0.0);
  CHECK(same.variance == 0.0);

  const AreaReduction half = area_reduction(Matrix::Constant(4, 3, 0.5), Matrix::Constant(4, 3, 1.0));
  CHECK(half.mean == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(-100.0 * half.mean == doctest::Approx(50.0).epsilon(1e-13));
  CHECK(std::abs(half.variance) < 1e-30);
  const AreaReduction swapped = area_reduction(Matrix::Constant(4, 3, 1.0), Matrix::Constant(4, 3, 0.5));
  CHECK(swapped.mean == doctest::Approx(1.0).epsilon(1e-15));

  for (int t = 0; t < 20; ++t) {
    Matrix m(5, 20), b(5, 20);
    for (Index i = 0; i < m.size(); ++i) {
      b.data()[i] = rng.uniform(0.5, 1.5);
      m.data()[i] = b.data()[i] * rng.uniform(0.3, 1.2);
    }
    std::vector<double> am, ab;
    for (Index r = 0; r < 5; ++r) {
      std::vector<double> cm(20), cb(20);
      for (Index j = 0; j < 20; ++j) {
        cm[j] = m(r, j);
        cb[j] = b(r, j);
      }
      am.push_back(oracle::trapezoid(cm));
      ab.push_back(oracle::trapezoid(cb));
    }
    const oracle::AreaStats ref = oracle::area_reduction_formula(am, ab);
    const AreaReduction got = area_reduction(m, b);
    CHECK(got.mean == doctest::Approx(ref.mean).epsilon(1e-12));
    CHECK(got.variance == doctest::Approx(ref.variance).epsilon(1e-10));
  }

  CHECK(std::isnan(area_reduction(base.topRows(1), base.topRows(1)).variance));
  CHECK_THROWS_AS(area_reduction(base, base.topRows(4)), Error);
  CHECK_THROWS_AS(area_reduction(Matrix::Zero(3, 4), Matrix::Zero(3, 4)), Error);
}

TEST_CASE("lower-bound shift") {
  Rng rng(7);
  Matrix c(3, 10);
  for (Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();
  CHECK(lower_bound_shift(c, 0.0) == c);
  const Matrix s = lower_bound_shift(c, 0.7);
  for (Index r = 0; r < 3; ++r) {
    const Vector a = c.row(r).transpose(), b = s.row(r).transpose();
    CHECK(auc({b.data(), 10}) == doctest::Approx(auc({a.data(), 10}) - 0.7 * 9.0).epsilon(1e-12));
  }
  const Matrix z = lower_bound_shift(c, c.minCoeff());
  CHECK(z.minCoeff() == 0.0);
}
