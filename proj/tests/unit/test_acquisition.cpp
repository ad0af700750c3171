#include <doctest.h>

#include "oracles.hpp"
#include "warpal/acquisition.hpp"
#include "warpal/gp.hpp"
#include "warpal/rng.hpp"

#include <cmath>

using namespace warpal;

namespace {

GPState state_on(const Matrix& X, const Vector& y, double ls, double sf2 = 1.0, double sn2 = 0.01) {
  GPHyperparams hp = GPHyperparams::defaults(static_cast<int>(X.cols()));
  hp.lengthscales.setConstant(ls);
  hp.signal_variance = sf2;
  hp.noise_variance = sn2;
  return GPState::condition(Dataset(X, y), hp);
}

Matrix column(std::initializer_list<double> v) {
  Matrix X(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double e : v) X(i++, 0) = e;
  return X;
}

}  // namespace

TEST_CASE("information gain closed-form points") {
  // Tiny lengthscale: the query at 1 is independent of the datum at 0, so s2 = signal variance.
  const GPState far = state_on(column({0.0}), Vector::Constant(1, 0.3), 1e-3, 0.1, 0.1);
  CHECK(eig(far, Vector::Constant(1, 1.0)) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));

  // At a single datum the latent variance is sf2 sn2 / (sf2 + sn2).
  const GPState at = state_on(column({0.4}), Vector::Constant(1, 0.3), 0.3, 2.0, 0.5);
  CHECK(eig(at, Vector::Constant(1, 0.4)) == doctest::Approx(0.5 * std::log1p(2.0 / 2.5)).epsilon(1e-14));

  // A dense cluster of observations drives the variance, and the gain, towards zero.
  Matrix cluster(200, 1);
  for (Index i = 0; i < 200; ++i) cluster(i, 0) = 0.4 + 1e-6 * static_cast<double>(i);
  const GPState rep = state_on(cluster, Vector::Zero(200), 0.3, 1.0, 1e-4);
  CHECK(eig(rep, Vector::Constant(1, 0.4)) < 1e-2);
}

TEST_CASE("information gain matches the dense posterior variance") {
  Rng rng(1);
  const Matrix X = oracle::random_points(rng, 12, 2);
  const Vector y = X.col(0).array().sin();
  const GPState st = state_on(X, y, 0.25, 1.4, 0.03);
  const Matrix Q = oracle::random_points(rng, 40, 2);
  Vector mean, var;
  oracle::dense_posterior(X, y, Vector::Constant(2, 0.25), 1.4, 0.03, Q, mean, var);
  for (Index q = 0; q < Q.rows(); ++q)
    CHECK(eig(st, Q.row(q).transpose()) == doctest::Approx(0.5 * std::log1p(var[q] / 0.03)).epsilon(1e-9));
}

TEST_CASE("information gain gradient matches finite differences") {
  Rng rng(2);
  const Matrix X = oracle::random_points(rng, 9, 3);
  const GPState st = state_on(X, Vector::Zero(9), 0.4);
  for (int t = 0; t < 20; ++t) {
    const Vector x = (0.05 + 0.9 * oracle::random_points(rng, 1, 3).array()).matrix().transpose();
    Vector g;
    eig(st, x, &g);
    const Vector fd = oracle::fd_gradient([&](const Vector& q) { return eig(st, q); }, x, 1e-6);
    CHECK(oracle::allclose(g, fd, 1e-5, 1e-9));
  }
}

TEST_CASE("information gain ranks a grid like the posterior variance") {
  Rng rng(3);
  const Matrix X = oracle::random_points(rng, 8, 2);
  const GPState st = state_on(X, Vector::Ones(8), 0.2);
  const Matrix G = oracle::random_points(rng, 2000, 2);
  Vector mean, var;
  st.posterior(G, mean, var);
  Index best_var = 0, best_eig = 0;
  double top = -1.0;
  for (Index i = 0; i < G.rows(); ++i) {
    const double e = eig(st, G.row(i).transpose());
    if (e > top) {
      top = e;
      best_eig = i;
    }
    if (var[i] > var[best_var]) best_var = i;
  }
  CHECK(best_eig == best_var);
}

TEST_CASE("information gain ignores the observed responses") {
  Rng rng(4);
  const Matrix X = oracle::random_points(rng, 10, 2);
  Vector y1(10), y2(10);
  for (Index i = 0; i < 10; ++i) {
    y1[i] = rng.normal();
    y2[i] = 100.0 * rng.normal();
  }
  const GPState a = state_on(X, y1, 0.3), b = state_on(X, y2, 0.3);
  for (int t = 0; t < 10; ++t) {
    const Vector x = oracle::random_points(rng, 1, 2).transpose();
    CHECK(eig(a, x) == eig(b, x));
  }
  Rng ra(9), rb(9);
  const Proposal pa = propose(a, {}, ra), pb = propose(b, {}, rb);
  CHECK(pa.x == pb.x);
}

TEST_CASE("information gain rejects bad queries") {
  const GPState st = state_on(column({0.5}), Vector::Zero(1), 0.3);
  CHECK_THROWS_AS(eig(st, Vector::Constant(1, 1.5)), Error);
  CHECK_THROWS_AS(eig(st, Vector::Zero(2)), Error);
}

TEST_CASE("multi-start maximizer") {
  const ScalarField quad = [](const Vector& x, Vector* g) {
    if (g) *g = -2.0 * (x.array() - 0.3).matrix();
    return -(x.array() - 0.3).square().sum();
  };
  Matrix X0(3, 2);
  X0 << 0.0, 1.0, 0.9, 0.9, 0.5, 0.1;
  const MaximizeResult r = lbfgs_maximize(quad, X0, 100);
  CHECK(std::abs(r.x[0] - 0.3) < 1e-6);
  CHECK(std::abs(r.x[1] - 0.3) < 1e-6);
  CHECK_FALSE(r.from_initial);

  const ScalarField flat = [](const Vector& x, Vector* g) {
    if (g) g->setZero(x.size());
    return 1.0;
  };
  const MaximizeResult f = lbfgs_maximize(flat, X0, 100);
  CHECK(f.x == X0.row(0).transpose());
  CHECK(f.candidate == 0);
  CHECK(f.from_initial);

  // The peak at 1 lies outside the box interior; projection stops at the bound.
  const ScalarField ramp = [](const Vector& x, Vector* g) {
    if (g) *g = Vector::Ones(x.size());
    return x.sum();
  };
  const MaximizeResult b = lbfgs_maximize(ramp, X0, 100);
  CHECK(b.x == Vector::Ones(2));

  CHECK_THROWS_AS(lbfgs_maximize(quad, Matrix(0, 2), 10), Error);
  CHECK_THROWS_AS(lbfgs_maximize(quad, X0, 0), Error);
}

TEST_CASE("proposals reach the grid maximum in a 1-D gap") {
  const GPState st = state_on(column({0.05, 0.15, 0.2, 0.8, 0.85, 0.95}), Vector::Zero(6), 0.15);
  double best = -1.0, best_x = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = i / 10000.0;
    const double e = eig(st, Vector::Constant(1, x));
    if (e > best) {
      best = e;
      best_x = x;
    }
  }
  Rng rng(5);
  AcquisitionConfig cfg;
  cfg.n_candidates = 20;
  const Proposal p = propose(st, cfg, rng);
  CHECK(std::abs(p.x[0] - best_x) < 1e-3);
  CHECK(p.value >= best - 1e-9);
  CHECK(p.jitter_attempts == 0);
}

TEST_CASE("a symmetric pair of data is split at the midpoint") {
  const GPState st = state_on(column({0.0, 1.0}), Vector::Zero(2), 0.3);
  Rng rng(6);
  const Proposal p = propose(st, {}, rng);
  CHECK(std::abs(p.x[0] - 0.5) < 1e-4);
}

TEST_CASE("proposals are deterministic in the generator state") {
  Rng data_rng(7);
  const Matrix X = oracle::random_points(data_rng, 10, 2);
  const GPState st = state_on(X, Vector::Zero(10), 0.3);
  Rng a(11), b(11);
  const Proposal pa = propose(st, {}, a), pb = propose(st, {}, b);
  CHECK(pa.x == pb.x);
  CHECK(pa.value == pb.value);
  CHECK((pa.x.array() >= 0.0).all());
  CHECK((pa.x.array() <= 1.0).all());
}

TEST_CASE("a proposal that cannot escape the data is an error") {
  const GPState st = state_on(column({0.5}), Vector::Zero(1), 0.3);
  AcquisitionConfig cfg;
  cfg.dedupe_radius = 10.0;
  Rng rng(8);
  CHECK_THROWS_AS(propose(st, cfg, rng), Error);
  cfg = {};
  cfg.n_candidates = 0;
  CHECK_THROWS_AS(propose(st, cfg, rng), Error);
}
