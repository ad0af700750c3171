#include <doctest.h>

#include "oracles.hpp"
#include "warpal/rng.hpp"
#include "warpal/rqs.hpp"
#include "warpal/warp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace warpal;

namespace {

Vector random_raw(Rng& rng, int bins, double scale) {
  Vector raw(rqs_raw_size(bins));
  for (Index i = 0; i < raw.size(); ++i) raw[i] = scale * rng.normal();
  return raw;
}

// A C-RQS warp with every parameter perturbed, standing in for a trained one.
std::unique_ptr<Warp> scrambled_crqs(int dim, std::uint64_t seed, double scale = 0.3, CrqsConfig cfg = {}) {
  auto w = make_warp(WarpKind::crqs, dim, cfg, seed);
  Rng rng(seed + 1000);
  Vector p = w->params();
  for (Index i = 0; i < p.size(); ++i) p[i] += scale * rng.normal();
  w->set_params(p);
  return w;
}

Vector forward1(const Warp& w, const Vector& x) { return w.forward(x.transpose()).row(0).transpose(); }

// Independent normalize-then-floor reimplementation of the bin parameterization.
RqsBins reference_bins(const Vector& raw, int k) {
  auto softmax = [](const Vector& v) {
    const Vector e = (v.array() - v.maxCoeff()).exp();
    return Vector(e / e.sum());
  };
  RqsBins b;
  b.widths = kMinBinWidth + (1.0 - kMinBinWidth * k) * softmax(raw.head(k)).array();
  b.heights = kMinBinHeight + (1.0 - kMinBinHeight * k) * softmax(raw.segment(k, k)).array();
  const double shift = std::log(std::expm1(1.0 - kMinDerivative));
  b.derivs.resize(k + 1);
  for (int i = 0; i <= k; ++i) b.derivs[i] = kMinDerivative + std::log1p(std::exp(raw[2 * k + i] + shift));
  return b;
}

}  // namespace

TEST_CASE("Kumaraswamy closed forms and pinned endpoints") {
  KumaraswamyWarp id(1);
  CHECK(forward1(id, Vector::Constant(1, 0.3))[0] == doctest::Approx(0.3).epsilon(1e-15));

  KumaraswamyWarp w(Vector::Constant(1, 2.0), Vector::Constant(1, 1.0));
  CHECK(forward1(w, Vector::Constant(1, 0.5))[0] == doctest::Approx(0.25).epsilon(1e-15));

  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    KumaraswamyWarp r(Vector::Constant(2, std::exp(rng.normal())), Vector::Constant(2, std::exp(rng.normal())));
    CHECK(forward1(r, Vector::Zero(2)) == Vector::Zero(2));
    CHECK(forward1(r, Vector::Ones(2)) == Vector::Ones(2));
  }
}

TEST_CASE("raw_to_bins") {
  const RqsBins zero = raw_to_bins(std::vector<double>(rqs_raw_size(8), 0.0), 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(zero.widths[i] == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(zero.heights[i] == doctest::Approx(0.125).epsilon(1e-15));
  }
  for (int i = 0; i <= 8; ++i) CHECK(zero.derivs[i] == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const int k = 1 + static_cast<int>(rng.below(12));
    const Vector raw = random_raw(rng, k, 3.0);
    const RqsBins b = raw_to_bins({raw.data(), static_cast<std::size_t>(raw.size())}, k);
    CHECK(std::abs(b.widths.sum() - 1.0) <= 1e-9);
    CHECK(std::abs(b.heights.sum() - 1.0) <= 1e-9);
    CHECK((b.widths.array() >= kMinBinWidth).all());
    CHECK((b.heights.array() >= kMinBinHeight).all());
    CHECK((b.derivs.array() >= kMinDerivative).all());
    const RqsBins ref = reference_bins(raw, k);
    CHECK(oracle::allclose(b.widths, ref.widths, 1e-13));
    CHECK(oracle::allclose(b.heights, ref.heights, 1e-13));
    CHECK(oracle::allclose(b.derivs, ref.derivs, 1e-13));
  }
}

TEST_CASE("identity spline") {
  const RqsBins b = raw_to_bins(std::vector<double>(rqs_raw_size(8), 0.0), 8);
  for (double x : {0.0, 0.01, 0.3, 0.5, 0.77, 1.0}) {
    const RqsValue v = rqs_forward(x, b);
    CHECK(v.y == doctest::Approx(x).epsilon(1e-14));
    CHECK(v.dydx == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("random splines are monotone, pinned, and have correct derivatives") {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const int k = 8;
    const Vector raw = random_raw(rng, k, 1.5);
    const RqsBins b = raw_to_bins({raw.data(), static_cast<std::size_t>(raw.size())}, k);
    CHECK(rqs_forward(0.0, b).y == 0.0);
    CHECK(rqs_forward(1.0, b).y == 1.0);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = rng.uniform();
    std::sort(xs.begin(), xs.end());
    double prev = -1.0;
    for (double x : xs) {
      const RqsValue v = rqs_forward(x, b);
      CHECK_UNARY(v.y > prev);
      CHECK_UNARY(v.dydx > 0.0);
      prev = v.y;
    }
    for (int i = 0; i < 50; ++i) {
      const double x = rng.uniform(1e-3, 1.0 - 1e-3);
      const double h = 1e-6;
      const double fd = (rqs_forward(x + h, b).y - rqs_forward(x - h, b).y) / (2.0 * h);
      CHECK(rqs_forward(x, b).dydx == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("spline continuity across knots") {
  Rng rng(4);
  const Vector raw = random_raw(rng, 6, 1.0);
  const RqsBins b = raw_to_bins({raw.data(), static_cast<std::size_t>(raw.size())}, 6);
  double knot = 0.0;
  for (int j = 0; j < 5; ++j) {
    knot += b.widths[j];
    const RqsValue lo = rqs_forward(knot - 1e-10, b), hi = rqs_forward(knot + 1e-10, b);
    CHECK(std::abs(lo.y - hi.y) < 1e-8);
    CHECK(std::abs(lo.dydx - hi.dydx) < 1e-6);
    CHECK(lo.dydx == doctest::Approx(b.derivs[j + 1]).epsilon(1e-6));
  }
}

TEST_CASE("spline domain handling") {
  const RqsBins b = raw_to_bins(std::vector<double>(rqs_raw_size(4), 0.0), 4);
  CHECK(rqs_forward(-1e-13, b).y == 0.0);
  CHECK(rqs_forward(1.0 + 1e-13, b).y == 1.0);
  CHECK_THROWS_AS(rqs_forward(-1e-9, b), Error);
  CHECK_THROWS_AS(rqs_forward(1.0 + 1e-9, b), Error);
}

TEST_CASE("raw spline evaluation and its parameter gradient") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const int k = 8;
    const Vector raw = random_raw(rng, k, 1.0);
    const double x = rng.uniform(0.01, 0.99);
    Vector g(rqs_raw_size(k));
    const RqsValue v = rqs_forward_raw(x, {raw.data(), std::size_t(raw.size())}, k, {g.data(), std::size_t(g.size())});
    const RqsValue ref = rqs_forward(x, raw_to_bins({raw.data(), std::size_t(raw.size())}, k));
    CHECK(v.y == doctest::Approx(ref.y).epsilon(1e-14));
    CHECK(v.dydx == doctest::Approx(ref.dydx).epsilon(1e-12));
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& r) { return rqs_forward_raw(x, {r.data(), std::size_t(r.size())}, k, {}).y; }, raw, 1e-6);
    CHECK(oracle::allclose(g, fd, 1e-5, 1e-9));
  }
}

TEST_CASE("fresh C-RQS warps are the identity") {
  Rng rng(6);
  for (int d : {1, 2, 3, 5}) {
    const auto w = make_warp(WarpKind::crqs, d, {}, 99);
    const Matrix X = oracle::random_points(rng, 1000, d);
    CHECK((w->forward(X) - X).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("coupling lets every output depend on every input") {
  CrqsConfig cfg;
  cfg.layers = 2;
  const auto w = scrambled_crqs(2, 7, 0.5, cfg);
  const Vector x = Vector::Constant(2, 0.4);
  const Vector base = forward1(*w, x);
  for (int d = 0; d < 2; ++d) {
    Vector xp = x;
    xp[d] += 0.05;
    const Vector moved = forward1(*w, xp);
    CHECK(moved[0] != base[0]);
    CHECK(moved[1] != base[1]);
  }
}

TEST_CASE("coupling layers are strictly monotone at fixed conditioning") {
  Rng rng(8);
  for (int d : {1, 2, 3}) {
    const auto w = scrambled_crqs(d, 10 + d, 0.5);
    const auto& crqs = dynamic_cast<const CrqsWarp&>(*w);
    for (std::size_t l = 0; l < crqs.layers().size(); ++l) {
      for (int c : crqs.layers()[l].transform) {
        Matrix X(1000, d);
        const Vector cond = oracle::random_points(rng, 1, d).transpose();
        for (Index i = 0; i < 1000; ++i) {
          X.row(i) = cond.transpose();
          X(i, c) = static_cast<double>(i) / 999.0;
        }
        const Matrix Y = crqs.forward_layer(l, X);
        for (Index i = 1; i < 1000; ++i) CHECK_UNARY(Y(i, c) > Y(i - 1, c));
        CHECK(Y(0, c) == 0.0);
        CHECK(Y(999, c) == 1.0);
        for (int a : crqs.layers()[l].pass) CHECK(Y.col(a) == X.col(a));
      }
    }
  }
}

TEST_CASE("warps are injective") {
  Rng rng(9);
  const auto w = scrambled_crqs(3, 21, 0.5);
  const Matrix A = oracle::random_points(rng, 10000, 3), B = oracle::random_points(rng, 10000, 3);
  const Matrix TA = w->forward(A), TB = w->forward(B);
  for (Index i = 0; i < 10000; ++i) CHECK_UNARY((TA.row(i).array() != TB.row(i).array()).any());
  CHECK((TA.array() >= 0.0).all());
  CHECK((TA.array() <= 1.0).all());
}

TEST_CASE("corners are fixed points") {
  for (int d : {1, 2, 4}) {
    const auto w = scrambled_crqs(d, 30 + d, 0.5);
    CHECK(forward1(*w, Vector::Zero(d)) == Vector::Zero(d));
    CHECK(forward1(*w, Vector::Ones(d)) == Vector::Ones(d));
  }
}

TEST_CASE("Jacobians match finite differences") {
  Rng rng(10);
  std::vector<std::unique_ptr<Warp>> warps;
  warps.push_back(std::make_unique<KumaraswamyWarp>(Vector::Constant(2, 1.6), Vector::Constant(2, 0.7)));
  warps.push_back(make_warp(WarpKind::crqs, 2, {}, 4));
  warps.push_back(scrambled_crqs(1, 40));
  warps.push_back(scrambled_crqs(2, 41));
  warps.push_back(scrambled_crqs(3, 42, 0.2));
  for (const auto& w : warps) {
    for (int t = 0; t < 3; ++t) {
      const Vector x = (0.05 + 0.9 * oracle::random_points(rng, 1, w->dim()).array()).matrix().transpose();
      const Matrix Jx = warp_input_jacobian(*w, x);
      const Matrix Jp = warp_param_jacobian(*w, x);
      CHECK(Jx.determinant() > 0.0);
      for (int d = 0; d < w->dim(); ++d) {
        const Vector fdx = oracle::fd_gradient([&](const Vector& q) { return forward1(*w, q)[d]; }, x);
        CHECK(oracle::allclose(Jx.row(d).transpose(), fdx, 1e-4, 1e-7));
        auto copy = w->clone();
        const Vector fdp = oracle::fd_gradient(
            [&](const Vector& p) {
              copy->set_params(p);
              return forward1(*copy, x)[d];
            },
            w->params());
        CHECK(oracle::allclose(Jp.row(d).transpose(), fdp, 1e-4, 1e-7));
      }
    }
  }
}

TEST_CASE("Jacobian structure") {
  SUBCASE("identity warp") {
    const auto w = make_warp(WarpKind::identity, 3);
    CHECK(warp_input_jacobian(*w, Vector::Constant(3, 0.2)) == Matrix::Identity(3, 3));
    CHECK(warp_param_jacobian(*w, Vector::Constant(3, 0.2)).cols() == 0);
  }
  SUBCASE("pass-through coordinate of a single layer has zero parameter sensitivity") {
    CrqsConfig cfg;
    cfg.layers = 1;
    const auto w = scrambled_crqs(2, 50, 0.5, cfg);
    const auto& crqs = dynamic_cast<const CrqsWarp&>(*w);
    const int a = crqs.layers()[0].pass[0];
    const Vector x = Vector::Constant(2, 0.35);
    CHECK(warp_param_jacobian(*w, x).row(a).cwiseAbs().maxCoeff() == 0.0);
    const Matrix Jx = warp_input_jacobian(*w, x);
    CHECK(Jx(a, a) == 1.0);
    CHECK(Jx(a, 1 - a) == 0.0);
  }
  SUBCASE("D = 1 single layer equals the spline derivative") {
    CrqsConfig cfg;
    cfg.layers = 1;
    const auto w = scrambled_crqs(1, 51, 0.5, cfg);
    const Vector raw = w->params().head(rqs_raw_size(cfg.bins));
    const double x = 0.42;
    const RqsValue v = rqs_forward_raw(x, {raw.data(), std::size_t(raw.size())}, cfg.bins, {});
    CHECK(warp_input_jacobian(*w, Vector::Constant(1, x))(0, 0) == doctest::Approx(v.dydx).epsilon(1e-12));
  }
}

TEST_CASE("tape and tape-free forward passes agree bitwise") {
  Rng rng(11);
  for (int d : {1, 2, 4}) {
    const auto w = scrambled_crqs(d, 60 + d);
    const Matrix X = oracle::random_points(rng, 257, d);
    WarpTape tape;
    CHECK(w->forward(X, &tape) == w->forward(X));
  }
}

TEST_CASE("serialization round trip") {
  std::vector<std::unique_ptr<Warp>> warps;
  warps.push_back(make_warp(WarpKind::identity, 2));
  warps.push_back(std::make_unique<KumaraswamyWarp>(Vector::Constant(2, 1.3), Vector::Constant(2, 0.4)));
  warps.push_back(scrambled_crqs(3, 70));
  Rng rng(12);
  const Matrix X = oracle::random_points(rng, 50, 2);
  const Matrix X3 = oracle::random_points(rng, 50, 3);
  for (const auto& w : warps) {
    const auto back = deserialize_warp(w->serialize());
    CHECK(back->kind() == w->kind());
    CHECK(back->params() == w->params());
    const Matrix& Q = w->dim() == 3 ? X3 : X;
    CHECK(back->forward(Q) == w->forward(Q));
  }
  CHECK_THROWS_AS(deserialize_warp("{\"kind\":\"nope\"}"), Error);
  CHECK_THROWS_AS(deserialize_warp("not json"), Error);
}

TEST_CASE("warp input validation") {
  const auto w = make_warp(WarpKind::crqs, 2);
  CHECK_THROWS_AS((void)w->forward(Matrix::Zero(3, 3)), Error);
  CHECK_THROWS_AS(w->set_params(Vector::Zero(3)), Error);
  CHECK_THROWS_AS(KumaraswamyWarp(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)), Error);
  CHECK_THROWS_AS(make_warp(WarpKind::crqs, 0), Error);
  CHECK(warp_kind_from_string("kumaraswamy") == WarpKind::kumaraswamy);
  CHECK_THROWS_AS(warp_kind_from_string("spline"), Error);
}

TEST_CASE("clones are independent") {
  auto w = scrambled_crqs(2, 80);
  auto c = w->clone();
  Vector p = c->params();
  p.setZero();
  c->set_params(p);
  CHECK(w->params() != c->params());
}
