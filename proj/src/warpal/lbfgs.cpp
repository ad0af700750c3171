#include "warpal/lbfgs.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <cmath>
#include <deque>
#include <limits>

namespace warpal {

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr double kTolChange = 1e-12;

double cubic_interpolate(double x1, double f1, double g1, double x2, double f2, double g2,
                         std::optional<std::pair<double, double>> bounds = std::nullopt) {
  const auto [lo, hi] = bounds ? *bounds : std::pair<double, double>(std::minmax(x1, x2));
  const double mid = 0.5 * (lo + hi);
  if (!std::isfinite(f1) || !std::isfinite(f2) || !std::isfinite(g1) || !std::isfinite(g2)) return mid;
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_sq = d1 * d1 - g1 * g2;
  if (d2_sq < 0.0) return mid;
  const double d2 = std::sqrt(d2_sq);
  const double pos = x1 <= x2 ? x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
                              : x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
  if (!std::isfinite(pos)) return mid;
  return std::min(std::max(pos, lo), hi);
}

class Problem {
 public:
  Problem(const Objective& obj, const LbfgsOptions& opt) : obj_(obj), opt_(opt) {}

  [[nodiscard]] Vector project(Vector x) const {
    if (opt_.lower) x = x.cwiseMax(*opt_.lower);
    if (opt_.upper) x = x.cwiseMin(*opt_.upper);
    return x;
  }

  // Gradient with components that push outward at an active bound removed.
  [[nodiscard]] Vector projected_gradient(const Vector& x, const Vector& g) const {
    Vector pg = g;
    for (Index i = 0; i < x.size(); ++i) {
      if (opt_.lower && x[i] <= (*opt_.lower)[i] && g[i] > 0.0) pg[i] = 0.0;
      if (opt_.upper && x[i] >= (*opt_.upper)[i] && g[i] < 0.0) pg[i] = 0.0;
    }
    return pg;
  }

  void mask_direction(const Vector& x, Vector& d) const {
    for (Index i = 0; i < x.size(); ++i) {
      if (opt_.lower && x[i] <= (*opt_.lower)[i] && d[i] < 0.0) d[i] = 0.0;
      if (opt_.upper && x[i] >= (*opt_.upper)[i] && d[i] > 0.0) d[i] = 0.0;
    }
  }

  struct Point {
    double t = 0.0;
    double f = 0.0;
    Vector g;
    double gtd = 0.0;
  };

  // Evaluates f(P(x + t d)) and its one-sided directional derivative along d.
  Point eval(const Vector& x, const Vector& d, double t) {
    Point p;
    p.t = t;
    const Vector raw = x + t * d;
    const Vector xt = project(raw);
    p.g.resize(x.size());
    p.f = obj_(xt, p.g);
    ++evaluations;
    if (!std::isfinite(p.f) || !p.g.allFinite()) {
      p.f = std::numeric_limits<double>::infinity();
      p.gtd = std::numeric_limits<double>::quiet_NaN();
      return p;
    }
    double gtd = 0.0;
    for (Index i = 0; i < x.size(); ++i)
      if (xt[i] == raw[i]) gtd += p.g[i] * d[i];
    p.gtd = gtd;
    return p;
  }

  Point strong_wolfe(const Vector& x, double t, const Vector& d, double f, const Vector& g, double gtd) {
    const double d_norm = d.cwiseAbs().maxCoeff();
    Point cur = eval(x, d, t);
    Point prev{0.0, f, g, gtd};
    int ls_iter = 0;
    bool done = false;
    std::array<Point, 2> bracket;
    int nbracket = 0;

    while (ls_iter < opt_.max_line_search) {
      if (cur.f > f + kC1 * cur.t * gtd || (ls_iter > 1 && cur.f >= prev.f)) {
        bracket = {prev, cur};
        nbracket = 2;
        break;
      }
      if (std::abs(cur.gtd) <= -kC2 * gtd) {
        bracket[0] = cur;
        nbracket = 1;
        done = true;
        break;
      }
      if (cur.gtd >= 0.0) {
        bracket = {prev, cur};
        nbracket = 2;
        break;
      }
      const double min_step = cur.t + 0.01 * (cur.t - prev.t);
      const double max_step = cur.t * 10.0;
      const double next_t =
          cubic_interpolate(prev.t, prev.f, prev.gtd, cur.t, cur.f, cur.gtd, std::make_pair(min_step, max_step));
      prev = cur;
      cur = eval(x, d, next_t);
      ++ls_iter;
    }
    if (nbracket == 0) {
      bracket = {Point{0.0, f, g, gtd}, cur};
      nbracket = 2;
    }

    bool insufficient_progress = false;
    auto order = [&] { return bracket[0].f <= bracket[1].f ? std::pair{0, 1} : std::pair{1, 0}; };
    auto [low, high] = nbracket == 2 ? order() : std::pair{0, 0};
    while (!done && nbracket == 2 && ls_iter < opt_.max_line_search) {
      if (std::abs(bracket[1].t - bracket[0].t) * d_norm < kTolChange) break;
      double tz = cubic_interpolate(bracket[0].t, bracket[0].f, bracket[0].gtd, bracket[1].t, bracket[1].f,
                                    bracket[1].gtd);
      const double bmax = std::max(bracket[0].t, bracket[1].t);
      const double bmin = std::min(bracket[0].t, bracket[1].t);
      const double eps = 0.1 * (bmax - bmin);
      if (std::min(bmax - tz, tz - bmin) < eps) {
        if (insufficient_progress || tz >= bmax || tz <= bmin) {
          tz = std::abs(tz - bmax) < std::abs(tz - bmin) ? bmax - eps : bmin + eps;
          insufficient_progress = false;
        } else {
          insufficient_progress = true;
        }
      } else {
        insufficient_progress = false;
      }
      Point p = eval(x, d, tz);
      ++ls_iter;
      if (p.f > f + kC1 * p.t * gtd || p.f >= bracket[low].f) {
        bracket[high] = p;
        std::tie(low, high) = order();
      } else {
        if (std::abs(p.gtd) <= -kC2 * gtd) {
          done = true;
        } else if (p.gtd * (bracket[high].t - bracket[low].t) >= 0.0) {
          bracket[high] = bracket[low];
        }
        bracket[low] = p;
      }
    }
    return bracket[low];
  }

  int evaluations = 0;

 private:
  const Objective& obj_;
  const LbfgsOptions& opt_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, Vector x0, const LbfgsOptions& options) {
  Problem problem(objective, options);
  LbfgsResult res;
  res.x = problem.project(std::move(x0));
  res.grad.resize(res.x.size());
  res.f = objective(res.x, res.grad);
  res.initial_f = res.f;
  problem.evaluations = 1;
  if (!std::isfinite(res.f) || !res.grad.allFinite()) {
    res.status = LbfgsStatus::non_finite_start;
    res.evaluations = problem.evaluations;
    return res;
  }

  std::deque<Vector> S, Y;
  std::deque<double> rho;
  auto converged_grad = [&] {
    return problem.projected_gradient(res.x, res.grad).cwiseAbs().maxCoeff() <= options.grad_tol;
  };
  if (res.x.size() == 0 || converged_grad()) {
    res.status = LbfgsStatus::converged_gradient;
    res.evaluations = problem.evaluations;
    return res;
  }

  res.status = LbfgsStatus::max_iterations;
  for (int it = 1; it <= options.max_iterations; ++it) {
    res.iterations = it;
    // Two-loop recursion.
    Vector q = -res.grad;
    std::vector<double> alpha(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * Y[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    Vector d = std::move(q);
    problem.mask_direction(res.x, d);
    double gtd = res.grad.dot(d);
    if (!(gtd < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -problem.projected_gradient(res.x, res.grad);
      gtd = res.grad.dot(d);
      if (!(gtd < 0.0)) {
        res.status = LbfgsStatus::converged_gradient;
        break;
      }
    }

    const double t0 = S.empty() ? std::min(1.0, 1.0 / res.grad.cwiseAbs().sum()) : 1.0;
    auto step = problem.strong_wolfe(res.x, t0, d, res.f, res.grad, gtd);
    if (!(step.f <= res.f) || step.t <= 0.0) {
      res.status = LbfgsStatus::line_search_failed;
      break;
    }
    const Vector raw = res.x + step.t * d;
    const Vector x_new = problem.project(raw);
    const bool projected = (x_new.array() != raw.array()).any();
    const Vector s = x_new - res.x;
    const Vector y = step.g - res.grad;
    const double sy = s.dot(y);
    if (!projected && sy > 1e-10 * y.squaredNorm() && sy > 0.0) {
      if (static_cast<int>(S.size()) == options.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
    }
    const double f_old = res.f;
    res.x = x_new;
    res.f = step.f;
    res.grad = step.g;
    if (converged_grad()) {
      res.status = LbfgsStatus::converged_gradient;
      break;
    }
    if (f_old - res.f <= options.f_tol * std::max({std::abs(f_old), std::abs(res.f), 1.0})) {
      res.status = LbfgsStatus::converged_function;
      break;
    }
  }
  res.evaluations = problem.evaluations;
  return res;
}

}  // namespace warpal
