#include "warpal/rqs.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace warpal {

namespace {

constexpr double kDomainSlack = 1e-12;

// softplus(raw + shift) + min_deriv equals 1 at raw = 0.
const double kDerivShift = std::log(std::expm1(1.0 - kMinDerivative));

double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void normalized_floor(std::span<const double> logits, double floor, Vector& out, Vector* probs) {
  const Index k = static_cast<Index>(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector p(k);
  double total = 0.0;
  for (Index i = 0; i < k; ++i) {
    p[i] = std::exp(logits[i] - mx);
    total += p[i];
  }
  p /= total;
  out = floor + (1.0 - floor * static_cast<double>(k)) * p.array();
  if (probs) *probs = std::move(p);
}

double clamp_unit(double x) {
  if (!(x >= -kDomainSlack && x <= 1.0 + kDomainSlack)) fail(ErrorCode::domain, "rqs: input outside [0,1]");
  return std::clamp(x, 0.0, 1.0);
}

// Locates the bin holding x; the last bin is closed on the right.
int find_bin(double x, const Vector& widths) {
  double edge = 0.0;
  const int k = static_cast<int>(widths.size());
  for (int b = 0; b < k - 1; ++b) {
    edge += widths[b];
    if (x < edge) return b;
  }
  return k - 1;
}

}  // namespace

RqsBins raw_to_bins(std::span<const double> raw, int bins) {
  require(bins >= 1, ErrorCode::invalid_argument, "rqs: bins must be >= 1");
  require(static_cast<int>(raw.size()) == rqs_raw_size(bins), ErrorCode::shape, "rqs: raw parameter size");
  RqsBins out;
  normalized_floor(raw.subspan(0, bins), kMinBinWidth, out.widths, nullptr);
  normalized_floor(raw.subspan(bins, bins), kMinBinHeight, out.heights, nullptr);
  out.derivs.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) out.derivs[i] = kMinDerivative + softplus(raw[2 * bins + i] + kDerivShift);
  return out;
}

RqsValue rqs_forward(double x, const RqsBins& bins) {
  x = clamp_unit(x);
  const int b = find_bin(x, bins.widths);
  double xk = 0.0, yk = 0.0;
  for (int j = 0; j < b; ++j) {
    xk += bins.widths[j];
    yk += bins.heights[j];
  }
  const double w = bins.widths[b], h = bins.heights[b];
  const double d0 = bins.derivs[b], d1 = bins.derivs[b + 1];
  const double s = h / w;
  const double xi = std::clamp((x - xk) / w, 0.0, 1.0);
  const double q = xi * (1.0 - xi);
  const double den = s + (d0 + d1 - 2.0 * s) * q;
  double y = yk + h * (s * xi * xi + d0 * q) / den;
  const double dydx = s * s * (d1 * xi * xi + 2.0 * s * q + d0 * (1.0 - xi) * (1.0 - xi)) / (den * den);
  if (x <= 0.0) y = 0.0;
  if (x >= 1.0) y = 1.0;
  return {std::clamp(y, 0.0, 1.0), dydx};
}

namespace {

// Per-thread buffers so the hot per-point path does not allocate.
struct Scratch {
  std::vector<double> pw, ph, widths, heights, derivs, slopes;
  void resize(int bins) {
    for (auto* v : {&pw, &ph, &widths, &heights}) v->resize(static_cast<std::size_t>(bins));
    derivs.resize(static_cast<std::size_t>(bins) + 1);
  }
};

void softmax_floor(const double* logits, int k, double floor, double* probs, double* out) {
  double mx = logits[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    probs[i] = std::exp(logits[i] - mx);
    total += probs[i];
  }
  const double scale = 1.0 - floor * static_cast<double>(k);
  for (int i = 0; i < k; ++i) {
    probs[i] /= total;
    out[i] = floor + scale * probs[i];
  }
}

}  // namespace

RqsValue rqs_forward_raw(double x, std::span<const double> raw, int bins, std::span<double> dy_draw) {
  require(static_cast<int>(raw.size()) == rqs_raw_size(bins), ErrorCode::shape, "rqs: raw parameter size");
  thread_local Scratch sc;
  sc.resize(bins);
  softmax_floor(raw.data(), bins, kMinBinWidth, sc.pw.data(), sc.widths.data());
  softmax_floor(raw.data() + bins, bins, kMinBinHeight, sc.ph.data(), sc.heights.data());
  sc.slopes.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    const double v = raw[2 * bins + i] + kDerivShift;
    sc.derivs[i] = kMinDerivative + softplus(v);
    sc.slopes[i] = sigmoid(v);
  }
  const RqsPrepared prep{sc.pw.data(), sc.ph.data(), sc.widths.data(), sc.heights.data(), sc.derivs.data(),
                         sc.slopes.data()};
  return rqs_eval(x, prep, bins, dy_draw);
}

void RqsBatch::prepare(const Matrix& raw, Index row0, int bins) {
  auto softmax = [&](Index r0, double floor, Matrix& probs, Matrix& out) {
    const auto logits = raw.middleRows(r0, bins).array();
    const Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
    probs = (logits.rowwise() - mx.array()).exp().matrix();
    const Eigen::RowVectorXd total = probs.colwise().sum();
    probs.array().rowwise() /= total.array();
    out = (floor + (1.0 - floor * bins) * probs.array()).matrix();
  };
  softmax(row0, kMinBinWidth, pw, widths);
  softmax(row0 + bins, kMinBinHeight, ph, heights);
  const Eigen::ArrayXXd v = raw.middleRows(row0 + 2 * bins, bins + 1).array() + kDerivShift;
  derivs = (kMinDerivative + (v > 30.0).select(v, v.exp().log1p())).matrix();
  slopes = (1.0 / (1.0 + (-v).exp())).matrix();
}

RqsPrepared RqsBatch::column(Index p) const {
  return {pw.col(p).data(), ph.col(p).data(), widths.col(p).data(), heights.col(p).data(), derivs.col(p).data(),
          slopes.col(p).data()};
}

RqsValue rqs_eval(double x, const RqsPrepared& bp, int bins, std::span<double> dy_draw) {
  const bool want_grad = !dy_draw.empty();
  require(!want_grad || static_cast<int>(dy_draw.size()) == rqs_raw_size(bins), ErrorCode::shape,
          "rqs: gradient buffer size");
  x = clamp_unit(x);
  const double* widths = bp.widths;
  const double* heights = bp.heights;
  const double* derivs = bp.derivs;

  if (want_grad) std::fill(dy_draw.begin(), dy_draw.end(), 0.0);
  // Bin search and knot positions, accumulated exactly as in rqs_forward.
  int b = bins - 1;
  {
    double edge = 0.0;
    for (int j = 0; j < bins - 1; ++j) {
      edge += widths[j];
      if (x < edge) {
        b = j;
        break;
      }
    }
  }
  double xk = 0.0, yk = 0.0;
  for (int j = 0; j < b; ++j) {
    xk += widths[j];
    yk += heights[j];
  }
  const double w = widths[b], h = heights[b];
  const double d0 = derivs[b], d1 = derivs[b + 1];
  const double s = h / w;
  const double xi_raw = (x - xk) / w;
  const double xi = std::clamp(xi_raw, 0.0, 1.0);
  const double q = xi * (1.0 - xi);
  const double c = d0 + d1 - 2.0 * s;
  const double den = s + c * q;
  const double inner = s * xi * xi + d0 * q;
  const double num = h * inner;
  const double den2 = den * den;
  const double dydx = s * s * (d1 * xi * xi + 2.0 * s * q + d0 * (1.0 - xi) * (1.0 - xi)) / den2;
  // Endpoints are pinned for every parameter value, so their parameter gradient is zero.
  if (x <= 0.0) return {0.0, dydx};
  if (x >= 1.0) return {1.0, dydx};
  const double y = yk + num / den;
  if (!want_grad) return {std::clamp(y, 0.0, 1.0), dydx};

  const double dq = 1.0 - 2.0 * xi;
  const double dy_dxi = (h * (2.0 * s * xi + d0 * dq) * den - num * c * dq) / den2;
  const double dy_ds = (h * xi * xi * den - num * (1.0 - 2.0 * q)) / den2;
  const double dy_dh_direct = inner / den;
  const double dy_dd0 = (h * q * den - num * q) / den2;
  const double dy_dd1 = -num * q / den2;
  const bool xi_active = xi_raw == xi;

  // Gradients with respect to knot positions, bin sizes, and derivatives.
  const double g_xi = xi_active ? dy_dxi : 0.0;
  const double g_xk = -g_xi / w;
  const double g_w = -g_xi * xi / w - dy_ds * s / w;
  const double g_h = dy_dh_direct + dy_ds / w;

  // With gw_j = g_xk (j < b), g_xk + g_w (j = b), 0 (j > b), and gh likewise with 1 and 1 + g_h,
  // the softmax adjoint is p_j (g_j - sum_i p_i g_i).
  double wdot = 0.0, hdot = 0.0;
  for (int j = 0; j < b; ++j) {
    wdot += bp.pw[j] * g_xk;
    hdot += bp.ph[j];
  }
  wdot += bp.pw[b] * g_w;
  hdot += bp.ph[b] * g_h;
  const double wscale = 1.0 - kMinBinWidth * bins;
  const double hscale = 1.0 - kMinBinHeight * bins;
  for (int j = 0; j < bins; ++j) {
    const double gw = (j < b ? g_xk : 0.0) + (j == b ? g_w : 0.0);
    const double gh = (j < b ? 1.0 : 0.0) + (j == b ? g_h : 0.0);
    dy_draw[j] = wscale * bp.pw[j] * (gw - wdot);
    dy_draw[bins + j] = hscale * bp.ph[j] * (gh - hdot);
  }
  dy_draw[2 * bins + b] += dy_dd0 * bp.slopes[b];
  dy_draw[2 * bins + b + 1] += dy_dd1 * bp.slopes[b + 1];
  return {std::clamp(y, 0.0, 1.0), dydx};
}

}  // namespace warpal
