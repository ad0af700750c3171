#pragma once

#include "warpal/common.hpp"

#include <span>

namespace warpal {

inline constexpr double kMinBinWidth = 1e-3;
inline constexpr double kMinBinHeight = 1e-3;
inline constexpr double kMinDerivative = 1e-3;

// Monotone rational-quadratic spline on [0,1] with K bins.
// Raw layout: K width logits, K height logits, K+1 knot-derivative pre-activations.
struct RqsBins {
  Vector widths;   // K, sum 1
  Vector heights;  // K, sum 1
  Vector derivs;   // K+1, positive

  [[nodiscard]] int bins() const noexcept { return static_cast<int>(widths.size()); }
};

constexpr int rqs_raw_size(int bins) { return 3 * bins + 1; }

RqsBins raw_to_bins(std::span<const double> raw, int bins);

struct RqsValue {
  double y;
  double dydx;
};

// Evaluates g(x). Inputs more than 1e-12 outside [0,1] raise a domain error; smaller excursions are clamped.
RqsValue rqs_forward(double x, const RqsBins& bins);

// Bin quantities derived from one raw parameter vector.
struct RqsPrepared {
  const double* pw;       // K softmax probabilities of the width logits
  const double* ph;       // K softmax probabilities of the height logits
  const double* widths;   // K floored widths
  const double* heights;  // K floored heights
  const double* derivs;   // K+1 knot derivatives
  const double* slopes;   // K+1 values of d deriv / d raw
};

// Bin quantities for many raw columns at once, so the transcendental work vectorizes across points.
struct RqsBatch {
  Matrix pw, ph, widths, heights, derivs, slopes;

  // Reads rows [row0, row0 + 3K + 1) of every column of raw.
  void prepare(const Matrix& raw, Index row0, int bins);
  [[nodiscard]] RqsPrepared column(Index p) const;
};

// Evaluates the spline from prepared bins. dy_draw as in rqs_forward_raw.
RqsValue rqs_eval(double x, const RqsPrepared& bins, int k, std::span<double> dy_draw);

// Same map from raw parameters. If dy_draw is non-empty (size 3K+1) it receives dy/draw.
RqsValue rqs_forward_raw(double x, std::span<const double> raw, int bins, std::span<double> dy_draw);

}  // namespace warpal
