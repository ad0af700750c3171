#pragma once

#include "warpal/acquisition.hpp"
#include "warpal/benchmarks.hpp"
#include "warpal/metrics.hpp"
#include "warpal/warp_training.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace warpal {

enum class InitKind { sobol, farthest_point };

struct InitConfig {
  InitKind kind = InitKind::sobol;
  Index n = 0;             // 0 selects 10 * D
  Index pool_size = 4096;  // farthest-point candidate pool
};

struct LoopConfig {
  Index budget = 100;
  bool budget_includes_init = true;  // false: budget counts acquisitions only
  InitConfig init;
  WarpKind warp_kind = WarpKind::identity;
  CrqsConfig crqs;
  WarpTrainConfig train;
  AcquisitionConfig acquisition;
  FitOptions fit;
  std::uint64_t seed = 0;
  Index eval_points = 1024;
  double noise_scale = 0.05;
  bool warm_start_warp = true;      // carry trained warp parameters into the next round
  bool theta_fit_warped = false;    // fit hyperparameters under the current warp instead of the identity
  bool record_timings = false;      // write wall-clock times into the trace rows
};

// Row flags.
enum TraceFlag : unsigned {
  kFlagFitWarning = 1u,
  kFlagWarpWarning = 2u,
  kFlagWarpReverted = 4u,
  kFlagRoundFailed = 8u,
  kFlagJittered = 16u,
};

struct TraceRow {
  Index iter = 0;
  Vector x;  // empty for the initial snapshot
  double y = 0.0;
  GPHyperparams hp;
  double mse = 0.0;
  double crps = 0.0;
  double dmse = 0.0;
  double warp_loss = 0.0;  // final warp-training loss of the round, 0 when no warp was trained
  unsigned flags = 0;
  double wall_ms = 0.0;  // zero unless timings were requested
};

struct RunTrace {
  std::vector<TraceRow> rows;
  Index init_size = 0;
  double noise_sd = 0.0;
  std::vector<double> round_ms;  // measured time per row, always recorded
  std::string final_warp;        // serialized warp after the last round
  std::optional<GPState> final_state;
};

// Standard deviation of f over 10^4 unscrambled Sobol points.
double reference_std(const Oracle& oracle);

// y = f(x) + noise_scale * std(f) * N(0, 1).
class NoisyOracle {
 public:
  NoisyOracle(Oracle oracle, double noise_scale, std::uint64_t seed);
  double operator()(const Vector& x);
  [[nodiscard]] double noise_sd() const noexcept { return sd_; }

 private:
  Oracle oracle_;
  double sd_;
  Rng rng_;
};

Matrix init_design(InitKind kind, Index n, int dim, std::uint64_t seed, const Matrix* pool = nullptr);

RunTrace run(const Oracle& oracle, const LoopConfig& cfg);

// Plain GP active learning, written independently of run() as a reference for the identity warp.
RunTrace run_standard_gp(const Oracle& oracle, const LoopConfig& cfg);

}  // namespace warpal
