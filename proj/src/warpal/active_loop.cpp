#include "warpal/active_loop.hpp"

#include "warpal/sampling.hpp"

#include <chrono>
#include <cmath>

namespace warpal {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct Setup {
  Index b0 = 0;
  Index rounds = 0;
  EvalGrid grid;
  Dataset data;
  NoisyOracle observe;
};

Setup prepare(const Oracle& oracle, const LoopConfig& cfg) {
  require(oracle.dim >= 1, ErrorCode::invalid_argument, "run: oracle dimension must be >= 1");
  const Index b0 = cfg.init.n > 0 ? cfg.init.n : 10 * static_cast<Index>(oracle.dim);
  const Index total = cfg.budget_includes_init ? cfg.budget : cfg.budget + b0;
  require(total > b0, ErrorCode::config, "run: budget must exceed the initial design size");
  NoisyOracle observe(oracle, cfg.noise_scale, derive_seed(cfg.seed, "noise"));
  std::optional<Matrix> pool;
  if (cfg.init.kind == InitKind::farthest_point)
    pool = sobol_points(cfg.init.pool_size, oracle.dim, derive_seed(cfg.seed, "init_pool"));
  const Matrix X0 = init_design(cfg.init.kind, b0, oracle.dim, derive_seed(cfg.seed, "init"), pool ? &*pool : nullptr);
  Vector y0(b0);
  for (Index i = 0; i < b0; ++i) y0[i] = observe(X0.row(i).transpose());
  EvalGrid grid = make_eval_grid(oracle, cfg.eval_points, observe.noise_sd());
  return Setup{b0, total - b0, std::move(grid), Dataset(X0, y0), std::move(observe)};
}

void fill_metrics(TraceRow& row, const GPState& st, const EvalGrid& grid) {
  row.hp = st.hyperparams();
  row.mse = mse(st, grid);
  row.crps = crps(st, grid);
  row.dmse = mean_derivative_error(st, grid);
}

}  // namespace

double reference_std(const Oracle& oracle) {
  const Matrix X = sobol_points(10000, oracle.dim);
  Vector f(X.rows());
  for (Index i = 0; i < X.rows(); ++i) f[i] = oracle.eval(X.row(i).transpose());
  return std::sqrt((f.array() - f.mean()).square().sum() / static_cast<double>(f.size()));
}

NoisyOracle::NoisyOracle(Oracle oracle, double noise_scale, std::uint64_t seed)
    : oracle_(std::move(oracle)), sd_(0.0), rng_(seed) {
  require(noise_scale >= 0.0, ErrorCode::invalid_argument, "noisy oracle: noise scale must be >= 0");
  if (noise_scale > 0.0) sd_ = noise_scale * reference_std(oracle_);
}

double NoisyOracle::operator()(const Vector& x) {
  const double eps = rng_.normal();
  return oracle_.eval(x) + sd_ * eps;
}

Matrix init_design(InitKind kind, Index n, int dim, std::uint64_t seed, const Matrix* pool) {
  require(n >= 1, ErrorCode::invalid_argument, "init_design: need at least one point");
  if (kind == InitKind::sobol) return sobol_points(n, dim, seed);
  require(pool != nullptr, ErrorCode::invalid_argument, "init_design: farthest-point design needs a pool");
  require(pool->cols() == dim, ErrorCode::shape, "init_design: pool dimension mismatch");
  return farthest_point_sample(*pool, n);
}

RunTrace run(const Oracle& oracle, const LoopConfig& cfg) {
  Setup s = prepare(oracle, cfg);
  Rng lhs_rng(derive_seed(cfg.seed, "lhs"));
  const int D = oracle.dim;
  const std::uint64_t warp_seed = derive_seed(cfg.seed, "warp_init");
  std::shared_ptr<Warp> warp = make_warp(cfg.warp_kind, D, cfg.crqs, warp_seed);
  const bool trains = warp->num_params() > 0;

  RunTrace trace;
  trace.init_size = s.b0;
  trace.noise_sd = s.observe.noise_sd();

  auto t0 = Clock::now();
  auto fit = [&](const GPHyperparams& init, unsigned& flags) {
    const FitResult fr = fit_hyperparams(s.data, cfg.theta_fit_warped ? warp.get() : nullptr, init, cfg.fit);
    if (fr.warning) flags |= kFlagFitWarning;
    return fr.hp;
  };
  TraceRow row0;
  GPHyperparams hp = fit(GPHyperparams::defaults(D), row0.flags);
  fill_metrics(row0, GPState::condition(s.data, hp), s.grid);
  trace.round_ms.push_back(elapsed_ms(t0));
  if (cfg.record_timings) row0.wall_ms = trace.round_ms.back();
  trace.rows.push_back(row0);

  for (Index i = 1; i <= s.rounds; ++i) {
    t0 = Clock::now();
    TraceRow row;
    row.iter = i;
    // hp was fitted on the current data with the warp frozen; now train the warp with hp frozen.
    std::shared_ptr<const Warp> acq_warp;
    if (trains) {
      if (!cfg.warm_start_warp) warp = make_warp(cfg.warp_kind, D, cfg.crqs, warp_seed);
      try {
        std::optional<ProbeSet> probes;
        if (cfg.train.objective == WarpObjective::self_supervised)
          probes = build_reference(s.data, hp, cfg.train.num_probes,
                                   derive_seed(cfg.seed, "probes/" + std::to_string(i)), cfg.train.sampler);
        const WarpTrainResult tr = train_warp(s.data, hp, *warp, cfg.train, probes ? &*probes : nullptr);
        row.warp_loss = tr.final_loss;
        if (tr.warning) row.flags |= kFlagWarpWarning;
        if (tr.aborted) row.flags |= kFlagWarpReverted;
        if (!tr.aborted) acq_warp = warp->clone();
      } catch (const Error&) {
        row.flags |= kFlagRoundFailed | kFlagWarpReverted;
      }
      if (!std::isfinite(row.warp_loss)) row.warp_loss = 0.0;
    }

    std::optional<GPState> state;
    if (acq_warp) {
      try {
        state = GPState::condition(s.data, hp, acq_warp);
      } catch (const Error&) {
        row.flags |= kFlagRoundFailed | kFlagWarpReverted;
      }
    }
    if (!state) state = GPState::condition(s.data, hp);
    Proposal p;
    try {
      p = propose(*state, cfg.acquisition, lhs_rng);
    } catch (const Error&) {
      if (state->identity_warp()) throw;
      row.flags |= kFlagRoundFailed | kFlagWarpReverted;
      state = GPState::condition(s.data, hp);
      p = propose(*state, cfg.acquisition, lhs_rng);
    }
    if (p.jitter_attempts > 0) row.flags |= kFlagJittered;

    row.x = p.x;
    row.y = s.observe(p.x);
    s.data.append(p.x, row.y);
    hp = fit(hp, row.flags);
    fill_metrics(row, GPState::condition(s.data, hp), s.grid);
    trace.round_ms.push_back(elapsed_ms(t0));
    if (cfg.record_timings) row.wall_ms = trace.round_ms.back();
    trace.rows.push_back(std::move(row));
  }
  trace.final_warp = warp->serialize();
  trace.final_state = GPState::condition(s.data, hp);
  return trace;
}

RunTrace run_standard_gp(const Oracle& oracle, const LoopConfig& cfg) {
  Setup s = prepare(oracle, cfg);
  Rng lhs_rng(derive_seed(cfg.seed, "lhs"));
  const int D = oracle.dim;
  RunTrace trace;
  trace.init_size = s.b0;
  trace.noise_sd = s.observe.noise_sd();

  GPHyperparams hp = GPHyperparams::defaults(D);
  for (Index i = 0; i <= s.rounds; ++i) {
    const auto t0 = Clock::now();
    TraceRow row;
    row.iter = i;
    if (i > 0) {
      const GPState st = GPState::condition(s.data, hp);
      const Proposal p = propose(st, cfg.acquisition, lhs_rng);
      if (p.jitter_attempts > 0) row.flags |= kFlagJittered;
      row.x = p.x;
      row.y = s.observe(p.x);
      s.data.append(p.x, row.y);
    }
    const FitResult fr = fit_hyperparams(s.data, nullptr, hp, cfg.fit);
    if (fr.warning) row.flags |= kFlagFitWarning;
    hp = fr.hp;
    fill_metrics(row, GPState::condition(s.data, hp), s.grid);
    trace.round_ms.push_back(elapsed_ms(t0));
    if (cfg.record_timings) row.wall_ms = trace.round_ms.back();
    trace.rows.push_back(std::move(row));
  }
  trace.final_warp = IdentityWarp(D).serialize();
  trace.final_state = GPState::condition(s.data, hp);
  return trace;
}

}  // namespace warpal
