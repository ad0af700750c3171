#include "warpal/warpal.h"

#include "warpal/acquisition.hpp"
#include "warpal/benchmarks.hpp"
#include "warpal/gp.hpp"
#include "warpal/harness.hpp"
#include "warpal/metrics.hpp"
#include "warpal/warp_training.hpp"

#include <iostream>
#include <map>
#include <mutex>
#include <string>

struct warpal_dataset {
  warpal::Dataset data;
};
struct warpal_warp {
  std::unique_ptr<warpal::Warp> warp;
};
struct warpal_gp {
  warpal::GPState state;
};

namespace {

thread_local std::string g_last_error;

warpal_status set_error(warpal_status s, const char* what) {
  g_last_error = what;
  return s;
}

warpal_status status_of(warpal::ErrorCode c) {
  switch (c) {
    case warpal::ErrorCode::domain: return WARPAL_ERR_DOMAIN;
    case warpal::ErrorCode::shape: return WARPAL_ERR_SHAPE;
    case warpal::ErrorCode::ill_conditioned: return WARPAL_ERR_ILL_CONDITIONED;
    case warpal::ErrorCode::unsupported: return WARPAL_ERR_UNSUPPORTED;
    case warpal::ErrorCode::invalid_argument: return WARPAL_ERR_INVALID_ARGUMENT;
    case warpal::ErrorCode::numeric: return WARPAL_ERR_NUMERIC;
    case warpal::ErrorCode::io: return WARPAL_ERR_IO;
    case warpal::ErrorCode::config: return WARPAL_ERR_CONFIG;
    case warpal::ErrorCode::not_found: return WARPAL_ERR_NOT_FOUND;
  }
  return WARPAL_ERR_INTERNAL;
}

template <class F>
warpal_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return WARPAL_OK;
  } catch (const warpal::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(WARPAL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(WARPAL_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) warpal::fail(warpal::ErrorCode::invalid_argument, std::string(what) + " is null");
}

warpal::Matrix rows(const double* X, size_t n, size_t d) {
  need(X, "input matrix");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      X, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
}

warpal::Vector vec(const double* v, size_t n) {
  need(v, "vector");
  return Eigen::Map<const warpal::Vector>(v, static_cast<Eigen::Index>(n));
}

warpal::GPHyperparams hyper(const double* hp, int dim) {
  need(hp, "hyperparameters");
  warpal::GPHyperparams h;
  h.lengthscales = vec(hp, static_cast<size_t>(dim));
  h.signal_variance = hp[dim];
  h.noise_variance = hp[dim + 1];
  h.validate();
  return h;
}

void write_hyper(const warpal::GPHyperparams& h, double* out) {
  for (int d = 0; d < h.dim(); ++d) out[d] = h.lengthscales[d];
  out[h.dim()] = h.signal_variance;
  out[h.dim() + 1] = h.noise_variance;
}

const warpal::Oracle& cached_oracle(const std::string& name) {
  static std::mutex mutex;
  static std::map<std::string, warpal::Oracle> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, warpal::rescale(warpal::make_benchmark(name))).first;
  return it->second;
}

}  // namespace

extern "C" {

const char* warpal_version(void) { return warpal::version_string(); }
const char* warpal_last_error(void) { return g_last_error.c_str(); }

warpal_status warpal_dataset_create(const double* X, size_t n, size_t d, const double* y, warpal_dataset** out) {
  return guarded([&] {
    need(out, "out");
    *out = new warpal_dataset{warpal::Dataset(rows(X, n, d), vec(y, n))};
  });
}

warpal_status warpal_dataset_append(warpal_dataset* ds, const double* x, double y) {
  return guarded([&] {
    need(ds, "dataset");
    ds->data.append(vec(x, static_cast<size_t>(ds->data.dim())), y);
  });
}

warpal_status warpal_dataset_size(const warpal_dataset* ds, size_t* n, size_t* d) {
  return guarded([&] {
    need(ds, "dataset");
    if (n) *n = static_cast<size_t>(ds->data.size());
    if (d) *d = static_cast<size_t>(ds->data.dim());
  });
}

void warpal_dataset_free(warpal_dataset* ds) { delete ds; }

warpal_status warpal_warp_create(const char* kind, size_t dim, uint64_t seed, warpal_warp** out) {
  return guarded([&] {
    need(kind, "kind");
    need(out, "out");
    *out = new warpal_warp{warpal::make_warp(warpal::warp_kind_from_string(kind), static_cast<int>(dim), {}, seed)};
  });
}

warpal_status warpal_warp_create_crqs(size_t dim, int bins, int layers, int hidden, uint64_t seed, warpal_warp** out) {
  return guarded([&] {
    need(out, "out");
    *out = new warpal_warp{std::make_unique<warpal::CrqsWarp>(static_cast<int>(dim), warpal::CrqsConfig{bins, layers, hidden}, seed)};
  });
}

warpal_status warpal_warp_num_params(const warpal_warp* w, size_t* n) {
  return guarded([&] {
    need(w, "warp");
    need(n, "out");
    *n = static_cast<size_t>(w->warp->num_params());
  });
}

warpal_status warpal_warp_get_params(const warpal_warp* w, double* params, size_t n) {
  return guarded([&] {
    need(w, "warp");
    const warpal::Vector p = w->warp->params();
    warpal::require(n == static_cast<size_t>(p.size()), warpal::ErrorCode::shape, "parameter count mismatch");
    if (n) need(params, "params");
    std::copy(p.data(), p.data() + p.size(), params);
  });
}

warpal_status warpal_warp_set_params(warpal_warp* w, const double* params, size_t n) {
  return guarded([&] {
    need(w, "warp");
    w->warp->set_params(n ? vec(params, n) : warpal::Vector());
  });
}

warpal_status warpal_warp_forward(const warpal_warp* w, const double* X, size_t n, double* out) {
  return guarded([&] {
    need(w, "warp");
    need(out, "out");
    const size_t d = static_cast<size_t>(w->warp->dim());
    const warpal::Matrix Y = w->warp->forward(rows(X, n, d));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)) = Y;
  });
}

warpal_status warpal_warp_serialize(const warpal_warp* w, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(w, "warp");
    const std::string s = w->warp->serialize();
    if (needed) *needed = s.size() + 1;
    if (buf && cap >= s.size() + 1) {
      std::copy(s.begin(), s.end(), buf);
      buf[s.size()] = '\0';
    } else if (buf) {
      warpal::fail(warpal::ErrorCode::invalid_argument, "buffer too small for serialized warp");
    }
  });
}

warpal_status warpal_warp_deserialize(const char* blob, warpal_warp** out) {
  return guarded([&] {
    need(blob, "blob");
    need(out, "out");
    *out = new warpal_warp{warpal::deserialize_warp(blob)};
  });
}

void warpal_warp_free(warpal_warp* w) { delete w; }

warpal_status warpal_gp_condition(const warpal_dataset* ds, const double* hp, const warpal_warp* warp, warpal_gp** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    std::shared_ptr<const warpal::Warp> w;
    if (warp) w = warp->warp->clone();
    *out = new warpal_gp{warpal::GPState::condition(ds->data, hyper(hp, ds->data.dim()), w)};
  });
}

warpal_status warpal_gp_posterior(const warpal_gp* gp, const double* Xq, size_t n, double* mean, double* variance) {
  return guarded([&] {
    need(gp, "gp");
    warpal::Vector m, v;
    gp->state.posterior(rows(Xq, n, static_cast<size_t>(gp->state.dataset().dim())), m, v);
    if (mean) std::copy(m.data(), m.data() + m.size(), mean);
    if (variance) std::copy(v.data(), v.data() + v.size(), variance);
  });
}

warpal_status warpal_gp_eig(const warpal_gp* gp, const double* x, double* value, double* grad) {
  return guarded([&] {
    need(gp, "gp");
    need(value, "value");
    warpal::Vector g;
    *value = warpal::eig(gp->state, vec(x, static_cast<size_t>(gp->state.dataset().dim())), grad ? &g : nullptr);
    if (grad) std::copy(g.data(), g.data() + g.size(), grad);
  });
}

warpal_status warpal_gp_propose(const warpal_gp* gp, int n_candidates, int opt_steps, uint64_t seed, double* x_out) {
  return guarded([&] {
    need(gp, "gp");
    need(x_out, "x_out");
    warpal::AcquisitionConfig cfg;
    cfg.n_candidates = n_candidates;
    cfg.opt_steps = opt_steps;
    warpal::Rng rng(seed);
    const warpal::Proposal p = warpal::propose(gp->state, cfg, rng);
    std::copy(p.x.data(), p.x.data() + p.x.size(), x_out);
  });
}

void warpal_gp_free(warpal_gp* gp) { delete gp; }

warpal_status warpal_mll(const warpal_dataset* ds, const double* hp, const warpal_warp* warp, double* value,
                         double* grad_log) {
  return guarded([&] {
    need(ds, "dataset");
    need(value, "value");
    const warpal::GPHyperparams h = hyper(hp, ds->data.dim());
    const warpal::Warp* w = warp ? warp->warp.get() : nullptr;
    if (grad_log) {
      warpal::Vector g;
      *value = warpal::mll_with_grad(ds->data, h, w, g);
      std::copy(g.data(), g.data() + g.size(), grad_log);
    } else {
      *value = warpal::mll(ds->data, h, w);
    }
  });
}

warpal_status warpal_fit_hyperparams(const warpal_dataset* ds, const warpal_warp* warp, const double* hp_init,
                                     double* hp_out, double* mll_out) {
  return guarded([&] {
    need(ds, "dataset");
    need(hp_out, "hp_out");
    const warpal::GPHyperparams init =
        hp_init ? hyper(hp_init, ds->data.dim()) : warpal::GPHyperparams::defaults(ds->data.dim());
    const auto r = warpal::fit_hyperparams(ds->data, warp ? warp->warp.get() : nullptr, init);
    write_hyper(r.hp, hp_out);
    if (mll_out) *mll_out = r.mll;
  });
}

warpal_status warpal_train_warp(const warpal_dataset* ds, const double* hp, warpal_warp* warp, const char* objective,
                                int steps, double learning_rate, size_t num_probes, uint64_t probe_seed,
                                double* final_loss) {
  return guarded([&] {
    need(ds, "dataset");
    need(warp, "warp");
    need(objective, "objective");
    const std::string obj(objective);
    warpal::require(obj == "ss" || obj == "mll", warpal::ErrorCode::invalid_argument, "objective must be ss or mll");
    const warpal::GPHyperparams h = hyper(hp, ds->data.dim());
    warpal::WarpTrainConfig cfg;
    cfg.objective = obj == "ss" ? warpal::WarpObjective::self_supervised : warpal::WarpObjective::mll;
    cfg.steps = steps;
    cfg.adam.learning_rate = learning_rate;
    cfg.num_probes = static_cast<warpal::Index>(num_probes);
    std::optional<warpal::ProbeSet> probes;
    if (obj == "ss") probes = warpal::build_reference(ds->data, h, cfg.num_probes, probe_seed);
    const auto r = warpal::train_warp(ds->data, h, *warp->warp, cfg, probes ? &*probes : nullptr);
    if (r.aborted) warpal::fail(warpal::ErrorCode::numeric, "warp training aborted: " + r.diagnostic);
    if (final_loss) *final_loss = r.final_loss;
  });
}

warpal_status warpal_crps_gaussian(double mu, double sigma, double y, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = warpal::crps_gaussian(mu, sigma, y);
  });
}

warpal_status warpal_area_reduction(const double* metric, const double* baseline, size_t runs, size_t length,
                                    double* mean, double* variance) {
  return guarded([&] {
    const auto r = warpal::area_reduction(rows(metric, runs, length), rows(baseline, runs, length));
    if (mean) *mean = r.mean;
    if (variance) *variance = r.variance;
  });
}

warpal_status warpal_benchmark_dim(const char* name, size_t* dim) {
  return guarded([&] {
    need(name, "name");
    need(dim, "dim");
    *dim = static_cast<size_t>(cached_oracle(name).dim);
  });
}

warpal_status warpal_benchmark_eval(const char* name, const double* u, size_t dim, double* value) {
  return guarded([&] {
    need(name, "name");
    need(value, "value");
    const auto& o = cached_oracle(name);
    warpal::require(dim == static_cast<size_t>(o.dim), warpal::ErrorCode::shape, "benchmark dimension mismatch");
    const warpal::Vector x = vec(u, dim);
    warpal::require((x.array() >= 0.0).all() && (x.array() <= 1.0).all(), warpal::ErrorCode::domain,
                    "benchmark input outside [0,1]^D");
    *value = o.eval(x);
  });
}

int warpal_cmd_run(const char* config_path, const warpal_run_overrides* o) {
  if (!config_path) {
    std::cerr << "error: no config path\n";
    return 2;
  }
  warpal::RunOverrides ov;
  if (o) {
    if (o->has_seed_base) ov.seed_base = o->seed_base;
    if (o->has_jobs) ov.jobs = o->jobs;
    if (o->has_budget) ov.budget = static_cast<warpal::Index>(o->budget);
    if (o->method) ov.method = std::string(o->method);
    if (o->benchmark) ov.benchmark = std::string(o->benchmark);
  }
  try {
    return warpal::cmd_run(config_path, ov, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int warpal_cmd_report(const char* sweep_dir, const char* baseline_method) {
  if (!sweep_dir || !baseline_method) {
    std::cerr << "error: report needs a sweep directory and a baseline method\n";
    return 2;
  }
  return warpal::cmd_report(sweep_dir, baseline_method, std::cout, std::cerr);
}

int warpal_cmd_export(const char* sweep_dir) {
  if (!sweep_dir) {
    std::cerr << "error: export needs a sweep directory\n";
    return 2;
  }
  return warpal::cmd_export(sweep_dir, std::cout, std::cerr);
}

int warpal_cmd_check(void) { return warpal::cmd_check(std::cout, std::cerr); }

void warpal_set_kernel_fault_scale(double scale) { warpal::detail::set_kernel_fault_scale(scale); }

}  // extern "C"
