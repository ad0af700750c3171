#include "warpal/adamw.hpp"

#include <cmath>

namespace warpal {

double scheduled_lr(const AdamWConfig& cfg, long step) {
  if (cfg.lr_decay_every <= 0) return cfg.learning_rate;
  return cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(step / cfg.lr_decay_every));
}

double clip_grad_norm(Vector& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

void adamw_step(Vector& params, const Vector& grad, AdamWState& state, const AdamWConfig& cfg) {
  require(params.size() == grad.size(), ErrorCode::shape, "adamw: parameter and gradient sizes differ");
  if (state.m.size() != params.size()) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
    state.step = 0;
  }
  Vector g = grad;
  clip_grad_norm(g, cfg.grad_clip_norm);
  const double lr = scheduled_lr(cfg, state.step);
  ++state.step;
  const double t = static_cast<double>(state.step);
  params *= 1.0 - lr * cfg.weight_decay;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double step_size = lr / bc1;
  const Vector denom = (state.v.array().sqrt() / std::sqrt(bc2) + cfg.eps).matrix();
  params.array() -= step_size * state.m.array() / denom.array();
}

}  // namespace warpal
