#pragma once

#include "warpal/common.hpp"

namespace warpal {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double grad_clip_norm = 2.0;  // <= 0 disables clipping
  double lr_decay = 0.5;        // multiplicative factor applied every lr_decay_every steps
  int lr_decay_every = 50;
};

struct AdamWState {
  Vector m;
  Vector v;
  long step = 0;  // number of updates applied so far
};

// Step-decay schedule: lr0 * decay^floor(step / every), with step counted from 0.
double scheduled_lr(const AdamWConfig& cfg, long step);

// Rescales grad in place so its Euclidean norm is at most max_norm. Returns the pre-clip norm.
double clip_grad_norm(Vector& grad, double max_norm);

// One AdamW update with decoupled weight decay. Clipping is applied to a copy of grad first,
// and the learning rate follows scheduled_lr at the current step.
void adamw_step(Vector& params, const Vector& grad, AdamWState& state, const AdamWConfig& cfg);

}  // namespace warpal
