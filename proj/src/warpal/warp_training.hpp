#pragma once

#include "warpal/adamw.hpp"
#include "warpal/gp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace warpal {

enum class ProbeSampler { sobol, uniform };

// Probe locations and the frozen identity-warp posterior mean at each of them.
struct ProbeSet {
  Matrix U;       // M x D
  Vector mu_ref;  // response units
  std::uint64_t seed = 0;
};

ProbeSet build_reference(const Dataset& data, const GPHyperparams& hp, Index num_probes, std::uint64_t seed,
                         ProbeSampler sampler = ProbeSampler::sobol);

// Mean over probes of -log N(mu_ref | mu_phi, s2_phi + noise_variance), measured in the
// standardized response units the GP works in. If grad is given, writes dLoss/dphi.
double ss_loss(const Dataset& data, const GPHyperparams& hp, const Warp& warp, const ProbeSet& probes,
               Vector* grad = nullptr);

// Negative warped MLL, with its gradient restricted to the warp parameters.
double warp_mll_loss(const Dataset& data, const GPHyperparams& hp, const Warp& warp, Vector* grad = nullptr);

enum class WarpObjective { self_supervised, mll };

struct WarpTrainConfig {
  WarpObjective objective = WarpObjective::self_supervised;
  int steps = 400;
  AdamWConfig adam;
  Index num_probes = 1024;
  ProbeSampler sampler = ProbeSampler::sobol;
};

struct WarpTrainResult {
  std::vector<double> loss_trace;  // loss before each update, length = steps unless aborted
  double initial_loss = 0.0;
  double final_loss = 0.0;  // loss at the returned parameters
  bool warning = false;     // final loss above initial loss, or training aborted
  bool aborted = false;     // non-finite loss or gradient; parameters reverted
  std::string diagnostic;
};

// Optimizes the warp parameters in place with hp frozen. probes is required for the
// self-supervised objective and ignored for the MLL objective.
WarpTrainResult train_warp(const Dataset& data, const GPHyperparams& hp, Warp& warp, const WarpTrainConfig& cfg,
                           const ProbeSet* probes = nullptr);

}  // namespace warpal
