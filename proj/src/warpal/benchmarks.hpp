#pragma once

#include "warpal/kernel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace warpal {

using ScalarFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;

// Test function on its natural box domain.
struct Benchmark {
  std::string name;
  int dim = 0;
  Vector lower;
  Vector upper;
  ScalarFn eval;
  GradientFn grad;                 // empty when no analytic gradient is available
  bool crps_observation = false;   // score CRPS on the observation predictive against noisy targets
  std::string notes;               // constant choices recorded in run metadata
};

// Benchmark mapped affinely onto [0,1]^D.
struct Oracle {
  std::string name;
  int dim = 0;
  ScalarFn eval;
  GradientFn grad;
  bool crps_observation = false;
};

double smooth_box(const Vector& x, double k, double b_start, std::optional<double> b_end = std::nullopt);
Vector smooth_box_grad(const Vector& x, double k, double b_start, std::optional<double> b_end = std::nullopt);
double grlee08(const Vector& x);
Vector grlee08_grad(const Vector& x);
double peaks(const Vector& x);
Vector peaks_grad(const Vector& x);
// Hartmann-3, or Hartmann-4 built from the Hartmann-6 constants. alpha_scale multiplies every alpha_i.
double hartmann(const Vector& x, double alpha_scale = 1.0);
Vector hartmann_grad(const Vector& x, double alpha_scale = 1.0);

Benchmark smooth_box_benchmark(int dim, double k = 7.0, double b_start = -0.5, std::optional<double> b_end = std::nullopt);
Benchmark grlee08_benchmark();
Benchmark peaks_benchmark();
Benchmark hartmann_benchmark(int dim);
// One Matérn 5/2 prior draw on a dense grid over [0,1]^D, interpolated by the noise-free posterior mean.
Benchmark gp_sample_benchmark(std::uint64_t seed, int dim, const GPHyperparams& hp);

// Registry: grlee08, peaks, box2, box3, hartmann3, hartmann4, gpsample.
const std::vector<std::string>& benchmark_names();
Benchmark make_benchmark(const std::string& name);

Oracle rescale(const Benchmark& benchmark);
Vector to_natural(const Benchmark& benchmark, const Vector& u);
Vector to_unit(const Benchmark& benchmark, const Vector& x);

}  // namespace warpal
