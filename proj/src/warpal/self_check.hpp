#pragma once

#include <string>
#include <vector>

namespace warpal {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast self-verification: dense-solve GP oracle, gradient checks, warp monotonicity, CRPS quadrature.
std::vector<CheckResult> run_self_checks();

}  // namespace warpal
