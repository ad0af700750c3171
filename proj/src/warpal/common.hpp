#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace warpal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
  domain = 1,
  shape,
  ill_conditioned,
  unsupported,
  invalid_argument,
  numeric,
  io,
  config,
  not_found,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when K + jitter * I stays non-positive-definite for every jitter level tried.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, std::vector<double> jitters)
      : Error(ErrorCode::ill_conditioned, what), jitters_(std::move(jitters)) {}
  [[nodiscard]] const std::vector<double>& attempted_jitters() const noexcept { return jitters_; }

 private:
  std::vector<double> jitters_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace warpal
