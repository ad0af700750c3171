#pragma once

#include "warpal/active_loop.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace warpal {

const char* version_string();
const char* git_hash();

// Raised for malformed or inconsistent configuration; carries the 1-based location when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : Error(ErrorCode::config, what), line_(line), column_(column) {}
  [[nodiscard]] int line() const noexcept { return line_; }
  [[nodiscard]] int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

const std::vector<std::string>& method_names();
// Applies a method name (baseline, kumaraswamy_ss, ...) to the loop's warp kind and objective.
void apply_method(const std::string& method, LoopConfig& loop);

struct ExperimentConfig {
  std::string benchmark = "grlee08";
  std::string method = "baseline";
  LoopConfig loop;
  int n_seeds = 10;
  std::uint64_t seed_base = 0;
  std::string output_dir = "runs";
};

ExperimentConfig parse_config(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

struct RunOverrides {
  std::optional<std::uint64_t> seed_base;
  std::optional<int> jobs;
  std::optional<Index> budget;
  std::optional<std::string> method;
  std::optional<std::string> benchmark;
};

// Directory the sweep of cfg writes into, honouring WARPAL_OUTPUT_ROOT for relative paths.
std::string output_root(const ExperimentConfig& cfg);

// Trace CSV text for one run; identical runs give identical text.
std::string trace_csv(const RunTrace& trace, int dim);

// Command entry points. Return process exit codes and write human-readable output to out/err.
// Keeps large matrix buffers on the heap instead of mapping and unmapping them on every
// allocation, which dominates training time with the default glibc thresholds.
void tune_allocator();

int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& out, std::ostream& err);
int cmd_report(const std::string& sweep_dir, const std::string& baseline_method, std::ostream& out, std::ostream& err);
int cmd_export(const std::string& sweep_dir, std::ostream& out, std::ostream& err);
int cmd_check(std::ostream& out, std::ostream& err);

}  // namespace warpal
