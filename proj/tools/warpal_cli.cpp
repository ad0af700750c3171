#include "warpal/warpal.h"

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"warpal: input-warped Gaussian-process active learning experiments"};
  app.set_version_flag("--version", std::string(warpal_version()));
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed_base;
  std::optional<int> jobs;
  std::optional<std::int64_t> budget;
  std::optional<std::string> method, benchmark;
  auto* run = app.add_subcommand("run", "Run a seeded sweep from a JSON config");
  run->add_option("config", config, "Config file")->required();
  run->add_option("--seed-base", seed_base, "First seed of the sweep");
  run->add_option("--jobs", jobs, "Parallel worker threads")->check(CLI::PositiveNumber);
  run->add_option("--budget", budget, "Total observation budget")->check(CLI::PositiveNumber);
  run->add_option("--method", method, "baseline, kumaraswamy_ss, kumaraswamy_mll, crqs_ss or crqs_mll");
  run->add_option("--benchmark", benchmark, "grlee08, peaks, box2, box3, hartmann3, hartmann4 or gpsample");

  std::string report_dir, baseline = "baseline";
  auto* report = app.add_subcommand("report", "Summarize area reductions relative to a baseline");
  report->add_option("dir", report_dir, "Sweep directory")->required();
  report->add_option("--baseline", baseline, "Baseline method")->capture_default_str();

  std::string export_dir;
  auto* exp = app.add_subcommand("export", "Write per-iteration mean/std curves");
  exp->add_option("dir", export_dir, "Sweep directory")->required();

  auto* check = app.add_subcommand("check", "Run the self-verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*run) {
    warpal_run_overrides o{};
    if (seed_base) o.has_seed_base = 1, o.seed_base = *seed_base;
    if (jobs) o.has_jobs = 1, o.jobs = *jobs;
    if (budget) o.has_budget = 1, o.budget = *budget;
    if (method) o.method = method->c_str();
    if (benchmark) o.benchmark = benchmark->c_str();
    return warpal_cmd_run(config.c_str(), &o);
  }
  if (*report) return warpal_cmd_report(report_dir.c_str(), baseline.c_str());
  if (*exp) return warpal_cmd_export(export_dir.c_str());
  if (*check) return warpal_cmd_check();
  return 2;
}
