#include "warpal/harness.hpp"

#include "warpal/self_check.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace warpal {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

const char* version_string() { return WARPAL_VERSION; }
const char* git_hash() { return WARPAL_GIT_HASH; }

// ---------------------------------------------------------------------------
// Methods

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"baseline", "kumaraswamy_ss", "kumaraswamy_mll", "crqs_ss", "crqs_mll"};
  return names;
}

void apply_method(const std::string& method, LoopConfig& loop) {
  if (method == "baseline") {
    loop.warp_kind = WarpKind::identity;
    return;
  }
  const auto us = method.rfind('_');
  if (us == std::string::npos) throw ConfigError("unknown method '" + method + "'");
  const std::string kind = method.substr(0, us);
  const std::string objective = method.substr(us + 1);
  if ((kind != "kumaraswamy" && kind != "crqs") || (objective != "ss" && objective != "mll"))
    throw ConfigError("unknown method '" + method + "'");
  loop.warp_kind = warp_kind_from_string(kind);
  loop.train.objective = objective == "ss" ? WarpObjective::self_supervised : WarpObjective::mll;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

using Setter = std::function<void(const ojson&, const std::string&)>;

template <class T>
Setter field(T& target) {
  return [&target](const ojson& v, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path + ": expected a boolean");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ConfigError(path + ": expected a number");
        if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
          if constexpr (std::is_unsigned_v<T>)
            if (v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
        }
      } else {
        if (!v.is_string()) throw ConfigError(path + ": expected a string");
      }
      target = v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  };
}

void read_object(const ojson& j, const std::string& path, const std::map<std::string, Setter>& fields) {
  if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string p = path.empty() ? key : path + "." + key;
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown key '" + p + "'");
    it->second(value, p);
  }
}

Setter object(std::map<std::string, Setter> fields) {
  return [fields = std::move(fields)](const ojson& v, const std::string& path) { read_object(v, path, fields); };
}

Setter choice(std::function<void(const std::string&)> assign, std::vector<std::string> allowed) {
  return [assign = std::move(assign), allowed = std::move(allowed)](const ojson& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path + ": expected a string");
    const auto s = v.get<std::string>();
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) throw ConfigError(path + ": invalid value '" + s + "'");
    assign(s);
  };
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void validate(const ExperimentConfig& c) {
  const auto& L = c.loop;
  if (c.n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  if (L.budget < 1) throw ConfigError("loop.budget must be >= 1");
  if (L.init.n < 0 || L.init.pool_size < 1) throw ConfigError("loop.init: invalid sizes");
  if (L.train.steps < 1) throw ConfigError("loop.train.steps must be >= 1");
  if (!(L.train.adam.learning_rate >= 0.0) || !(L.train.adam.weight_decay >= 0.0))
    throw ConfigError("loop.train: rates must be non-negative");
  if (L.train.num_probes < 1) throw ConfigError("loop.train.num_probes must be >= 1");
  if (L.acquisition.n_candidates < 1 || L.acquisition.opt_steps < 1)
    throw ConfigError("loop.acquisition: n_candidates and opt_steps must be >= 1");
  if (L.crqs.bins < 1 || L.crqs.layers < 1 || L.crqs.hidden < 1) throw ConfigError("loop.crqs: sizes must be >= 1");
  if (L.eval_points < 1) throw ConfigError("loop.eval_points must be >= 1");
  if (!(L.noise_scale >= 0.0)) throw ConfigError("loop.noise_scale must be >= 0");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError(msg, line, col);
  }
  ExperimentConfig c;
  auto& L = c.loop;
  auto& T = L.train;
  std::string method = c.method;
  read_object(j, "",
              {{"benchmark", field(c.benchmark)},
               {"method", field(method)},
               {"n_seeds", field(c.n_seeds)},
               {"seed_base", field(c.seed_base)},
               {"output_dir", field(c.output_dir)},
               {"loop",
                object({{"budget", field(L.budget)},
                        {"budget_includes_init", field(L.budget_includes_init)},
                        {"init", object({{"kind", choice([&](const std::string& s) {
                                                            L.init.kind = s == "sobol" ? InitKind::sobol
                                                                                       : InitKind::farthest_point;
                                                          },
                                                          {"sobol", "farthest_point"})},
                                         {"n", field(L.init.n)},
                                         {"pool_size", field(L.init.pool_size)}})},
                        {"crqs", object({{"bins", field(L.crqs.bins)},
                                         {"layers", field(L.crqs.layers)},
                                         {"hidden", field(L.crqs.hidden)}})},
                        {"train", object({{"steps", field(T.steps)},
                                          {"learning_rate", field(T.adam.learning_rate)},
                                          {"weight_decay", field(T.adam.weight_decay)},
                                          {"beta1", field(T.adam.beta1)},
                                          {"beta2", field(T.adam.beta2)},
                                          {"eps", field(T.adam.eps)},
                                          {"grad_clip_norm", field(T.adam.grad_clip_norm)},
                                          {"lr_decay", field(T.adam.lr_decay)},
                                          {"lr_decay_every", field(T.adam.lr_decay_every)},
                                          {"num_probes", field(T.num_probes)},
                                          {"probe_sampler", choice([&](const std::string& s) {
                                                                     T.sampler = s == "sobol" ? ProbeSampler::sobol
                                                                                              : ProbeSampler::uniform;
                                                                   },
                                                                   {"sobol", "uniform"})}})},
                        {"acquisition", object({{"n_candidates", field(L.acquisition.n_candidates)},
                                                {"opt_steps", field(L.acquisition.opt_steps)},
                                                {"dedupe_radius", field(L.acquisition.dedupe_radius)},
                                                {"grad_tol", field(L.acquisition.grad_tol)},
                                                {"f_tol", field(L.acquisition.f_tol)}})},
                        {"fit", object({{"max_iterations", field(L.fit.max_iterations)},
                                        {"grad_tol", field(L.fit.grad_tol)},
                                        {"f_tol", field(L.fit.f_tol)},
                                        {"min_lengthscale", field(L.fit.min_lengthscale)},
                                        {"max_lengthscale", field(L.fit.max_lengthscale)},
                                        {"min_signal_variance", field(L.fit.min_signal_variance)},
                                        {"max_signal_variance", field(L.fit.max_signal_variance)},
                                        {"min_noise_variance", field(L.fit.min_noise_variance)},
                                        {"max_noise_variance", field(L.fit.max_noise_variance)}})},
                        {"eval_points", field(L.eval_points)},
                        {"noise_scale", field(L.noise_scale)},
                        {"warm_start_warp", field(L.warm_start_warp)},
                        {"theta_fit_warped", field(L.theta_fit_warped)},
                        {"record_timings", field(L.record_timings)}})}});
  c.method = method;
  apply_method(c.method, c.loop);
  validate(c);
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  const auto& L = c.loop;
  const auto& T = L.train;
  const auto& F = L.fit;
  ojson j;
  j["benchmark"] = c.benchmark;
  j["method"] = c.method;
  j["n_seeds"] = c.n_seeds;
  j["seed_base"] = c.seed_base;
  j["output_dir"] = c.output_dir;
  ojson loop;
  loop["budget"] = L.budget;
  loop["budget_includes_init"] = L.budget_includes_init;
  loop["init"] = {{"kind", L.init.kind == InitKind::sobol ? "sobol" : "farthest_point"},
                  {"n", L.init.n},
                  {"pool_size", L.init.pool_size}};
  loop["crqs"] = {{"bins", L.crqs.bins}, {"layers", L.crqs.layers}, {"hidden", L.crqs.hidden}};
  loop["train"] = {{"steps", T.steps},
                   {"learning_rate", T.adam.learning_rate},
                   {"weight_decay", T.adam.weight_decay},
                   {"beta1", T.adam.beta1},
                   {"beta2", T.adam.beta2},
                   {"eps", T.adam.eps},
                   {"grad_clip_norm", T.adam.grad_clip_norm},
                   {"lr_decay", T.adam.lr_decay},
                   {"lr_decay_every", T.adam.lr_decay_every},
                   {"num_probes", T.num_probes},
                   {"probe_sampler", T.sampler == ProbeSampler::sobol ? "sobol" : "uniform"}};
  loop["acquisition"] = {{"n_candidates", L.acquisition.n_candidates},
                         {"opt_steps", L.acquisition.opt_steps},
                         {"dedupe_radius", L.acquisition.dedupe_radius},
                         {"grad_tol", L.acquisition.grad_tol},
                         {"f_tol", L.acquisition.f_tol}};
  loop["fit"] = {{"max_iterations", F.max_iterations},
                 {"grad_tol", F.grad_tol},
                 {"f_tol", F.f_tol},
                 {"min_lengthscale", F.min_lengthscale},
                 {"max_lengthscale", F.max_lengthscale},
                 {"min_signal_variance", F.min_signal_variance},
                 {"max_signal_variance", F.max_signal_variance},
                 {"min_noise_variance", F.min_noise_variance},
                 {"max_noise_variance", F.max_noise_variance}};
  loop["eval_points"] = L.eval_points;
  loop["noise_scale"] = L.noise_scale;
  loop["warm_start_warp"] = L.warm_start_warp;
  loop["theta_fit_warped"] = L.theta_fit_warped;
  loop["record_timings"] = L.record_timings;
  j["loop"] = loop;
  return j.dump(2);
}

std::string output_root(const ExperimentConfig& cfg) {
  fs::path out(cfg.output_dir);
  if (out.is_relative()) {
    if (const char* root = std::getenv("WARPAL_OUTPUT_ROOT"); root && *root) out = fs::path(root) / out;
  }
  return out.string();
}

// ---------------------------------------------------------------------------
// Traces

namespace {

std::string num(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::io, "cannot write " + path.string());
  f << content;
  if (!f) fail(ErrorCode::io, "write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ojson hyperparams_json(const GPHyperparams& hp) {
  ojson j;
  j["lengthscales"] = std::vector<double>(hp.lengthscales.data(), hp.lengthscales.data() + hp.lengthscales.size());
  j["signal_variance"] = hp.signal_variance;
  j["noise_variance"] = hp.noise_variance;
  return j;
}

}  // namespace

std::string trace_csv(const RunTrace& trace, int dim) {
  std::ostringstream os;
  os << "iter";
  for (int d = 0; d < dim; ++d) os << ",x_" << d;
  os << ",y,mse,crps,dmse,ll_trace_final,flags,wall_ms\n";
  for (const auto& row : trace.rows) {
    os << row.iter;
    for (int d = 0; d < dim; ++d) os << ',' << (row.x.size() == dim ? num(row.x[d]) : std::string());
    os << ',' << (row.x.size() == dim ? num(row.y) : std::string());
    os << ',' << num(row.mse) << ',' << num(row.crps) << ',' << num(row.dmse) << ',' << num(row.warp_loss) << ','
       << row.flags << ',' << num(row.wall_ms) << '\n';
  }
  return os.str();
}

void tune_allocator() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
  });
#endif
}

int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& out, std::ostream& err) {
  tune_allocator();
  ExperimentConfig cfg;
  try {
    std::string text;
    try {
      text = read_file(config_path);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
    cfg = parse_config(text);
    if (overrides.seed_base) cfg.seed_base = *overrides.seed_base;
    if (overrides.budget) cfg.loop.budget = *overrides.budget;
    if (overrides.benchmark) cfg.benchmark = *overrides.benchmark;
    if (overrides.method) {
      cfg.method = *overrides.method;
      apply_method(cfg.method, cfg.loop);
    }
    validate(cfg);
    const auto& names = benchmark_names();
    if (std::find(names.begin(), names.end(), cfg.benchmark) == names.end())
      throw ConfigError("unknown benchmark '" + cfg.benchmark + "'");
  } catch (const ConfigError& e) {
    err << "config error";
    if (e.line() > 0) err << " at line " << e.line() << ", column " << e.column();
    err << ": " << e.what() << '\n';
    return 2;
  }

  Benchmark bench;
  try {
    bench = make_benchmark(cfg.benchmark);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  const Oracle oracle = rescale(bench);
  const fs::path dir = fs::path(output_root(cfg)) / cfg.benchmark / cfg.method;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create " << dir.string() << ": " << ec.message() << '\n';
    return 1;
  }
  const std::string snapshot = config_to_json(cfg);

  const int n = cfg.n_seeds;
  int jobs = overrides.jobs.value_or(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  jobs = std::clamp(jobs, 1, n);
  std::vector<std::string> failures(static_cast<std::size_t>(n));
  std::vector<ojson> summaries(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (int k = next++; k < n; k = next++) {
      const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(k);
      try {
        LoopConfig loop = cfg.loop;
        loop.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        const RunTrace trace = run(oracle, loop);
        const double total_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const std::string stem = "seed_" + std::to_string(seed);
        write_file(dir / (stem + ".csv"), trace_csv(trace, oracle.dim));

        ojson rec;
        rec["version"] = version_string();
        rec["git_hash"] = git_hash();
        rec["config"] = ojson::parse(snapshot);
        rec["seed"] = seed;
        rec["benchmark_notes"] = bench.notes;
        rec["init_size"] = trace.init_size;
        rec["noise_sd"] = trace.noise_sd;
        std::vector<unsigned> flags;
        ojson hps = ojson::array();
        for (const auto& r : trace.rows) {
          flags.push_back(r.flags);
          hps.push_back(hyperparams_json(r.hp));
        }
        rec["flags"] = flags;
        rec["hyperparams"] = hps;
        rec["timings_ms"] = {{"rounds", trace.round_ms}, {"total", total_ms}};
        rec["final_warp"] = ojson::parse(trace.final_warp);
        write_file(dir / (stem + ".json"), rec.dump(2) + "\n");

        const auto& last = trace.rows.back();
        summaries[static_cast<std::size_t>(k)] = {{"seed", seed},          {"trace", stem + ".csv"},
                                                  {"record", stem + ".json"}, {"final_mse", last.mse},
                                                  {"final_crps", last.crps}, {"total_ms", total_ms}};
        std::lock_guard lock(log_mutex);
        out << cfg.benchmark << '/' << cfg.method << " seed " << seed << ": final mse " << num(last.mse) << ", "
            << trace.rows.size() << " rows\n";
      } catch (const std::exception& e) {
        failures[static_cast<std::size_t>(k)] = e.what();
        std::lock_guard lock(log_mutex);
        err << cfg.benchmark << '/' << cfg.method << " seed " << seed << " failed: " << e.what() << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ojson sweep;
  sweep["version"] = version_string();
  sweep["git_hash"] = git_hash();
  sweep["benchmark"] = cfg.benchmark;
  sweep["method"] = cfg.method;
  sweep["config"] = ojson::parse(snapshot);
  ojson runs = ojson::array();
  bool ok = true;
  for (int k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (failures[idx].empty()) {
      runs.push_back(summaries[idx]);
    } else {
      ok = false;
      runs.push_back({{"seed", cfg.seed_base + static_cast<std::uint64_t>(k)}, {"error", failures[idx]}});
    }
  }
  sweep["runs"] = runs;
  sweep["completed"] = ok;
  try {
    write_file(dir / "sweep.json", sweep.dump(2) + "\n");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Sweep reading

namespace {

const std::vector<std::string> kMetrics{"mse", "crps", "dmse"};

struct Curves {
  std::map<std::string, std::vector<double>> columns;
};

// benchmark -> method -> seed -> curves
using Sweep = std::map<std::string, std::map<std::string, std::map<std::uint64_t, Curves>>>;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Curves read_trace(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, path.string() + ": empty trace");
  const auto header = split(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  for (const auto& m : kMetrics)
    if (!index.count(m)) fail(ErrorCode::io, path.string() + ": missing column " + m);
  Curves c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) fail(ErrorCode::io, path.string() + ": ragged row");
    for (const auto& m : kMetrics) {
      const std::string& cell = cells[index[m]];
      double v = 0.0;
      const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc() || !std::isfinite(v)) fail(ErrorCode::io, path.string() + ": bad value in " + m);
      c.columns[m].push_back(v);
    }
  }
  return c;
}

bool seed_file(const fs::path& p, std::uint64_t& seed) {
  const std::string name = p.filename().string();
  if (p.extension() != ".csv" || name.rfind("seed_", 0) != 0) return false;
  const std::string digits = name.substr(5, name.size() - 9);
  const auto r = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
  return r.ec == std::errc() && r.ptr == digits.data() + digits.size();
}

void read_method_dir(const fs::path& dir, std::map<std::uint64_t, Curves>& runs) {
  for (const auto& e : fs::directory_iterator(dir)) {
    std::uint64_t seed = 0;
    if (e.is_regular_file() && seed_file(e.path(), seed)) runs[seed] = read_trace(e.path());
  }
}

bool has_traces(const fs::path& dir) {
  std::uint64_t seed = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && seed_file(e.path(), seed)) return true;
  return false;
}

// Accepts either a sweep root (benchmark/method/seed_k.csv) or one benchmark directory.
Sweep read_sweep(const fs::path& root) {
  if (!fs::is_directory(root)) fail(ErrorCode::io, root.string() + " is not a directory");
  Sweep sweep;
  auto read_benchmark = [&](const fs::path& bdir, const std::string& name) {
    for (const auto& m : fs::directory_iterator(bdir))
      if (m.is_directory() && has_traces(m.path())) read_method_dir(m.path(), sweep[name][m.path().filename().string()]);
  };
  bool direct = false;
  for (const auto& m : fs::directory_iterator(root))
    if (m.is_directory() && has_traces(m.path())) direct = true;
  if (direct) {
    read_benchmark(root, fs::absolute(root).lexically_normal().filename().string());
  } else {
    for (const auto& b : fs::directory_iterator(root))
      if (b.is_directory()) read_benchmark(b.path(), b.path().filename().string());
  }
  for (auto it = sweep.begin(); it != sweep.end();) it = it->second.empty() ? sweep.erase(it) : std::next(it);
  return sweep;
}

CurveSet stack(const std::map<std::uint64_t, Curves>& runs, const std::string& metric, const std::string& where) {
  const std::size_t len = runs.begin()->second.columns.at(metric).size();
  CurveSet cs(static_cast<Index>(runs.size()), static_cast<Index>(len));
  Index r = 0;
  for (const auto& [seed, c] : runs) {
    const auto& v = c.columns.at(metric);
    if (v.size() != len) fail(ErrorCode::invalid_argument, where + ": traces have different lengths");
    for (std::size_t i = 0; i < len; ++i) cs(r, static_cast<Index>(i)) = v[i];
    ++r;
  }
  return cs;
}

std::string fixed2(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

}  // namespace

int cmd_report(const std::string& sweep_dir, const std::string& baseline, std::ostream& out, std::ostream& err) {
  try {
    const Sweep sweep = read_sweep(sweep_dir);
    if (sweep.empty()) fail(ErrorCode::not_found, "no traces found under " + sweep_dir);

    std::vector<std::string> problems;
    for (const auto& [bench, methods] : sweep) {
      const auto b = methods.find(baseline);
      if (b == methods.end()) {
        problems.push_back(bench + ": baseline method '" + baseline + "' has no traces");
        continue;
      }
      for (const auto& [method, runs] : methods) {
        for (const auto& [seed, c] : b->second)
          if (!runs.count(seed)) problems.push_back(bench + "/" + method + ": missing seed " + std::to_string(seed));
        for (const auto& [seed, c] : runs)
          if (!b->second.count(seed))
            problems.push_back(bench + "/" + baseline + ": missing seed " + std::to_string(seed) + " (present for " +
                               method + ")");
      }
    }
    if (!problems.empty()) {
      err << "error: seed mismatch between methods:\n";
      for (const auto& p : problems) err << "  " << p << '\n';
      return 1;
    }

    ojson results = ojson::array();
    std::ostringstream table;
    std::vector<std::vector<std::string>> cells{{"benchmark", "method", "seeds", "mse", "crps", "dmse"}};
    for (const auto& [bench, methods] : sweep) {
      std::vector<std::string> order{baseline};
      for (const auto& [method, runs] : methods)
        if (method != baseline) order.push_back(method);
      for (const auto& method : order) {
        const auto& runs = methods.at(method);
        std::vector<std::string> line{bench, method, std::to_string(runs.size())};
        ojson entry;
        entry["benchmark"] = bench;
        entry["method"] = method;
        std::vector<std::uint64_t> seeds;
        for (const auto& [seed, c] : runs) seeds.push_back(seed);
        entry["seeds"] = seeds;
        for (const auto& metric : kMetrics) {
          const std::string where = bench + "/" + method;
          const CurveSet m = lower_bound_shift(stack(runs, metric, where), 0.0);
          const CurveSet base = lower_bound_shift(stack(methods.at(baseline), metric, bench + "/" + baseline), 0.0);
          const AreaReduction ar = area_reduction(m, base);
          const double pct = -100.0 * ar.mean + 0.0;
          const double sd = 100.0 * std::sqrt(ar.variance);
          line.push_back(fixed2(pct) + " ± " + fixed2(sd));
          entry[metric] = {{"reduction_mean", ar.mean},
                           {"reduction_variance", std::isfinite(ar.variance) ? ojson(ar.variance) : ojson()},
                           {"percent", pct},
                           {"percent_std", std::isfinite(sd) ? ojson(sd) : ojson()}};
        }
        cells.push_back(line);
        results.push_back(entry);
      }
    }
    // Column widths count code points so the ± sign does not skew alignment.
    auto width = [](const std::string& s) {
      return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
    };
    std::vector<std::size_t> w(cells[0].size(), 0);
    for (const auto& row : cells)
      for (std::size_t i = 0; i < row.size(); ++i) w[i] = std::max(w[i], width(row[i]));
    table << "Percent reduction in area under the curve relative to " << baseline << " (larger is better)\n";
    for (const auto& row : cells) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        table << row[i];
        if (i + 1 < row.size()) table << std::string(w[i] - width(row[i]) + 2, ' ');
      }
      table << '\n';
    }
    ojson summary;
    summary["baseline"] = baseline;
    summary["metrics"] = kMetrics;
    summary["results"] = results;
    write_file(fs::path(sweep_dir) / "summary.txt", table.str());
    write_file(fs::path(sweep_dir) / "summary.json", summary.dump(2) + "\n");
    out << table.str();
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_export(const std::string& sweep_dir, std::ostream& out, std::ostream& err) {
  try {
    const Sweep sweep = read_sweep(sweep_dir);
    if (sweep.empty()) fail(ErrorCode::not_found, "empty sweep: no traces found under " + sweep_dir);
    const fs::path dir = fs::path(sweep_dir) / "export";
    fs::create_directories(dir);
    for (const auto& [bench, methods] : sweep) {
      for (const auto& metric : kMetrics) {
        std::vector<std::pair<std::string, CurveSet>> sets;
        for (const auto& [method, runs] : methods) sets.emplace_back(method, stack(runs, metric, bench + "/" + method));
        const Index len = sets.front().second.cols();
        for (const auto& [method, cs] : sets)
          if (cs.cols() != len) fail(ErrorCode::invalid_argument, bench + ": methods have different trace lengths");
        std::ostringstream os;
        os << "iteration";
        for (const auto& [method, cs] : sets) os << ',' << method << "_mean," << method << "_std";
        os << '\n';
        for (Index i = 0; i < len; ++i) {
          os << i;
          for (const auto& [method, cs] : sets) {
            const Vector col = cs.col(i);
            const double mean = col.mean();
            const double sd = col.size() > 1 ? std::sqrt((col.array() - mean).square().sum() /
                                                         static_cast<double>(col.size() - 1))
                                             : 0.0;
            os << ',' << num(mean) << ',' << num(sd);
          }
          os << '\n';
        }
        const fs::path file = dir / (bench + "_" + metric + ".csv");
        write_file(file, os.str());
        out << file.string() << '\n';
      }
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_check(std::ostream& out, std::ostream& err) {
  const auto results = run_self_checks();
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name;
    if (!r.detail.empty()) out << "  (" << r.detail << ")";
    out << '\n';
    if (!r.passed) ++failed;
  }
  out << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size() << " checks passed\n";
  if (failed) err << failed << " check(s) failed\n";
  return failed ? 1 : 0;
}

}  // namespace warpal
