#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "palm/io.hpp"
#include "palm/outer.hpp"
#include "palm/problems.hpp"

namespace palm::runner {

using json = nlohmann::json;

struct Sizes {
  Index n = 0;
  Index m = 0;
  Index k = 0;
  Index s = 0;
  Index r = 0;
  /// Ambient dimension of synthetic cluster points.
  Index dim = 0;
};

/// One batch: every (seed, nu) pair of the grid is generated and solved.
struct RunSpec {
  std::string experiment;
  Sizes sizes;
  GevpB gevp_b = GevpB::AsPaper;
  std::optional<std::string> points_file;
  double spread = 4.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> nus;
  IpalmConfig solver;
  /// Divide the base APGM step by the per-power factors of the published
  /// tuning instead of using solver.inner.step_shrink.
  bool table_step_shrink = false;
  std::string output_dir = ".";

  void validate() const {
    require(!seeds.empty(), "seed list is empty");
    require(!nus.empty(), "power list is empty");
    for (double nu : nus) (void)Power{nu};
    solver.validate();
  }
};

inline const std::vector<std::string>& experiments() {
  static const std::vector<std::string> names{"qp", "gevp", "basis_pursuit", "clustering", "toy"};
  return names;
}

/// Per-power APGM step reductions from the published tuning; 1 elsewhere.
inline double table_step_shrink(const std::string& experiment, double nu) {
  auto at = [nu](double v) { return std::abs(nu - v) < 1e-9; };
  if (experiment == "qp" || experiment == "gevp") {
    if (nu <= 0.5 + 1e-9) return 50.0;
    if (nu <= 0.7 + 1e-9) return 10.0;
    if (experiment == "qp" && at(0.8)) return 2.0;
    return 1.0;
  }
  if (experiment == "clustering") {
    if (at(0.7)) return 5.0;
    if (at(0.75)) return 2.0;
  }
  return 1.0;
}

/// Defaults for an experiment. Desk-scale sizes; tuning follows the published
/// experiments except where noted in the README.
inline RunSpec preset(const std::string& experiment) {
  RunSpec spec;
  spec.experiment = experiment;
  IpalmConfig& c = spec.solver;
  c.max_outer = 30;
  c.abort_on_inner_failure = false;
  c.certificate_multiplier = CertificateMultiplier::Inner;
  c.beta1 = 0.01;
  c.omega = 3.0;
  c.lambda = 1.0;
  c.sigma1 = 10.0;
  c.inner.max_iterations = 100000;
  if (experiment == "qp") {
    spec.sizes.n = 100;
    spec.sizes.m = 20;
    spec.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    spec.nus = {0.6, 0.7, 0.8, 0.9, 1.0};
    c.inner.backtracking = true;
  } else if (experiment == "gevp") {
    spec.sizes.n = 100;
    spec.seeds = {1, 2, 3, 4, 5};
    spec.nus = {0.2, 0.4, 0.6, 0.8, 1.0};
  } else if (experiment == "basis_pursuit") {
    spec.sizes.n = 512;
    spec.sizes.m = 200;
    spec.sizes.k = 10;
    spec.seeds = {1};
    spec.nus = {0.6, 0.7, 0.8, 0.9, 1.0};
    c.lambda = 0.01;
    c.eps_f = c.eps_A = 1e-5;
    c.inner.kind = InnerKind::LBFGS;
    c.inner.max_iterations = 10000;
  } else if (experiment == "clustering") {
    spec.sizes.n = 100;
    spec.sizes.s = 4;
    spec.sizes.r = 5;
    spec.sizes.dim = 5;
    spec.seeds = {1, 2, 3, 4, 5};
    spec.nus = {0.7, 0.75, 0.8, 0.9, 1.0};
    c.beta1 = 5.0;
    c.omega = 5.0;
    c.eps_f = c.eps_A = 1e-4;
    c.inner.backtracking = true;
    c.inner.max_iterations = 5000;
  } else if (experiment == "toy") {
    spec.seeds = {0};
    spec.nus = {0.5, 1.0};
    c.eps_f = c.eps_A = 1e-6;
  } else {
    throw Error("unknown experiment '" + experiment + "'");
  }
  return spec;
}

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  require(j.is_object(), where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&key](const char* a) { return key == a; });
    require(ok, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

/// A positive number or "auto" (left to the solver).
inline void read_auto(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_string()) {
    require(v.get<std::string>() == "auto", std::string(key) + " must be a number or \"auto\"");
    out.reset();
  } else {
    out = v.get<double>();
  }
}

inline void read_inner(const json& j, RunSpec& spec) {
  check_keys(j,
             {"kind", "max_iterations", "step_size", "step_shrink", "backtracking", "step_growth",
              "adaptive_restart", "certificate_gamma", "lbfgs_memory", "ippm_max_outer"},
             "solver.inner");
  InnerSolverConfig& c = spec.solver.inner;
  if (j.contains("kind")) c.kind = parse_inner_kind(j.at("kind").get<std::string>());
  read(j, "max_iterations", c.max_iterations);
  read_auto(j, "step_size", c.step_size);
  read_auto(j, "certificate_gamma", c.certificate_gamma);
  if (j.contains("step_shrink")) {
    const json& s = j.at("step_shrink");
    if (s.is_string()) {
      require(s.get<std::string>() == "table", "step_shrink must be a number or \"table\"");
      spec.table_step_shrink = true;
    } else {
      c.step_shrink = s.get<double>();
      spec.table_step_shrink = false;
    }
  }
  read(j, "backtracking", c.backtracking);
  read(j, "step_growth", c.step_growth);
  read(j, "adaptive_restart", c.adaptive_restart);
  read(j, "lbfgs_memory", c.lbfgs_memory);
  read(j, "ippm_max_outer", c.ippm_max_outer);
}

inline void read_solver(const json& j, RunSpec& spec) {
  check_keys(j,
             {"lambda", "omega", "sigma1", "beta1", "eps_f", "eps_A", "max_outer",
              "abort_on_inner_failure", "certificate_multiplier", "inner"},
             "solver");
  IpalmConfig& c = spec.solver;
  read(j, "lambda", c.lambda);
  read(j, "omega", c.omega);
  read(j, "sigma1", c.sigma1);
  read(j, "beta1", c.beta1);
  read(j, "eps_f", c.eps_f);
  read(j, "eps_A", c.eps_A);
  read(j, "max_outer", c.max_outer);
  read(j, "abort_on_inner_failure", c.abort_on_inner_failure);
  if (j.contains("certificate_multiplier"))
    c.certificate_multiplier =
        parse_certificate_multiplier(j.at("certificate_multiplier").get<std::string>());
  if (j.contains("inner")) read_inner(j.at("inner"), spec);
}

}  // namespace detail

/// Parses a run spec. Keys absent from the document keep the experiment's
/// preset value; unknown keys are rejected.
inline RunSpec parse_spec(const json& j) {
  detail::check_keys(j,
                     {"experiment", "sizes", "gevp_b", "points_file", "spread", "seeds", "nus",
                      "solver", "output_dir"},
                     "run spec");
  require(j.contains("experiment"), "run spec needs an 'experiment'");
  RunSpec spec = preset(j.at("experiment").get<std::string>());
  if (j.contains("sizes")) {
    const json& s = j.at("sizes");
    detail::check_keys(s, {"n", "m", "k", "s", "r", "dim"}, "sizes");
    detail::read(s, "n", spec.sizes.n);
    detail::read(s, "m", spec.sizes.m);
    detail::read(s, "k", spec.sizes.k);
    detail::read(s, "s", spec.sizes.s);
    detail::read(s, "r", spec.sizes.r);
    detail::read(s, "dim", spec.sizes.dim);
  }
  if (j.contains("gevp_b")) spec.gevp_b = parse_gevp_b(j.at("gevp_b").get<std::string>());
  if (j.contains("points_file")) spec.points_file = j.at("points_file").get<std::string>();
  detail::read(j, "spread", spec.spread);
  detail::read(j, "seeds", spec.seeds);
  detail::read(j, "nus", spec.nus);
  detail::read(j, "output_dir", spec.output_dir);
  if (j.contains("solver")) detail::read_solver(j.at("solver"), spec);
  spec.validate();
  return spec;
}

inline RunSpec load_spec(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw Error("'" + path + "': " + e.what());
  }
  try {
    return parse_spec(j);
  } catch (const json::exception& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

inline Problem make_problem(const RunSpec& spec, std::uint64_t seed) {
  const Sizes& z = spec.sizes;
  const Seeded s{seed};
  if (spec.experiment == "qp") return qp_generate(z.n, z.m, s);
  if (spec.experiment == "gevp") return gevp_generate(z.n, s, spec.gevp_b);
  if (spec.experiment == "basis_pursuit") return basis_pursuit_generate(z.n, z.m, z.k, s);
  if (spec.experiment == "clustering") {
    const Mat pts = spec.points_file ? io::read_points_csv(*spec.points_file)
                                     : gaussian_cluster_points(z.n, z.s, z.dim, s, spec.spread);
    Problem p = clustering_generate(pts, z.s, z.r);
    p.info.seed = seed;
    return p;
  }
  if (spec.experiment == "toy") return toy_problem();
  throw Error("unknown experiment '" + spec.experiment + "'");
}

/// Solver settings for one grid point.
inline IpalmConfig job_config(const RunSpec& spec, double nu) {
  IpalmConfig c = spec.solver;
  c.nu = Power{nu};
  if (spec.table_step_shrink) c.inner.step_shrink = table_step_shrink(spec.experiment, nu);
  return c;
}

inline json config_json(const IpalmConfig& c) {
  const InnerSolverConfig& in = c.inner;
  json inner{{"kind", to_string(in.kind)},
             {"max_iterations", in.max_iterations},
             {"step_shrink", in.step_shrink},
             {"backtracking", in.backtracking},
             {"step_growth", in.step_growth},
             {"adaptive_restart", in.adaptive_restart},
             {"lbfgs_memory", in.lbfgs_memory},
             {"ippm_max_outer", in.ippm_max_outer}};
  inner["step_size"] = in.step_size ? json(*in.step_size) : json("auto");
  inner["certificate_gamma"] = in.certificate_gamma ? json(*in.certificate_gamma) : json("auto");
  return {{"nu", c.nu.value()},
          {"lambda", c.lambda},
          {"omega", c.omega},
          {"sigma1", c.sigma1},
          {"beta1", c.beta1},
          {"eps_f", c.eps_f},
          {"eps_A", c.eps_A},
          {"max_outer", c.max_outer},
          {"abort_on_inner_failure", c.abort_on_inner_failure},
          {"certificate_multiplier", to_string(c.certificate_multiplier)},
          {"inner", inner}};
}

/// Run metadata written next to each trace. Holds no timings, so reruns
/// reproduce it byte for byte.
inline json metadata_json(const RunSpec& spec, const Problem& p, const IpalmConfig& cfg,
                          const IpalmResult& r) {
  const SmoothnessConstants& k = p.constants;
  json params = json::object();
  for (const auto& [name, value] : p.info.params) params[name] = value;
  json j{{"schema", "power-alm run v1"},
         {"experiment", spec.experiment},
         {"family", p.family},
         {"seed", p.info.seed},
         {"generator_version", p.info.generator_version},
         {"instance", params},
         {"n", p.n},
         {"m", p.m},
         {"set", p.set.kind()},
         {"constants",
          {{"H_f", k.H_f},
           {"nu_f", k.nu_f},
           {"H_A", k.H_A},
           {"nu_A", k.nu_A},
           {"L_f", k.L_f},
           {"L_A", k.L_A},
           {"A_max", k.A_max},
           {"JA_max", k.JA_max},
           {"gradf_max", k.gradf_max},
           {"D", k.D},
           {"D_estimated", k.D_estimated}}},
         {"solver", config_json(cfg)},
         {"status", to_string(r.status)},
         {"diagnostic", r.diagnostic},
         {"outer_iterations", r.trace.records.size()},
         {"grad_evals", r.trace.total_grad_evals()},
         {"pres", r.certificate.pres},
         {"dres", r.certificate.dres},
         {"f", r.trace.records.empty() ? 0.0 : r.trace.records.back().f}};
  if (spec.experiment == "gevp") j["gevp_b"] = to_string(spec.gevp_b);
  if (spec.points_file) j["points_file"] = *spec.points_file;
  j["fstar"] = p.f_star ? json(*p.f_star) : json(nullptr);
  return j;
}

struct JobOutcome {
  io::SummaryRow row;
  std::optional<IpalmResult> result;
  bool aborted = false;
  std::string error;
};

inline std::string trace_stem(const std::string& experiment, std::uint64_t seed, double nu) {
  return "trace_" + experiment + "_" + std::to_string(seed) + "_" + io::label(nu);
}

/// Generates, solves and writes one grid point. Errors are reported in the
/// outcome, never thrown.
inline JobOutcome run_job(const RunSpec& spec, std::uint64_t seed, double nu) {
  JobOutcome out;
  out.row.experiment = spec.experiment;
  out.row.seed = seed;
  out.row.nu = nu;
  try {
    const Problem p = make_problem(spec, seed);
    const IpalmConfig cfg = job_config(spec, nu);
    IpalmResult r = ipalm_solve(p, cfg);
    const std::filesystem::path dir(spec.output_dir);
    const std::string stem = trace_stem(spec.experiment, seed, nu);
    io::write_file((dir / (stem + ".csv")).string(), io::trace_csv(r.trace));
    io::write_file((dir / (stem + ".json")).string(), metadata_json(spec, p, cfg, r).dump(2) + "\n");
    out.row.pres = r.certificate.pres;
    out.row.dres = r.certificate.dres;
    out.row.grad_evals = r.trace.total_grad_evals();
    out.row.f = r.trace.records.empty() ? p.f(p.x_init) : r.trace.records.back().f;
    out.row.fstar = p.f_star;
    out.row.wall_ms = r.wall_ms;
    out.row.status = to_string(r.status);
    out.aborted = r.status == SolveStatus::InnerFailure;
    out.result = std::move(r);
  } catch (const std::exception& e) {
    out.aborted = true;
    out.error = e.what();
    out.row.status = "error";
  }
  return out;
}

/// POWER_ALM_THREADS when set, else the requested count; at least 1.
inline int resolve_jobs(int requested) {
  if (const char* env = std::getenv("POWER_ALM_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    require(end && *end == '\0' && v >= 1, "POWER_ALM_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1, requested);
}

struct BatchResult {
  std::vector<JobOutcome> outcomes;  // ordered by (seed, nu)
  bool ok() const {
    return std::none_of(outcomes.begin(), outcomes.end(),
                        [](const JobOutcome& o) { return o.aborted; });
  }
};

/// Runs the (seed + seed_offset, nu) grid on `jobs` workers. Trace files are
/// written as jobs finish; the summary is written once all have joined.
inline BatchResult run_batch(const RunSpec& spec, int jobs, std::uint64_t seed_offset = 0) {
  spec.validate();
  std::filesystem::create_directories(spec.output_dir);
  struct Task {
    std::uint64_t seed;
    double nu;
  };
  std::vector<Task> tasks;
  for (auto seed : spec.seeds)
    for (double nu : spec.nus) tasks.push_back({seed + seed_offset, nu});

  BatchResult batch;
  batch.outcomes.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      batch.outcomes[i] = run_job(spec, tasks[i].seed, tasks[i].nu);
  };
  const int workers = std::min<int>(std::max(1, jobs), static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<io::SummaryRow> rows;
  for (const auto& o : batch.outcomes) rows.push_back(o.row);
  io::write_file((std::filesystem::path(spec.output_dir) / ("summary_" + spec.experiment + ".csv"))
                     .string(),
                 io::summary_csv(rows));
  return batch;
}

}  // namespace palm::runner
