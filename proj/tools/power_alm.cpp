// power-alm: batch runner, single solve and verification suite.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "palm/checks.hpp"
#include "palm/io.hpp"
#include "palm/runner.hpp"

namespace {

using namespace palm;

constexpr int kUsageError = 2;

int cmd_run(const std::string& spec_path, int jobs, std::uint64_t seed_offset) {
  runner::RunSpec spec;
  try {
    spec = runner::load_spec(spec_path);
  } catch (const std::exception& e) {
    std::cerr << "power-alm run: " << e.what() << '\n';
    return kUsageError;
  }
  const int workers = runner::resolve_jobs(jobs);
  const auto batch = runner::run_batch(spec, workers, seed_offset);
  for (const auto& o : batch.outcomes) {
    const auto& r = o.row;
    std::printf("%-13s seed %-4llu nu %-5s %-13s pres %.3e dres %.3e grads %ld\n",
                r.experiment.c_str(), static_cast<unsigned long long>(r.seed),
                io::label(r.nu).c_str(), r.status.c_str(), r.pres, r.dres, r.grad_evals);
    if (!o.error.empty()) std::fprintf(stderr, "  error: %s\n", o.error.c_str());
  }
  std::printf("wrote %zu traces and summary_%s.csv to %s\n", batch.outcomes.size(),
              spec.experiment.c_str(), spec.output_dir.c_str());
  return batch.ok() ? 0 : 1;
}

struct SolveArgs {
  std::string experiment = "qp";
  long n = -1, m = -1, k = -1, s = -1, r = -1, dim = -1;
  double nu = 1.0;
  std::uint64_t seed = 1;
  std::string gevp_b = "as_paper";
  std::string points;
  std::string inner;
  double eps_f = -1.0, eps_A = -1.0;
  std::string out;
  bool trace = false;
};

int cmd_solve(const SolveArgs& a) {
  runner::RunSpec spec = runner::preset(a.experiment);
  auto set = [](long v, Index& field) {
    if (v >= 0) field = v;
  };
  set(a.n, spec.sizes.n);
  set(a.m, spec.sizes.m);
  set(a.k, spec.sizes.k);
  set(a.s, spec.sizes.s);
  set(a.r, spec.sizes.r);
  set(a.dim, spec.sizes.dim);
  spec.gevp_b = parse_gevp_b(a.gevp_b);
  if (!a.points.empty()) spec.points_file = a.points;
  if (!a.inner.empty()) spec.solver.inner.kind = parse_inner_kind(a.inner);
  if (a.eps_f > 0.0) spec.solver.eps_f = a.eps_f;
  if (a.eps_A > 0.0) spec.solver.eps_A = a.eps_A;
  spec.seeds = {a.seed};
  spec.nus = {a.nu};
  spec.validate();

  if (!a.out.empty()) {
    spec.output_dir = a.out;
    const auto batch = runner::run_batch(spec, 1);
    const auto& o = batch.outcomes.front();
    if (!o.error.empty()) throw Error(o.error);
    std::printf("%s: %s pres %.3e dres %.3e grads %ld, outputs in %s\n", a.experiment.c_str(),
                o.row.status.c_str(), o.row.pres, o.row.dres, o.row.grad_evals, a.out.c_str());
    return batch.ok() ? 0 : 1;
  }

  const Problem p = runner::make_problem(spec, a.seed);
  const IpalmResult r = ipalm_solve(p, runner::job_config(spec, a.nu));
  if (a.trace) std::cout << io::trace_csv(r.trace);
  const auto& cert = r.certificate;
  std::printf("status      %s\n", to_string(r.status).c_str());
  std::printf("outer iters %zu\n", r.trace.records.size());
  std::printf("grad evals  %ld\n", r.trace.total_grad_evals());
  std::printf("pres        %.6e\n", cert.pres);
  std::printf("dres        %.6e\n", cert.dres);
  std::printf("f           %.10g\n", r.trace.records.empty() ? p.f(p.x_init) : r.trace.records.back().f);
  if (p.f_star) std::printf("f*          %.10g\n", *p.f_star);
  std::printf("wall ms     %.1f\n", r.wall_ms);
  return r.status == SolveStatus::InnerFailure ? 1 : 0;
}

int cmd_verify(const std::string& level, const std::string& scratch_arg) {
  const auto lvl = level == "full" ? checks::Level::Full : checks::Level::Fast;
  const std::filesystem::path scratch =
      scratch_arg.empty() ? std::filesystem::temp_directory_path() / "power-alm-verify"
                          : std::filesystem::path(scratch_arg);
  std::filesystem::create_directories(scratch);
  int failed = 0;
  const auto results = checks::run_checks(lvl, scratch, [](const checks::CheckResult& c) {
    std::cout << checks::format(c) << std::endl;
  });
  for (const auto& c : results) failed += !c.passed;
  std::cout << (failed ? "FAILED " : "passed ") << results.size() - failed << "/" << results.size()
            << " checks (" << level << ")\n";
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power augmented Lagrangian solver: experiments and verification"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Solve every (seed, nu) pair of a run spec");
  std::string spec_path;
  int jobs = 1;
  std::uint64_t seed_offset = 0;
  run->add_option("--spec", spec_path, "JSON run spec")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Concurrent solves (POWER_ALM_THREADS overrides)")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed-offset", seed_offset, "Added to every seed of the spec");

  auto* solve = app.add_subcommand("solve", "Generate and solve one instance");
  SolveArgs sa;
  solve->add_option("--experiment", sa.experiment, "Problem family")
      ->check(CLI::IsMember(runner::experiments()));
  solve->add_option("--n", sa.n, "Primal size (points for clustering)");
  solve->add_option("--m", sa.m, "Constraint count");
  solve->add_option("--k", sa.k, "Sparsity (basis pursuit)");
  solve->add_option("--s", sa.s, "Clusters");
  solve->add_option("--r", sa.r, "Factor rank (clustering)");
  solve->add_option("--dim", sa.dim, "Dimension of synthetic cluster points");
  solve->add_option("--nu", sa.nu, "Penalty power in (0, 1]");
  solve->add_option("--seed", sa.seed, "Instance seed");
  solve->add_option("--gevp-b", sa.gevp_b, "GEVP B matrix")
      ->check(CLI::IsMember({"as_paper", "triangular"}));
  solve->add_option("--points", sa.points, "Feature CSV for clustering")->check(CLI::ExistingFile);
  solve->add_option("--inner", sa.inner, "Inner solver")
      ->check(CLI::IsMember({"apgm", "ippm", "lbfgs"}));
  solve->add_option("--eps-f", sa.eps_f, "Dual residual tolerance");
  solve->add_option("--eps-a", sa.eps_A, "Constraint violation tolerance");
  solve->add_option("--out", sa.out, "Write trace, metadata and summary here");
  solve->add_flag("--trace", sa.trace, "Print the trace CSV");

  auto* verify = app.add_subcommand("verify", "Run the property and reproduction checks");
  std::string level = "fast";
  std::string scratch;
  verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--scratch", scratch, "Directory for temporary outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  try {
    if (*run) return cmd_run(spec_path, jobs, seed_offset);
    if (*solve) return cmd_solve(sa);
    return cmd_verify(level, scratch);
  } catch (const palm::Error& e) {
    std::cerr << "power-alm: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "power-alm: " << e.what() << '\n';
    return 1;
  }
}
