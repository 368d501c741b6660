#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "palm/io.hpp"
#include "palm/rng.hpp"
#include "palm/runner.hpp"

using namespace palm;
namespace fs = std::filesystem;
using runner::json;

namespace {

/// Fresh directory per test under the system temp directory.
fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir =
      fs::temp_directory_path() / "power-alm-unit" / (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  for (std::string c; std::getline(is, c, ',');) out.push_back(c);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Summary text with the wall-clock column blanked.
std::string summary_without_timing(const std::string& text) {
  std::string out;
  for (const auto& l : lines(text)) {
    auto cells = split(l);
    if (cells.size() == 10 && l[0] != '#' && cells[8] != "wall_ms") cells[8] = "-";
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  }
  return out;
}

runner::RunSpec small_qp(const fs::path& out) {
  auto spec = runner::parse_spec(json::parse(R"({
    "experiment": "qp", "sizes": {"n": 20, "m": 4}, "seeds": [1, 2], "nus": [0.8, 1.0],
    "solver": {"max_outer": 4}})"));
  spec.output_dir = out.string();
  return spec;
}

class EnvGuard {
 public:
  explicit EnvGuard(const char* name) : name_(name) {
    if (const char* v = std::getenv(name)) saved_ = v;
  }
  ~EnvGuard() {
    if (saved_) setenv(name_, saved_->c_str(), 1);
    else unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> saved_;
};

}  // namespace

TEST(Io, NumberFormattingRoundTrips) {
  Rng rng(Seeded{1});
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-300, 300));
    EXPECT_EQ(std::strtod(io::fmt(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(io::label(0.8), "0.8");
  EXPECT_EQ(io::label(1.0), "1");
}

TEST(Io, TraceCsvSchema) {
  IpalmConfig cfg;
  cfg.beta1 = 1.0;
  cfg.omega = 2.0;
  const auto r = ipalm_solve(toy_problem(), cfg);
  const auto ls = lines(io::trace_csv(r.trace));
  ASSERT_EQ(ls.size(), r.trace.records.size() + 2);
  EXPECT_EQ(ls[0], "# power-alm trace v1");
  EXPECT_EQ(ls[1].rfind("k,beta,eps,sigma,pres,dres,f,ynorm,inner_iters,grad_evals_cum", 0), 0u);
  for (std::size_t i = 2; i < ls.size(); ++i) {
    const auto cells = split(ls[i]);
    ASSERT_EQ(cells.size(), 14u);
    const auto& rec = r.trace.records[i - 2];
    EXPECT_EQ(std::stol(cells[0]), rec.k);
    EXPECT_EQ(std::strtod(cells[1].c_str(), nullptr), rec.beta);
    EXPECT_EQ(std::stol(cells[9]), rec.grad_evals_cum);
  }
}

TEST(Io, SummaryCsvSchema) {
  io::SummaryRow a{"qp", 3, 0.8, 1e-4, 2e-4, 1234, -5.5, std::nullopt, 12.5, "converged"};
  io::SummaryRow b = a;
  b.fstar = 2.0;
  const auto ls = lines(io::summary_csv({a, b}));
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], "# power-alm summary v1");
  EXPECT_EQ(ls[1], "experiment,seed,nu,pres,dres,grad_evals,f,fstar,wall_ms,status");
  EXPECT_EQ(split(ls[2])[7], "");
  EXPECT_EQ(split(ls[3])[7], "2");
  EXPECT_EQ(split(ls[2]).size(), 10u);
}

TEST(Io, PointsCsvImport) {
  const fs::path dir = scratch();
  io::write_file((dir / "h.csv").string(), "a,b,c\n1,2,3\n4,5,6\n\n");
  io::write_file((dir / "n.csv").string(), "1.5,2\r\n-3,4e-1\r\n");
  io::write_file((dir / "ragged.csv").string(), "1,2\n3\n");
  io::write_file((dir / "text.csv").string(), "1,2\n3,x\n");
  const Mat h = io::read_points_csv((dir / "h.csv").string());
  EXPECT_EQ(h.rows(), 2);
  EXPECT_EQ(h(1, 2), 6.0);
  const Mat n = io::read_points_csv((dir / "n.csv").string());
  EXPECT_EQ(n(1, 1), 0.4);
  EXPECT_THROW(io::read_points_csv((dir / "ragged.csv").string()), Error);
  EXPECT_THROW(io::read_points_csv((dir / "text.csv").string()), Error);
  EXPECT_THROW(io::read_points_csv((dir / "missing.csv").string()), Error);
}

TEST(RunSpec, OverridesKeepPresetDefaults) {
  const auto spec = runner::parse_spec(json::parse(R"({
    "experiment": "clustering", "sizes": {"n": 30}, "nus": [0.8],
    "solver": {"eps_f": 1e-5, "inner": {"kind": "ippm", "step_shrink": 3}}})"));
  EXPECT_EQ(spec.sizes.n, 30);
  EXPECT_EQ(spec.sizes.s, 4);
  EXPECT_EQ(spec.nus, std::vector<double>{0.8});
  EXPECT_EQ(spec.seeds.size(), 5u);
  EXPECT_EQ(spec.solver.eps_f, 1e-5);
  EXPECT_EQ(spec.solver.eps_A, 1e-4);
  EXPECT_EQ(spec.solver.beta1, 5.0);
  EXPECT_EQ(spec.solver.inner.kind, InnerKind::IPPM);
  EXPECT_EQ(spec.solver.inner.step_shrink, 3.0);
}

TEST(RunSpec, RejectsInvalidDocuments) {
  const char* bad[] = {
      R"({"sizes": {"n": 3}})",
      R"({"experiment": "sudoku"})",
      R"({"experiment": "qp", "seeds": []})",
      R"({"experiment": "qp", "nus": []})",
      R"({"experiment": "qp", "nus": [1.5]})",
      R"({"experiment": "qp", "colour": "red"})",
      R"({"experiment": "qp", "solver": {"omega": 0.5}})",
      R"({"experiment": "qp", "solver": {"inner": {"step_shrink": "double"}}})",
      R"({"experiment": "qp", "solver": {"inner": {"kind": "newton"}}})",
      R"({"experiment": "qp", "sizes": {"z": 1}})",
      R"({"experiment": "gevp", "gevp_b": "diagonal"})",
  };
  for (const char* doc : bad) EXPECT_THROW(runner::parse_spec(json::parse(doc)), Error) << doc;
  const fs::path dir = scratch();
  io::write_file((dir / "broken.json").string(), "{\"experiment\": ");
  EXPECT_THROW(runner::load_spec((dir / "broken.json").string()), Error);
  EXPECT_THROW(runner::load_spec((dir / "absent.json").string()), Error);
}

TEST(RunSpec, StepSizeAcceptsAuto) {
  const auto automatic = runner::parse_spec(json::parse(
      R"({"experiment": "qp", "solver": {"inner": {"step_size": "auto", "certificate_gamma": "auto"}}})"));
  EXPECT_FALSE(automatic.solver.inner.step_size.has_value());
  EXPECT_FALSE(automatic.solver.inner.certificate_gamma.has_value());
  const auto fixed = runner::parse_spec(
      json::parse(R"({"experiment": "qp", "solver": {"inner": {"step_size": 0.25}}})"));
  EXPECT_EQ(fixed.solver.inner.step_size, 0.25);
  EXPECT_THROW(runner::parse_spec(json::parse(
                   R"({"experiment": "qp", "solver": {"inner": {"step_size": "large"}}})")),
               Error);
}

TEST(RunSpec, PublishedStepShrinkTable) {
  EXPECT_EQ(runner::table_step_shrink("qp", 0.5), 50.0);
  EXPECT_EQ(runner::table_step_shrink("qp", 0.6), 10.0);
  EXPECT_EQ(runner::table_step_shrink("qp", 0.7), 10.0);
  EXPECT_EQ(runner::table_step_shrink("qp", 0.8), 2.0);
  EXPECT_EQ(runner::table_step_shrink("qp", 0.9), 1.0);
  EXPECT_EQ(runner::table_step_shrink("gevp", 0.2), 50.0);
  EXPECT_EQ(runner::table_step_shrink("gevp", 0.8), 1.0);
  EXPECT_EQ(runner::table_step_shrink("clustering", 0.7), 5.0);
  EXPECT_EQ(runner::table_step_shrink("clustering", 0.75), 2.0);
  EXPECT_EQ(runner::table_step_shrink("clustering", 0.8), 1.0);
  EXPECT_EQ(runner::table_step_shrink("basis_pursuit", 0.6), 1.0);

  const auto spec = runner::parse_spec(
      json::parse(R"({"experiment": "qp", "solver": {"inner": {"step_shrink": "table"}}})"));
  EXPECT_EQ(runner::job_config(spec, 0.6).inner.step_shrink, 10.0);
  EXPECT_EQ(runner::job_config(spec, 1.0).inner.step_shrink, 1.0);
  EXPECT_EQ(runner::job_config(runner::preset("qp"), 0.6).inner.step_shrink, 1.0);
}

TEST(RunSpec, PresetGrids) {
  EXPECT_EQ(runner::preset("qp").nus, (std::vector<double>{0.6, 0.7, 0.8, 0.9, 1.0}));
  EXPECT_EQ(runner::preset("qp").seeds.size(), 10u);
  EXPECT_EQ(runner::preset("gevp").nus, (std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0}));
  for (const auto& e : runner::experiments()) EXPECT_NO_THROW(runner::preset(e).validate()) << e;
}

TEST(Batch, QpGridWritesFiftyTracesAndSummary) {
  const fs::path dir = scratch();
  auto spec = runner::preset("qp");
  spec.solver.max_outer = 3;
  spec.output_dir = dir.string();
  const auto batch = runner::run_batch(spec, 2);
  ASSERT_EQ(batch.outcomes.size(), 50u);
  int csv = 0, meta = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("trace_qp_", 0) == 0 && e.path().extension() == ".csv") ++csv;
    if (name.rfind("trace_qp_", 0) == 0 && e.path().extension() == ".json") ++meta;
  }
  EXPECT_EQ(csv, 50);
  EXPECT_EQ(meta, 50);
  EXPECT_TRUE(fs::exists(dir / "trace_qp_10_0.6.csv"));
  const auto summary = lines(io::read_file((dir / "summary_qp.csv").string()));
  EXPECT_EQ(summary.size(), 52u);
}

TEST(Batch, SummaryGradientsMatchTraceFiles) {
  const fs::path dir = scratch();
  const auto spec = small_qp(dir);
  const auto batch = runner::run_batch(spec, 1);
  ASSERT_TRUE(batch.ok());
  const auto summary = lines(io::read_file((dir / "summary_qp.csv").string()));
  for (std::size_t i = 0; i < batch.outcomes.size(); ++i) {
    const auto& o = batch.outcomes[i];
    long inner_sum = 0;
    for (const auto& rec : o.result->trace.records) inner_sum += rec.inner_grad_evals;
    EXPECT_EQ(o.row.grad_evals, inner_sum);
    const auto trace =
        lines(io::read_file((dir / (runner::trace_stem("qp", o.row.seed, o.row.nu) + ".csv")).string()));
    EXPECT_EQ(std::stol(split(trace.back())[9]), inner_sum);
    EXPECT_EQ(std::stol(split(summary[i + 2])[5]), inner_sum);
  }
}

TEST(Batch, MetadataSidecar) {
  const fs::path dir = scratch();
  const auto batch = runner::run_batch(small_qp(dir), 1);
  const auto& o = batch.outcomes.front();
  const json j = json::parse(io::read_file((dir / (runner::trace_stem("qp", 1, 0.8) + ".json")).string()));
  EXPECT_EQ(j.at("seed").get<std::uint64_t>(), 1u);
  EXPECT_EQ(j.at("generator_version").get<std::string>().find("philox4x32-10"), 0u);
  EXPECT_EQ(j.at("solver").at("nu").get<double>(), 0.8);
  EXPECT_EQ(j.at("grad_evals").get<long>(), o.row.grad_evals);
  EXPECT_EQ(j.at("set").get<std::string>(), "box");
}

TEST(Batch, ReproducibleAcrossRunsAndWorkerCounts) {
  const fs::path a = scratch() / "a", b = scratch() / "b";
  auto spec = small_qp(a);
  runner::run_batch(spec, 1);
  spec.output_dir = b.string();
  runner::run_batch(spec, 3);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const std::string name = e.path().filename().string();
    const std::string left = io::read_file(e.path().string());
    const std::string right = io::read_file((b / name).string());
    if (name.rfind("summary_", 0) == 0) {
      EXPECT_EQ(summary_without_timing(left), summary_without_timing(right));
    } else {
      EXPECT_EQ(left, right) << name;
    }
    ++compared;
  }
  EXPECT_EQ(compared, 9);
}

TEST(Batch, SeedOffsetShiftsEveryInstance) {
  const fs::path dir = scratch();
  auto spec = small_qp(dir);
  spec.seeds = {1};
  spec.nus = {1.0};
  const auto batch = runner::run_batch(spec, 1, 4);
  ASSERT_EQ(batch.outcomes.size(), 1u);
  EXPECT_EQ(batch.outcomes[0].row.seed, 5u);
  EXPECT_TRUE(fs::exists(dir / "trace_qp_5_1.csv"));
  const auto direct = ipalm_solve(runner::make_problem(spec, 5), runner::job_config(spec, 1.0));
  EXPECT_EQ(batch.outcomes[0].row.pres, direct.certificate.pres);
}

TEST(Batch, AbortedRunsFailTheBatchButKeepOutputs) {
  const fs::path dir = scratch();
  auto spec = small_qp(dir);
  spec.solver.abort_on_inner_failure = true;
  spec.solver.inner.max_iterations = 1;
  const auto batch = runner::run_batch(spec, 2);
  EXPECT_FALSE(batch.ok());
  EXPECT_TRUE(fs::exists(dir / "summary_qp.csv"));
  EXPECT_TRUE(fs::exists(dir / "trace_qp_1_0.8.csv"));
  for (const auto& o : batch.outcomes) {
    if (o.aborted) {
      EXPECT_EQ(o.row.status, "inner_failure");
    }
  }

  auto broken = runner::preset("clustering");
  broken.points_file = (dir / "missing.csv").string();
  broken.seeds = {1};
  broken.nus = {1.0};
  broken.output_dir = (dir / "err").string();
  const auto failed = runner::run_batch(broken, 1);
  EXPECT_FALSE(failed.ok());
  EXPECT_EQ(failed.outcomes[0].row.status, "error");
  EXPECT_NE(failed.outcomes[0].error.find("missing.csv"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "err" / "summary_clustering.csv"));
}

TEST(Batch, ClusteringFromPointsFile) {
  const fs::path dir = scratch();
  const Mat pts = gaussian_cluster_points(12, 3, 2, Seeded{3});
  std::string text = "x,y\n";
  for (Index i = 0; i < pts.rows(); ++i) text += io::fmt(pts(i, 0)) + "," + io::fmt(pts(i, 1)) + "\n";
  io::write_file((dir / "pts.csv").string(), text);
  auto spec = runner::preset("clustering");
  spec.points_file = (dir / "pts.csv").string();
  spec.sizes.s = 3;
  spec.sizes.r = 2;
  const Problem from_file = runner::make_problem(spec, 9);
  const Problem direct = clustering_generate(pts, 3, 2);
  EXPECT_EQ(from_file.n, 24);
  EXPECT_EQ(from_file.info.seed, 9u);
  EXPECT_EQ(from_file.f(from_file.x_init), direct.f(direct.x_init));
}

TEST(Jobs, ThreadEnvironmentOverride) {
  EnvGuard guard("POWER_ALM_THREADS");
  unsetenv("POWER_ALM_THREADS");
  EXPECT_EQ(runner::resolve_jobs(4), 4);
  EXPECT_EQ(runner::resolve_jobs(0), 1);
  setenv("POWER_ALM_THREADS", "3", 1);
  EXPECT_EQ(runner::resolve_jobs(8), 3);
  setenv("POWER_ALM_THREADS", "0", 1);
  EXPECT_THROW(runner::resolve_jobs(1), Error);
  setenv("POWER_ALM_THREADS", "two", 1);
  EXPECT_THROW(runner::resolve_jobs(1), Error);
}
