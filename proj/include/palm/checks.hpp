#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "palm/core_al.hpp"
#include "palm/inner.hpp"
#include "palm/io.hpp"
#include "palm/oracles.hpp"
#include "palm/outer.hpp"
#include "palm/problems.hpp"
#include "palm/rng.hpp"
#include "palm/runner.hpp"

// Property and reproduction checks shared by `power-alm verify` and the
// acceptance binary.
namespace palm::checks {

enum class Level { Fast, Full };

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;  // 0 means no limit
};

namespace detail {

inline std::string num(double v) { return io::label(v); }

inline double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Uniform point of the feasible set; unbounded sets use the working ball of
/// radius D/2.
inline Vec sample_point(const Problem& p, Rng& rng) {
  const Index n = p.n;
  const std::string kind = p.set.kind();
  if (kind == "box") {
    const auto& box = std::get<BoxSet>(p.set.variant());
    Vec x(n);
    for (Index i = 0; i < n; ++i) x[i] = rng.uniform(box.lower[i], box.upper[i]);
    return x;
  }
  Vec dir = rng.normal_vector(n);
  double radius = 0.0;
  if (kind == "ball_nonneg") {
    dir = dir.cwiseAbs();
    radius = std::get<BallNonnegSet>(p.set.variant()).radius;
  } else {
    radius = 0.5 * p.constants.D;
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return dir.normalized() * r;
}

/// Nearby feasible partner at a log-uniform distance in [1e-8 D, D].
inline Vec sample_partner(const Problem& p, const Vec& x, Rng& rng) {
  const double D = p.constants.D;
  const double delta = D * std::pow(10.0, -8.0 * rng.uniform());
  Vec y = x + delta * rng.normal_vector(p.n).normalized();
  if (p.set.kind() == "whole_space") {
    const double R = 0.5 * D;
    if (y.norm() > R) y *= R / y.norm();
    return y;
  }
  return p.set.project(y);
}

inline ALParams sample_params(const Problem& p, Rng& rng) {
  static const double kNus[] = {0.3, 0.5, 0.7, 1.0};
  const Power nu{kNus[rng.index(4)]};
  const double beta = std::pow(10.0, rng.uniform(-2.0, 2.0));
  Vec y = rng.normal_vector(p.m);
  y *= rng.uniform(0.0, 10.0) / y.norm();
  return ALParams{nu, beta, y};
}

/// Small instances of the four families used by the gradient and modulus checks.
inline std::vector<Problem> small_family_instances() {
  std::vector<Problem> out;
  out.push_back(qp_generate(20, 5, Seeded{11}));
  out.push_back(gevp_generate(20, Seeded{12}, GevpB::Triangular));
  out.push_back(basis_pursuit_generate(32, 12, 3, Seeded{13}));
  out.push_back(clustering_generate(gaussian_cluster_points(20, 3, 3, Seeded{14}), 3, 3));
  return out;
}

struct Run {
  std::string label;
  Problem problem;
  IpalmConfig config;
  IpalmResult result;
};

inline Run solve(std::string label, Problem p, IpalmConfig cfg) {
  IpalmResult r = ipalm_solve(p, cfg);
  return Run{std::move(label), std::move(p), std::move(cfg), std::move(r)};
}

inline std::string run_brief(const Run& r) {
  return r.label + " " + to_string(r.result.status) + " pres=" + num(r.result.certificate.pres) +
         " dres=" + num(r.result.certificate.dres) +
         " grads=" + std::to_string(r.result.trace.total_grad_evals());
}

}  // namespace detail

/// Relative error of the augmented Lagrangian gradient against central
/// differences at 20 random points per family.
inline CheckResult gradient_check() {
  CheckResult c{1, "augmented Lagrangian gradient matches central differences", false, "", 0, 10};
  Rng rng(Seeded{101});
  double worst = 0.0;
  std::string where;
  for (const Problem& p : detail::small_family_instances()) {
    for (int i = 0; i < 20; ++i) {
      const Vec x = detail::sample_point(p, rng);
      const ALParams a = detail::sample_params(p, rng);
      const Vec g = al_grad(p, x, a);
      const Vec fd = oracles::finite_diff_grad([&](const Vec& z) { return al_value(p, z, a); }, x);
      const double err = (g - fd).norm() / std::max(1.0, g.norm());
      if (err > worst) {
        worst = err;
        where = p.family;
      }
    }
  }
  c.passed = worst <= 1e-5;
  c.detail = "max relative error " + detail::num(worst) + " (" + where + "), limit 1e-5";
  return c;
}

/// ||grad L(x) - grad L(x')|| <= H_beta ||x - x'||^q on 1000 pairs per family.
inline CheckResult holder_check(int pairs = 1000) {
  CheckResult c{2, "Hölder bound on the augmented Lagrangian gradient", false, "", 0, 30};
  Rng rng(Seeded{102});
  long violations = 0, total = 0;
  double worst = 0.0;
  for (const Problem& p : detail::small_family_instances()) {
    for (int i = 0; i < pairs; ++i) {
      const Vec x = detail::sample_point(p, rng);
      const Vec z = detail::sample_partner(p, x, rng);
      const ALParams a = detail::sample_params(p, rng);
      const auto hm = holder_modulus(p.constants, a.y.norm(), a.beta, a.nu);
      const double lhs = (al_grad(p, x, a) - al_grad(p, z, a)).norm();
      const double rhs = hm.H * std::pow((x - z).norm(), hm.q);
      worst = std::max(worst, lhs / rhs);
      ++total;
      if (lhs > rhs) ++violations;
    }
  }
  c.passed = violations == 0;
  c.detail = std::to_string(violations) + " violations in " + std::to_string(total) +
             " pairs, max lhs/rhs " + detail::num(worst);
  return c;
}

/// L(x') >= L(x) + <grad L(x), x' - x> - rho/2 ||x' - x||^2 on 1000 pairs per
/// family. Differences are compared up to their rounding error.
inline CheckResult weak_convexity_check(int pairs = 1000) {
  CheckResult c{3, "weak-convexity bound on the augmented Lagrangian", false, "", 0, 30};
  Rng rng(Seeded{103});
  long violations = 0, total = 0;
  double worst = 0.0;
  for (const Problem& p : detail::small_family_instances()) {
    for (int i = 0; i < pairs; ++i) {
      const Vec x = detail::sample_point(p, rng);
      const Vec z = detail::sample_partner(p, x, rng);
      const ALParams a = detail::sample_params(p, rng);
      const double rho = weak_convexity_modulus(p.constants, a.y.norm(), a.beta, a.nu);
      const double lx = al_value(p, x, a), lz = al_value(p, z, a);
      const Vec d = z - x;
      const double lin = al_grad(p, x, a).dot(d);
      const double gap = lz - lx - lin + 0.5 * rho * d.squaredNorm();
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(lx) + std::abs(lz) + std::abs(lin));
      ++total;
      if (gap < -slack) {
        ++violations;
        worst = std::max(worst, -gap);
      }
    }
  }
  c.passed = violations == 0;
  c.detail = std::to_string(violations) + " violations in " + std::to_string(total) + " pairs";
  if (violations) c.detail += ", worst deficit " + detail::num(worst);
  return c;
}

/// Separable weakly convex test function on [-1, 1]^n:
/// psi(x) = sum_i a_i |x_i|^(1+nu)/(1+nu) - rho0/2 ||x||^2 + <c, x>.
struct IppmTestFunction {
  Power nu;
  double rho0;
  Vec a;
  Vec c;

  double value(const Vec& x) const {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i)
      s += a[i] * std::pow(std::abs(x[i]), nu + 1.0) / (nu + 1.0);
    return s - 0.5 * rho0 * x.squaredNorm() + c.dot(x);
  }

  Vec gradient(const Vec& x) const {
    Vec g(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      const double t = std::abs(x[i]);
      g[i] = a[i] * (t == 0.0 ? 0.0 : std::copysign(std::pow(t, nu.value()), x[i]));
    }
    return g - rho0 * x + c;
  }

  /// Hölder constant of the gradient with exponent nu over the box.
  double holder_constant() const {
    const double n = static_cast<double>(a.size());
    const double D = 2.0 * std::sqrt(n);
    return a.maxCoeff() * std::pow(2.0, 1.0 - nu) * std::pow(n, (1.0 - nu) / 2.0) +
           rho0 * std::pow(D, 1.0 - nu);
  }

  /// Lower bound on min psi over the box: per-coordinate grid minimum less
  /// the grid's Lipschitz error.
  double min_lower_bound() const {
    constexpr int kGrid = 200001;
    const double h = 2.0 / (kGrid - 1);
    double total = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
      double best = kInf;
      for (int j = 0; j < kGrid; ++j) {
        const double t = -1.0 + h * j;
        best = std::min(best, a[i] * std::pow(std::abs(t), nu + 1.0) / (nu + 1.0) -
                                  0.5 * rho0 * t * t + c[i] * t);
      }
      total += best - 0.5 * h * (a[i] + rho0 + std::abs(c[i]));
    }
    return total;
  }
};

inline std::vector<IppmTestFunction> ippm_test_functions() {
  const double nus[] = {0.5, 0.5, 0.6, 0.7, 0.8, 0.8, 0.9, 1.0, 1.0, 1.0};
  std::vector<IppmTestFunction> out;
  Rng rng(Seeded{105});
  for (int i = 0; i < 10; ++i) {
    const Index n = 2 + i % 4;
    IppmTestFunction f{Power{nus[i]}, rng.uniform(0.5, 2.0), Vec(n), Vec(n)};
    for (Index j = 0; j < n; ++j) {
      f.a[j] = rng.uniform(0.5, 3.0);
      f.c[j] = rng.uniform(-1.0, 1.0);
    }
    out.push_back(std::move(f));
  }
  return out;
}

/// ippm_solve certificates and its outer-iteration bound on 10 test functions.
inline CheckResult ippm_check(double tol = 1e-3) {
  CheckResult c{5, "inexact proximal point contract", false, "", 0, 120};
  Rng rng(Seeded{106});
  long bad_residual = 0, bad_count = 0, failed = 0;
  double worst_ratio = 0.0;
  long max_iters = 0;
  for (const auto& fn : ippm_test_functions()) {
    const Index n = fn.a.size();
    const ConvexSet set = BoxSet::uniform(n, -1.0, 1.0);
    const Objective psi{[&fn](const Vec& x) { return fn.value(x); },
                        [&fn](const Vec& x) { return fn.gradient(x); }};
    Vec x1(n);
    for (Index j = 0; j < n; ++j) x1[j] = rng.uniform(-1.0, 1.0);
    const auto rep = ippm_solve(psi, set, x1, fn.rho0, fn.holder_constant(), fn.nu, tol, 100000);
    if (!rep.converged) ++failed;
    const double dist = set.normal_cone_dist(rep.x, -fn.gradient(rep.x));
    worst_ratio = std::max(worst_ratio, dist / tol);
    if (dist > tol) ++bad_residual;
    const double bound =
        std::ceil(32.0 * fn.rho0 * (fn.value(x1) - fn.min_lower_bound()) / (tol * tol) + 1.0);
    if (static_cast<double>(rep.iterations) > bound) ++bad_count;
    max_iters = std::max(max_iters, rep.iterations);
  }
  c.passed = failed == 0 && bad_residual == 0 && bad_count == 0;
  c.detail = std::to_string(failed) + " unconverged, " + std::to_string(bad_residual) +
             " residuals above tol, " + std::to_string(bad_count) +
             " over the iteration bound; max dist/tol " + detail::num(worst_ratio) +
             ", max outer iterations " + std::to_string(max_iters);
  return c;
}

/// Solver runs shared by the reproduction checks, computed on first use.
class Suite {
 public:
  explicit Suite(Level level) : level_{level} {}

  Level level() const { return level_; }

  /// QP grid, (seed, nu) for seeds 1..10 and nu in {0.8, 1} at n = 100, m = 20.
  const std::vector<detail::Run>& qp() {
    if (qp_.empty()) {
      const auto spec = runner::preset("qp");
      for (std::uint64_t seed = 1; seed <= 10; ++seed)
        for (double nu : {0.8, 1.0})
          qp_.push_back(detail::solve("qp seed " + std::to_string(seed) + " nu " + detail::num(nu),
                                      qp_generate(100, 20, Seeded{seed}),
                                      runner::job_config(spec, nu)));
    }
    return qp_;
  }

  /// GEVP, triangular B, n = 100, seeds 1..5, nu = 0.4, L-BFGS inner solver.
  const std::vector<detail::Run>& gevp() {
    if (gevp_.empty()) {
      auto cfg = runner::job_config(runner::preset("gevp"), 0.4);
      cfg.inner.kind = InnerKind::LBFGS;
      cfg.eps_A = 1e-6;
      for (std::uint64_t seed = 1; seed <= 5; ++seed)
        gevp_.push_back(detail::solve("gevp seed " + std::to_string(seed),
                                      gevp_generate(100, Seeded{seed}, GevpB::Triangular), cfg));
    }
    return gevp_;
  }

  /// Basis pursuit m = 200, n = 512, k = 10, seed 1, nu in {0.6, 1}.
  const std::vector<detail::Run>& basis_pursuit() {
    if (bp_.empty()) {
      const auto spec = runner::preset("basis_pursuit");
      for (double nu : {0.6, 1.0})
        bp_.push_back(detail::solve("basis_pursuit nu " + detail::num(nu),
                                    basis_pursuit_generate(512, 200, 10, Seeded{1}),
                                    runner::job_config(spec, nu)));
    }
    return bp_;
  }

  /// Synthetic clustering, 100 points from 4 clusters in 5 dimensions, r = 5,
  /// draws 1..5, nu in {0.8, 1}.
  const std::vector<detail::Run>& clustering() {
    if (clu_.empty()) {
      const auto spec = runner::preset("clustering");
      for (std::uint64_t seed = 1; seed <= 5; ++seed)
        for (double nu : {0.8, 1.0})
          clu_.push_back(detail::solve(
              "clustering draw " + std::to_string(seed) + " nu " + detail::num(nu),
              clustering_generate(gaussian_cluster_points(100, 4, 5, Seeded{seed}), 4, 5),
              runner::job_config(spec, nu)));
    }
    return clu_;
  }

  /// Small runs of every family, for the fast level.
  const std::vector<detail::Run>& small() {
    if (small_.empty()) {
      for (double nu : {0.6, 1.0}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed)
          small_.push_back(detail::solve("small qp seed " + std::to_string(seed) + " nu " +
                                             detail::num(nu),
                                         qp_generate(30, 6, Seeded{seed}),
                                         runner::job_config(runner::preset("qp"), nu)));
        auto g = runner::job_config(runner::preset("gevp"), nu);
        g.inner.kind = InnerKind::LBFGS;
        small_.push_back(detail::solve("small gevp nu " + detail::num(nu),
                                       gevp_generate(20, Seeded{1}, GevpB::Triangular), g));
        small_.push_back(detail::solve("toy nu " + detail::num(nu), toy_problem(),
                                       runner::job_config(runner::preset("toy"), nu)));
      }
    }
    return small_;
  }

  /// Every run computed so far.
  std::vector<const detail::Run*> all_runs() const {
    std::vector<const detail::Run*> out;
    for (const auto* v : {&qp_, &gevp_, &bp_, &clu_, &small_})
      for (const auto& r : *v) out.push_back(&r);
    return out;
  }

 private:
  Level level_;
  std::vector<detail::Run> qp_, gevp_, bp_, clu_, small_;
};

/// max_k ||y^k|| <= y_max_bound on every run of the suite.
inline CheckResult multiplier_bound_check(const Suite& suite) {
  CheckResult c{4, "multipliers stay below the bounded-multiplier estimate", false, "", 0, 0};
  long violations = 0, runs = 0;
  double worst = 0.0;
  for (const auto* run : suite.all_runs()) {
    const OuterTrace& t = run->result.trace;
    const double bound = y_max_bound(t.y1.norm(), t.sigma1, t.a1_norm, t.nu);
    double ymax = t.y1.norm();
    for (const auto& r : t.records) ymax = std::max(ymax, r.ynorm);
    ++runs;
    if (bound > 0.0) worst = std::max(worst, ymax / bound);
    if (ymax > bound) ++violations;
  }
  c.passed = runs > 0 && violations == 0;
  c.detail = std::to_string(violations) + " violations over " + std::to_string(runs) +
             " runs, max ||y||/bound " + detail::num(worst);
  return c;
}

/// Per-iteration feasibility inequality on the QP and GEVP runs.
inline CheckResult feasibility_rate_check(const Suite& suite) {
  CheckResult c{6, "per-iteration feasibility inequality with empirical regularity", false, "", 0,
                0};
  long violations = 0, checked = 0, runs = 0, skipped = 0;
  double worst = 0.0;
  for (const auto* run : suite.all_runs()) {
    const std::string& fam = run->problem.family;
    if (fam != "qp" && fam != "gevp") continue;
    const auto est = regularity_estimate(run->problem, run->result.trace);
    if (est.all_feasible || !(est.v_hat > 0.0)) {
      ++skipped;
      continue;
    }
    const auto rep = rate_check(run->problem, run->result.trace, est.v_hat);
    ++runs;
    checked += rep.checked;
    violations += rep.violations;
    for (double r : rep.ratios) worst = std::max(worst, r);
  }
  c.passed = runs > 0 && violations == 0;
  c.detail = std::to_string(violations) + " violations in " + std::to_string(checked) +
             " iterations of " + std::to_string(runs) + " runs (" + std::to_string(skipped) +
             " without infeasible iterates), max lhs/rhs " + detail::num(worst);
  return c;
}

inline std::map<std::pair<std::uint64_t, double>, const detail::Run*> index_qp(Suite& suite) {
  std::map<std::pair<std::uint64_t, double>, const detail::Run*> idx;
  for (const auto& r : suite.qp()) idx[{r.problem.info.seed, r.config.nu.value()}] = &r;
  return idx;
}

/// Median over seeds of slope(nu = 0.8) / slope(nu = 1) of ln ||A(x^k)|| on the
/// final half of the outer iterations.
inline CheckResult qp_slope_check(Suite& suite) {
  CheckResult c{7, "QP feasibility slope steeper for nu = 0.8 than nu = 1", false, "", 0, 600};
  const auto idx = index_qp(suite);
  std::vector<double> ratios;
  long missing = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto* a = idx.at({seed, 0.8});
    const auto* b = idx.at({seed, 1.0});
    const auto sa = rate_check(a->problem, a->result.trace, 1.0).slope;
    const auto sb = rate_check(b->problem, b->result.trace, 1.0).slope;
    if (!sa || !sb || *sb >= 0.0) {
      ++missing;
      continue;
    }
    ratios.push_back(*sa / *sb);
  }
  if (ratios.empty()) {
    c.detail = "no seed produced two fitted slopes";
    return c;
  }
  const double med = detail::median(ratios);
  c.passed = missing == 0 && med >= 1.1;
  c.detail = "median slope ratio " + detail::num(med) + " over " + std::to_string(ratios.size()) +
             " seeds (need >= 1.1)";
  if (missing) c.detail += ", " + std::to_string(missing) + " seeds without a fit";
  return c;
}

/// Median total gradients for nu = 0.8 at most 0.9 times that of nu = 1.
inline CheckResult qp_gradient_check(Suite& suite) {
  CheckResult c{8, "QP gradient count lower for nu = 0.8 than nu = 1", false, "", 0, 900};
  const auto idx = index_qp(suite);
  std::vector<double> g08, g1;
  long unconverged = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto* a = idx.at({seed, 0.8});
    const auto* b = idx.at({seed, 1.0});
    unconverged += !a->result.converged() + !b->result.converged();
    g08.push_back(static_cast<double>(a->result.trace.total_grad_evals()));
    g1.push_back(static_cast<double>(b->result.trace.total_grad_evals()));
  }
  const double m08 = detail::median(g08), m1 = detail::median(g1);
  c.passed = unconverged == 0 && m08 <= 0.9 * m1;
  c.detail = "median gradients nu=0.8 " + detail::num(m08) + ", nu=1 " + detail::num(m1) +
             ", ratio " + detail::num(m08 / m1) + " (need <= 0.9), " +
             std::to_string(unconverged) + " unconverged runs";
  return c;
}

/// GEVP stationarity and optimality against the dense eigensolver.
inline CheckResult gevp_check(Suite& suite) {
  CheckResult c{9, "GEVP reaches stationarity and the minimal generalized eigenvalue", false, "",
                0, 600};
  long bad = 0;
  double worst_gap = 0.0, worst_pres = 0.0, worst_dres = 0.0;
  for (const auto& run : suite.gevp()) {
    const auto [C, B] = gevp_matrices(100, Seeded{run.problem.info.seed}, GevpB::Triangular);
    const double lambda_min = oracles::dense_gevp_min(C, B).lambda_min;
    const auto& cert = run.result.certificate;
    const auto res = stationarity_residuals(run.problem, cert.x, cert.y_cert);
    const double gap = std::abs(run.problem.f(cert.x) - lambda_min);
    worst_gap = std::max(worst_gap, gap);
    worst_pres = std::max(worst_pres, res.pres);
    worst_dres = std::max(worst_dres, res.dres);
    if (!(res.pres <= 1e-3 && res.dres <= 1e-3 && gap <= 5e-3)) ++bad;
  }
  c.passed = bad == 0;
  c.detail = std::to_string(bad) + " of 5 seeds failing; max pres " + detail::num(worst_pres) +
             ", max dres " + detail::num(worst_dres) + ", max |f - lambda_min| " +
             detail::num(worst_gap);
  return c;
}

/// Basis pursuit recovery for nu in {0.6, 1} and fewer gradients at 0.6.
inline CheckResult basis_pursuit_check(Suite& suite) {
  CheckResult c{10, "basis pursuit recovery, fewer gradients for nu = 0.6", false, "", 0, 600};
  const auto& runs = suite.basis_pursuit();
  const double l1 = basis_pursuit_ground_truth(512, 200, 10, Seeded{1}).lpNorm<1>();
  bool ok = true;
  std::ostringstream os;
  for (const auto& run : runs) {
    const auto& cert = run.result.certificate;
    const double gap = std::abs(run.problem.f(cert.x) - l1);
    ok = ok && cert.pres <= 1e-5 && cert.dres <= 1e-5 && gap <= 1e-3;
    os << "nu " << detail::num(run.config.nu) << ": pres " << detail::num(cert.pres) << " dres "
       << detail::num(cert.dres) << " |f-l1| " << detail::num(gap) << " grads "
       << run.result.trace.total_grad_evals() << "; ";
  }
  const bool fewer = runs[0].result.trace.total_grad_evals() < runs[1].result.trace.total_grad_evals();
  c.passed = ok && fewer;
  c.detail = os.str() + (fewer ? "nu 0.6 cheaper" : "nu 0.6 not cheaper");
  return c;
}

/// Repeated batch runs give byte-identical traces, also across worker counts.
inline CheckResult determinism_check(const std::filesystem::path& scratch) {
  CheckResult c{11, "identical specs give byte-identical traces", false, "", 0, 0};
  auto spec = runner::preset("qp");
  spec.sizes = {30, 6, 0, 0, 0, 0};
  spec.seeds = {1, 2};
  spec.nus = {0.8, 1.0};
  auto clu = runner::preset("clustering");
  clu.sizes = {20, 0, 0, 3, 3, 3};
  clu.seeds = {1};
  clu.nus = {0.8};
  clu.solver.inner.max_iterations = 500;

  long files = 0, differing = 0;
  for (auto* s : {&spec, &clu}) {
    const auto a = scratch / (s->experiment + "_a");
    const auto b = scratch / (s->experiment + "_b");
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
    s->output_dir = a.string();
    runner::run_batch(*s, 1);
    s->output_dir = b.string();
    runner::run_batch(*s, 2);
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("trace_", 0) != 0) continue;
      ++files;
      if (!std::filesystem::exists(b / name) ||
          io::read_file(entry.path().string()) != io::read_file((b / name).string()))
        ++differing;
    }
  }
  c.passed = files > 0 && differing == 0;
  c.detail = std::to_string(differing) + " of " + std::to_string(files) +
             " trace and metadata files differ between runs with 1 and 2 workers";
  return c;
}

/// Synthetic clustering reaches 1e-4 for nu in {0.8, 1}; nu = 0.8 needs no
/// more gradients in median.
inline CheckResult clustering_check(Suite& suite) {
  CheckResult c{12, "synthetic clustering converges, nu = 0.8 no costlier than nu = 1", false, "",
                0, 600};
  std::vector<double> g08, g1;
  long unconverged = 0;
  std::ostringstream os;
  for (const auto& run : suite.clustering()) {
    const bool is08 = run.config.nu.value() < 1.0;
    (is08 ? g08 : g1).push_back(static_cast<double>(run.result.trace.total_grad_evals()));
    if (!run.result.converged()) {
      ++unconverged;
      os << run.label << " stops at pres " << detail::num(run.result.certificate.pres) << " dres "
         << detail::num(run.result.certificate.dres) << "; ";
    }
  }
  const double m08 = detail::median(g08), m1 = detail::median(g1);
  c.passed = unconverged == 0 && m08 <= m1;
  c.detail = std::to_string(unconverged) + " of 10 runs unconverged; " + os.str() +
             "median gradients nu=0.8 " + detail::num(m08) + ", nu=1 " + detail::num(m1);
  return c;
}

using Clock = std::chrono::steady_clock;

/// Runs one check, timing it and enforcing its runtime limit. Exceptions
/// count as failures.
inline CheckResult timed(const std::function<CheckResult()>& fn, int id, const std::string& name) {
  const auto t0 = Clock::now();
  CheckResult c;
  try {
    c = fn();
  } catch (const std::exception& e) {
    c = CheckResult{id, name, false, std::string("exception: ") + e.what(), 0, 0};
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (c.limit_seconds > 0.0 && c.seconds > c.limit_seconds) {
    c.passed = false;
    c.detail += "; took " + detail::num(c.seconds) + " s, limit " + detail::num(c.limit_seconds) +
                " s";
  }
  return c;
}

/// Fast: modulus and gradient properties, the proximal point contract,
/// determinism and small solver runs. Full adds the reproduction criteria.
/// Results are ordered by id; `report` sees each as it finishes.
inline std::vector<CheckResult> run_checks(Level level, const std::filesystem::path& scratch,
                                           const std::function<void(const CheckResult&)>& report =
                                               {}) {
  Suite suite(level);
  std::vector<CheckResult> out;
  auto add = [&](int id, const std::string& name, const std::function<CheckResult()>& fn) {
    out.push_back(timed(fn, id, name));
    if (report) report(out.back());
  };
  add(1, "gradient", gradient_check);
  add(2, "holder", [] { return holder_check(); });
  add(3, "weak convexity", [] { return weak_convexity_check(); });
  add(5, "ippm", [] { return ippm_check(); });
  add(11, "determinism", [&] { return determinism_check(scratch); });
  suite.small();
  if (level == Level::Full) {
    add(7, "qp slope", [&] { return qp_slope_check(suite); });
    add(8, "qp gradients", [&] { return qp_gradient_check(suite); });
    add(9, "gevp", [&] { return gevp_check(suite); });
    add(10, "basis pursuit", [&] { return basis_pursuit_check(suite); });
    add(12, "clustering", [&] { return clustering_check(suite); });
  }
  add(4, "multiplier bound", [&] { return multiplier_bound_check(suite); });
  add(6, "feasibility inequality", [&] { return feasibility_rate_check(suite); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

inline std::string format(const CheckResult& c) {
  std::ostringstream os;
  os << (c.passed ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << c.detail
     << " (" << io::label(c.seconds) << " s)";
  return os.str();
}

}  // namespace palm::checks
