#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "palm/core_al.hpp"
#include "palm/inner.hpp"
#include "palm/lbfgs.hpp"
#include "palm/problem.hpp"
#include "palm/types.hpp"

namespace palm {

/// Multiplier paired with x^{k+1} in the stationarity certificate.
/// Updated: y^{k+1} + beta_k grad phi(A(x^{k+1})).
/// Inner:   y^k + beta_k grad phi(A(x^{k+1})), the multiplier of the inner
///          stationarity condition, so dres <= eps_{k+1} holds by construction.
enum class CertificateMultiplier { Updated, Inner };

inline std::string to_string(CertificateMultiplier c) {
  return c == CertificateMultiplier::Updated ? "updated" : "inner";
}

inline CertificateMultiplier parse_certificate_multiplier(const std::string& s) {
  if (s == "updated") return CertificateMultiplier::Updated;
  if (s == "inner") return CertificateMultiplier::Inner;
  throw Error("unknown certificate multiplier '" + s + "' (expected updated or inner)");
}

struct IpalmConfig {
  /// Empty means the problem's seeded initial point.
  std::optional<Vec> x1;
  /// Empty means zero.
  std::optional<Vec> y1;
  double lambda = 1.0;
  double omega = 3.0;
  double sigma1 = 10.0;
  double beta1 = 0.01;
  Power nu{1.0};
  double eps_f = 1e-3;
  double eps_A = 1e-3;
  InnerSolverConfig inner;
  long max_outer = 100;
  /// Stop at the first inner solve that misses its tolerance. When false the
  /// best certified inner point is accepted and the loop continues.
  bool abort_on_inner_failure = true;
  CertificateMultiplier certificate_multiplier = CertificateMultiplier::Updated;

  void validate() const {
    require(lambda > 0.0, "lambda must be positive");
    require(omega > 1.0, "omega must exceed 1");
    require(sigma1 > 0.0, "sigma1 must be positive");
    require(beta1 > 0.0, "beta1 must be positive");
    require(eps_f > 0.0 && eps_A > 0.0, "tolerances must be positive");
    require(max_outer >= 1, "max_outer must be at least 1");
    inner.validate();
  }
};

/// One outer iteration k: quantities at x^{k+1}, y^{k+1}.
struct OuterRecord {
  long k = 0;
  double beta = 0.0;   // beta_k
  double eps = 0.0;    // eps_{k+1} = lambda / beta_k
  double sigma = 0.0;  // sigma_{k+1}
  double pres = 0.0;   // ||A(x^{k+1})||
  double dres = 0.0;   // certificate dual residual at x^{k+1}
  double dres_updated = 0.0;
  double dres_inner = 0.0;
  double f = 0.0;
  double ynorm = 0.0;  // ||y^{k+1}||
  long inner_iters = 0;
  long inner_grad_evals = 0;
  long grad_evals_cum = 0;
  double inner_bound = 0.0;
  bool inner_converged = true;
};

struct OuterTrace {
  Power nu{1.0};
  double omega = 0.0;
  double beta1 = 0.0;
  double lambda = 0.0;
  double sigma1 = 0.0;
  CertificateMultiplier multiplier = CertificateMultiplier::Updated;
  Vec x1;
  Vec y1;
  double a1_norm = 0.0;
  std::vector<OuterRecord> records;
  /// xs[i] = x^{k+1}, ys_before[i] = y^k, ys[i] = y^{k+1} for records[i].
  std::vector<Vec> xs;
  std::vector<Vec> ys_before;
  std::vector<Vec> ys;

  long total_grad_evals() const { return records.empty() ? 0 : records.back().grad_evals_cum; }
};

struct Certificate {
  Vec x;
  Vec y_cert;
  double pres = kInf;
  double dres = kInf;
  CertificateMultiplier multiplier = CertificateMultiplier::Updated;
};

enum class SolveStatus { Converged, MaxOuter, InnerFailure };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxOuter: return "max_outer";
    case SolveStatus::InnerFailure: return "inner_failure";
  }
  return "unknown";
}

struct IpalmResult {
  Certificate certificate;
  OuterTrace trace;
  SolveStatus status = SolveStatus::MaxOuter;
  std::string diagnostic;
  double wall_ms = 0.0;

  bool converged() const { return status == SolveStatus::Converged; }
};

/// sigma_{k+1} = sigma1 min(1, a1^nu ln^2 2 / (ak1^nu (k+1) ln^2(k+2))).
inline double dual_step_size(double sigma1, double a1_norm, double ak1_norm, long k, Power nu) {
  require(k >= 1, "outer iteration index starts at 1");
  require(a1_norm >= 0.0 && ak1_norm >= 0.0, "norms must be nonnegative");
  if (ak1_norm == 0.0) return sigma1;
  const double ln2 = std::log(2.0);
  const double lk = std::log(static_cast<double>(k) + 2.0);
  const double ratio = std::pow(a1_norm, nu.value()) * ln2 * ln2 /
                       (std::pow(ak1_norm, nu.value()) * (static_cast<double>(k) + 1.0) * lk * lk);
  return sigma1 * std::min(1.0, ratio);
}

inline Vec multiplier_update(const Vec& y, double sigma, const Vec& ax, Power nu) {
  require(y.size() == ax.size(), "multiplier and constraint dimensions differ");
  return y + sigma * phi_grad(ax, nu);
}

/// sum_{i>=2} 1 / (i ln^2(i+1)): partial sum to 1e6 plus the integral tail
/// int_{1e6}^inf dx / (x ln^2 x) = 1 / ln(1e6), which dominates the remainder.
inline double multiplier_series_constant() {
  static const double c = [] {
    constexpr long kTerms = 1000000;
    double s = 0.0;
    for (long i = kTerms; i >= 2; --i) {  // small terms first
      const double l = std::log(static_cast<double>(i) + 1.0);
      s += 1.0 / (static_cast<double>(i) * l * l);
    }
    return s + 1.0 / std::log(static_cast<double>(kTerms));
  }();
  return c;
}

/// Upper bound on ||y^k|| for every k.
inline double y_max_bound(double y1_norm, double sigma1, double a1_norm, Power nu = Power{1.0}) {
  require(y1_norm >= 0.0 && sigma1 >= 0.0 && a1_norm >= 0.0, "inputs must be nonnegative");
  if (a1_norm == 0.0) return y1_norm;
  const double ln2 = std::log(2.0);
  return y1_norm + multiplier_series_constant() * sigma1 * std::pow(a1_norm, nu.value()) * ln2 * ln2;
}

struct Residuals {
  double pres;
  double dres;
};

inline Residuals stationarity_residuals(const Problem& problem, const Vec& x, const Vec& y) {
  const Vec ax = problem.constraint(x);
  const Vec v = -(problem.grad_f(x) + problem.jt(x, y));
  return {ax.norm(), problem.set.normal_cone_dist(x, v)};
}

/// Inner step-size base at (beta, |y|).
inline double inner_step_base(const Problem& problem, double beta, double y_norm) {
  if (problem.lipschitz_hint) return 1.0 / problem.lipschitz_hint(beta, y_norm);
  return 1.0 / holder_modulus(problem.constants, y_norm, beta, Power{1.0}).H;
}

inline IpalmResult ipalm_solve(const Problem& problem, const IpalmConfig& cfg) {
  problem.validate();
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  IpalmResult result;
  OuterTrace& trace = result.trace;
  const Power nu = cfg.nu;
  Vec x = problem.set.project(cfg.x1 ? *cfg.x1 : problem.x_init);
  Vec y = cfg.y1 ? *cfg.y1 : Vec::Zero(problem.m);
  require(x.size() == problem.n, "x1 has wrong dimension");
  require(y.size() == problem.m, "y1 has wrong dimension");

  trace.nu = nu;
  trace.omega = cfg.omega;
  trace.beta1 = cfg.beta1;
  trace.lambda = cfg.lambda;
  trace.sigma1 = cfg.sigma1;
  trace.multiplier = cfg.certificate_multiplier;
  trace.x1 = x;
  trace.y1 = y;
  trace.a1_norm = problem.constraint(x).norm();

  auto finish = [&](SolveStatus status, std::string diagnostic) -> IpalmResult {
    result.status = status;
    result.diagnostic = std::move(diagnostic);
    result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               started)
                         .count();
    return std::move(result);
  };

  long grads = 0;
  for (long k = 1; k <= cfg.max_outer; ++k) {
    // Closed form rather than repeated multiplication, so beta_k carries no drift.
    const double beta = cfg.beta1 * std::pow(cfg.omega, static_cast<double>(k - 1));
    const double eps = cfg.lambda / beta;
    const double y_norm = y.norm();
    const ALParams params{nu, beta, y};
    const Objective psi = al_objective(problem, params);

    InnerReport inner;
    if (cfg.inner.kind == InnerKind::APGM) {
      const auto hm = holder_modulus(problem.constants, y_norm, beta, nu);
      InnerSolverConfig ic = cfg.inner;
      if (!ic.step_size) ic.step_size = inner_step_base(problem, beta, y_norm);
      inner = apgm_solve(psi, problem.set, x, ic, eps, hm.H, hm.q);
    } else if (cfg.inner.kind == InnerKind::LBFGS) {
      inner = lbfgs_solve(psi, problem.set, x, cfg.inner, eps);
    } else {
      const auto hm = holder_modulus(problem.constants, y_norm, beta, nu);
      const double rho = weak_convexity_modulus(problem.constants, y_norm, beta, nu);
      inner = ippm_solve(psi, problem.set, x, rho, hm.H, Power{hm.q}, eps, cfg.inner.ippm_max_outer,
                         cfg.inner.max_iterations, problem.constants.D);
    }
    grads += inner.grad_evals;

    const Vec x_next = inner.x;
    const Vec ax = problem.constraint(x_next);
    const double ak1 = ax.norm();
    const double sigma = dual_step_size(cfg.sigma1, trace.a1_norm, ak1, k, nu);
    const Vec y_next = multiplier_update(y, sigma, ax, nu);

    const Vec penalty = beta * phi_grad(ax, nu);
    const Vec y_updated = y_next + penalty;
    const Vec y_inner = y + penalty;
    const double dres_updated = stationarity_residuals(problem, x_next, y_updated).dres;
    const double dres_inner = stationarity_residuals(problem, x_next, y_inner).dres;

    Certificate cert;
    cert.x = x_next;
    cert.multiplier = cfg.certificate_multiplier;
    const bool use_updated = cfg.certificate_multiplier == CertificateMultiplier::Updated;
    cert.y_cert = use_updated ? y_updated : y_inner;
    cert.pres = ak1;
    cert.dres = use_updated ? dres_updated : dres_inner;

    OuterRecord rec;
    rec.k = k;
    rec.beta = beta;
    rec.eps = eps;
    rec.sigma = sigma;
    rec.pres = cert.pres;
    rec.dres = cert.dres;
    rec.dres_updated = dres_updated;
    rec.dres_inner = dres_inner;
    rec.f = problem.f(x_next);
    rec.ynorm = y_next.norm();
    rec.inner_iters = inner.iterations;
    rec.inner_grad_evals = inner.grad_evals;
    rec.grad_evals_cum = grads;
    rec.inner_bound = inner.residual_bound;
    rec.inner_converged = inner.converged;
    trace.records.push_back(rec);
    trace.xs.push_back(x_next);
    trace.ys_before.push_back(y);
    trace.ys.push_back(y_next);
    result.certificate = std::move(cert);

    if (!inner.converged && cfg.abort_on_inner_failure) {
      return finish(SolveStatus::InnerFailure,
                    "inner solver missed tolerance " + std::to_string(eps) + " at outer iteration " +
                        std::to_string(k) + " (best bound " + std::to_string(inner.residual_bound) +
                        ")");
    }
    if (result.certificate.pres <= cfg.eps_A && result.certificate.dres <= cfg.eps_f)
      return finish(SolveStatus::Converged, "");

    x = x_next;
    y = y_next;
  }
  return finish(SolveStatus::MaxOuter, "outer iteration limit reached");
}

struct RegularityEstimate {
  double v_hat = kInf;
  /// True when no recorded iterate was infeasible enough to contribute.
  bool all_feasible = true;
};

/// Smallest observed dist(-J^T A, N_X) / ||A|| over the recorded iterates.
inline RegularityEstimate regularity_estimate(const Problem& problem, const OuterTrace& trace) {
  require(!trace.xs.empty(), "trace is empty");
  RegularityEstimate est;
  for (const Vec& x : trace.xs) {
    const Vec ax = problem.constraint(x);
    const double na = ax.norm();
    if (na <= 1e-10) continue;
    const double d = problem.set.normal_cone_dist(x, -problem.jt(x, ax));
    est.v_hat = std::min(est.v_hat, d / na);
    est.all_feasible = false;
  }
  return est;
}

struct RateReport {
  long checked = 0;
  long violations = 0;
  /// Per-record lhs / rhs of the feasibility inequality.
  std::vector<double> ratios;
  std::optional<double> slope;
  double predicted_slope = 0.0;
};

/// Checks ||A(x^{k+1})||^nu <= (||grad f|| + ||J^T y^k|| + e) / (v beta_k) at every
/// record, where e is the certified inner residual (eps_{k+1} when the inner
/// solve met it), and fits ln||A(x^k)|| against k on the last half.
inline RateReport rate_check(const Problem& problem, const OuterTrace& trace, double v_hat) {
  require(std::isfinite(v_hat) && v_hat > 0.0, "regularity estimate must be finite and positive");
  RateReport report;
  report.predicted_slope = -std::log(trace.omega) / trace.nu.value();
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    const Vec& x = trace.xs[i];
    const double lhs = std::pow(problem.constraint(x).norm(), trace.nu.value());
    const double e = std::max(r.eps, r.inner_bound);
    const double rhs = (problem.grad_f(x).norm() + problem.jt(x, trace.ys_before[i]).norm() + e) /
                       (v_hat * r.beta);
    ++report.checked;
    report.ratios.push_back(rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0));
    if (lhs > rhs * (1.0 + 1e-9)) ++report.violations;
  }

  const std::size_t n = trace.records.size();
  std::vector<double> ks, ls;
  for (std::size_t i = n / 2; i < n; ++i) {
    if (trace.records[i].pres <= 0.0) continue;
    ks.push_back(static_cast<double>(trace.records[i].k));
    ls.push_back(std::log(trace.records[i].pres));
  }
  if (ks.size() >= 2) {
    double mk = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      mk += ks[i];
      ml += ls[i];
    }
    mk /= static_cast<double>(ks.size());
    ml /= static_cast<double>(ks.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      sxy += (ks[i] - mk) * (ls[i] - ml);
      sxx += (ks[i] - mk) * (ks[i] - mk);
    }
    report.slope = sxy / sxx;
  }
  return report;
}

}  // namespace palm
