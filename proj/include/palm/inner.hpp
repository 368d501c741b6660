#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "palm/problem.hpp"
#include "palm/sets.hpp"
#include "palm/types.hpp"

namespace palm {

/// Outcome of an inner solve. `residual_bound` is a certified upper bound on
/// dist(-grad psi(x), N_X(x)) at the returned x.
struct InnerReport {
  Vec x;
  double residual_bound = kInf;
  long iterations = 0;
  long grad_evals = 0;
  bool converged = false;
  /// Objective value after each restart cycle (FGM only).
  std::vector<double> cycle_values;
};

enum class InnerKind { APGM, IPPM, LBFGS };

inline std::string to_string(InnerKind k) {
  switch (k) {
    case InnerKind::APGM: return "apgm";
    case InnerKind::IPPM: return "ippm";
    case InnerKind::LBFGS: return "lbfgs";
  }
  return "unknown";
}

inline InnerKind parse_inner_kind(const std::string& s) {
  if (s == "apgm") return InnerKind::APGM;
  if (s == "ippm") return InnerKind::IPPM;
  if (s == "lbfgs") return InnerKind::LBFGS;
  throw Error("unknown inner solver '" + s + "' (expected apgm, ippm or lbfgs)");
}

struct InnerSolverConfig {
  InnerKind kind = InnerKind::APGM;
  /// Base step; empty means automatic (1 / Lipschitz estimate).
  std::optional<double> step_size;
  /// The working step is the base step divided by this factor.
  double step_shrink = 1.0;
  long max_iterations = 100000;
  /// Certificate step; empty means the tolerance-dependent cap.
  std::optional<double> certificate_gamma;
  /// Armijo-type backtracking on the quadratic upper model (halves the step).
  bool backtracking = false;
  /// Per-iteration trial increase of the step under backtracking.
  double step_growth = 1.0;
  /// Reset momentum when the step direction opposes the previous move.
  bool adaptive_restart = true;
  /// Proximal-point iterations allowed per IPPM call.
  long ippm_max_outer = 2000;
  /// Stored correction pairs for the L-BFGS kind.
  int lbfgs_memory = 10;

  void validate() const {
    require(max_iterations >= 1, "max_iterations must be at least 1");
    require(step_shrink >= 1.0, "step_shrink must be >= 1");
    require(step_growth >= 1.0, "step_growth must be >= 1");
    require(lbfgs_memory >= 1, "lbfgs_memory must be at least 1");
    if (step_size) require(*step_size > 0.0, "step size must be positive");
    if (certificate_gamma) require(*certificate_gamma > 0.0, "certificate gamma must be positive");
  }
};

/// argmin_{u in X} <g, u - x> + ||u - x||^2 / (2 gamma) = P_X(x - gamma g).
inline Vec prox_grad_step(const Vec& gradient_at_x, const ConvexSet& set, const Vec& x,
                          double gamma) {
  require(gamma > 0.0, "prox-gradient step needs gamma > 0");
  return set.project(x - gamma * gradient_at_x);
}

inline Vec prox_grad_step(const Objective& psi, const ConvexSet& set, const Vec& x, double gamma) {
  return prox_grad_step(psi.gradient(x), set, x, gamma);
}

struct StationarityBound {
  Vec x_bar;
  double bound;
};

/// One prox-gradient step from x; for (H, q)-Hölder gradients the stepped
/// point satisfies dist(-grad psi(x_bar), N_X(x_bar)) <= H d^q + d / gamma,
/// d = ||x_bar - x||.
inline StationarityBound stationarity_certificate(const Vec& gradient_at_x, const ConvexSet& set,
                                                  const Vec& x, double gamma, double H, double q) {
  Vec x_bar = prox_grad_step(gradient_at_x, set, x, gamma);
  if (gradient_at_x.lpNorm<Eigen::Infinity>() == 0.0) return {std::move(x_bar), 0.0};
  // Widen d by the rounding error of forming x - gamma g and projecting, so a
  // step below floating-point resolution cannot certify a false zero.
  const double scale = x.lpNorm<Eigen::Infinity>() + gamma * gradient_at_x.lpNorm<Eigen::Infinity>();
  const double d = (x_bar - x).norm() +
                   4.0 * std::numeric_limits<double>::epsilon() *
                       std::sqrt(static_cast<double>(x.size())) * scale;
  const double bound = H * std::pow(d, q) + d / gamma;
  return {std::move(x_bar), bound};
}

inline StationarityBound stationarity_certificate(const Objective& psi, const ConvexSet& set,
                                                  const Vec& x, double gamma, double H, double q) {
  return stationarity_certificate(psi.gradient(x), set, x, gamma, H, q);
}

/// Largest certificate step for which a gradient-mapping norm of tol/2 makes
/// the certified bound at most tol.
inline double certificate_step_cap(double tol, double H, double q) {
  if (H <= 0.0) return kInf;
  return std::pow(tol, (1.0 - q) / q) / std::pow(std::pow(2.0, 1.0 - q) * H, 1.0 / q);
}

namespace detail {

struct CountingGradient {
  const Objective& fn;
  long count = 0;
  Vec operator()(const Vec& x) {
    ++count;
    return fn.gradient(x);
  }
};

}  // namespace detail

/// Accelerated projected gradient (FISTA) with a monotone safeguard and a
/// per-iteration stationarity certificate. Returns the certified point.
inline InnerReport apgm_solve(const Objective& psi, const ConvexSet& set, const Vec& x0,
                              const InnerSolverConfig& cfg, double tol, double H, double q) {
  cfg.validate();
  require(tol > 0.0, "tolerance must be positive");
  require(H > 0.0 && q > 0.0 && q <= 1.0, "invalid Hölder modulus");

  detail::CountingGradient grad{psi};
  double step = (cfg.step_size ? *cfg.step_size : 1.0 / H) / cfg.step_shrink;
  const double cap = cfg.certificate_gamma ? *cfg.certificate_gamma : certificate_step_cap(tol, H, q);

  // The report always holds the latest certified point; on failure this keeps
  // the progress of the descent iterates instead of an early low-bound point.
  InnerReport last;
  auto certify = [&](const Vec& x, const Vec& g) {
    auto c = stationarity_certificate(g, set, x, std::min(step, cap), H, q);
    last.residual_bound = c.bound;
    last.x = std::move(c.x_bar);
    return last.residual_bound <= tol;
  };
  auto finish = [&](long iterations, bool converged) {
    last.iterations = iterations;
    last.grad_evals = grad.count;
    last.converged = converged;
    return last;
  };

  Vec x = set.project(x0);
  Vec gx = grad(x);
  if (certify(x, gx)) return finish(0, true);

  // Sufficient decrease against the quadratic model at `from`.
  auto model_ok = [&](const Vec& from, double f_from, const Vec& g_from, const Vec& to, double f_to,
                      double gamma) {
    const Vec d = to - from;
    return f_to <= f_from + g_from.dot(d) + d.squaredNorm() / (2.0 * gamma) +
                       1e-12 * std::abs(f_from);
  };
  auto forward_backward = [&](const Vec& from, double f_from, const Vec& g_from, double& f_to) {
    Vec to = set.project(from - step * g_from);
    f_to = psi.value(to);
    if (cfg.backtracking) {
      for (int tries = 0; tries < 60 && !model_ok(from, f_from, g_from, to, f_to, step); ++tries) {
        step *= 0.5;
        to = set.project(from - step * g_from);
        f_to = psi.value(to);
      }
    }
    return to;
  };

  double fx = psi.value(x);
  Vec x_prev = x;
  double t = 1.0;
  for (long it = 1; it <= cfg.max_iterations; ++it) {
    if (cfg.backtracking) step *= cfg.step_growth;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;

    Vec z;
    double fz = 0.0;
    bool extrapolated = momentum > 0.0;
    bool restart = false;
    if (extrapolated) {
      const Vec y = x + momentum * (x - x_prev);
      const Vec gy = grad(y);
      const double fy = cfg.backtracking ? psi.value(y) : 0.0;
      z = forward_backward(y, fy, gy, fz);
      if (fz > fx) extrapolated = false;  // reject, fall back to a plain step
      else restart = cfg.adaptive_restart && (y - z).dot(z - x) > 0.0;
    }
    if (!extrapolated) {
      z = forward_backward(x, fx, gx, fz);
      restart = momentum > 0.0;
    }
    t = restart ? 1.0 : t_next;

    x_prev = std::move(x);
    x = std::move(z);
    fx = fz;
    gx = grad(x);
    if (certify(x, gx)) return finish(it, true);
  }
  return finish(cfg.max_iterations, false);
}

/// Restarted fast gradient method for a rho-strongly convex, (H_F, nu)-Hölder
/// smooth objective, treating the Hölder gradient as an inexact Lipschitz
/// oracle. Each cycle ends with a certificate step of size
/// gamma = eps_bar^((1-nu)/(1+nu)) / H_F.
inline InnerReport fgm_sc_solve(const Objective& F, const ConvexSet& set, const Vec& x0, double rho,
                                double H_F, Power nu, double tol, long max_iterations) {
  require(rho > 0.0, "strong convexity modulus must be positive");
  require(H_F > 0.0 && tol > 0.0, "invalid FGM parameters");
  require(max_iterations >= 1, "max_iterations must be at least 1");

  const double nv = nu.value();
  const double kappa = 2.0 * H_F * (1.0 + H_F);
  const double H_bar = std::pow(H_F, 1.0 - nv) * std::pow(kappa, nv / 2.0) + std::sqrt(kappa);
  const double eps_bar = std::pow(tol / H_bar, (1.0 + nv) / nv);
  const double delta = eps_bar / 2.0;
  const double L = nu.is_one()
                       ? H_F
                       : std::pow(H_F, 2.0 / (1.0 + nv)) *
                             std::pow((1.0 - nv) / ((1.0 + nv) * delta), (1.0 - nv) / (1.0 + nv));
  const long cycle = static_cast<long>(std::ceil(std::sqrt(8.0 * L / rho)));
  const double gamma = std::pow(eps_bar, (1.0 - nv) / (1.0 + nv)) / H_F;

  detail::CountingGradient grad{F};
  InnerReport report;
  Vec x = set.project(x0);
  long iterations = 0;
  while (true) {
    auto cert = stationarity_certificate(grad(x), set, x, gamma, H_F, nv);
    report.cycle_values.push_back(F.value(x));
    if (cert.bound < report.residual_bound) {
      report.residual_bound = cert.bound;
      report.x = std::move(cert.x_bar);
    }
    if (report.residual_bound <= tol || iterations >= max_iterations) break;

    Vec x_prev = x, y = x;
    double t = 1.0;
    for (long j = 0; j < cycle && iterations < max_iterations; ++j, ++iterations) {
      Vec z = set.project(y - grad(y) / L);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = z + ((t - 1.0) / t_next) * (z - x_prev);
      x_prev = std::move(z);
      t = t_next;
    }
    x = std::move(x_prev);
  }
  report.iterations = iterations;
  report.grad_evals = grad.count;
  report.converged = report.residual_bound <= tol;
  return report;
}

/// Inexact proximal point method for a rho-weakly convex, (H, nu)-Hölder
/// smooth psi. Each step approximately minimizes psi + rho ||. - x_t||^2 to
/// residual tol/4; stops once 2 rho ||x_{t+1} - x_t|| <= tol/2.
/// `diameter` overrides the set diameter in the Hölder modulus of the
/// proximal subproblem (needed for unbounded sets when nu < 1).
inline InnerReport ippm_solve(const Objective& psi, const ConvexSet& set, const Vec& x0, double rho,
                              double H, Power nu, double tol, long max_outer,
                              long fgm_max_iterations = 1000000,
                              std::optional<double> diameter = std::nullopt) {
  require(rho > 0.0, "weak convexity modulus must be positive");
  require(tol > 0.0, "tolerance must be positive");
  require(max_outer >= 1, "max_outer must be at least 1");
  const double D = diameter ? *diameter : set.diameter();
  const double spread = nu.is_one() ? 1.0 : std::max(1.0, std::pow(D, 1.0 - nu));
  require(std::isfinite(spread), "compactness required");
  const double H_F = H + 2.0 * rho * spread;

  InnerReport report;
  Vec x = set.project(x0);
  for (long t = 1; t <= max_outer; ++t) {
    const Vec center = x;
    const Objective F{
        [&psi, &center, rho](const Vec& u) { return psi.value(u) + rho * (u - center).squaredNorm(); },
        [&psi, &center, rho](const Vec& u) -> Vec {
          return psi.gradient(u) + 2.0 * rho * (u - center);
        },
    };
    const InnerReport sub = fgm_sc_solve(F, set, x, rho, H_F, nu, tol / 4.0, fgm_max_iterations);
    report.grad_evals += sub.grad_evals;
    report.iterations = t;
    const double move = (sub.x - x).norm();
    x = sub.x;
    report.x = x;
    report.residual_bound = sub.residual_bound + 2.0 * rho * move;
    if (!sub.converged) return report;
    if (2.0 * rho * move <= tol / 2.0) {
      report.converged = true;
      return report;
    }
  }
  return report;
}

}  // namespace palm
