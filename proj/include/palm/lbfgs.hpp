#pragma once

#include <algorithm>
#include <cmath>
#include <deque>

#include "palm/inner.hpp"

namespace palm {

namespace detail {

struct LinePoint {
  double alpha;
  double value;
  double slope;
  Vec x;
  Vec g;
};

/// Bracketing line search accepting either the Wolfe conditions or their
/// approximate form (slope test only, value within a relative band). The
/// approximate form keeps progress once value differences reach rounding.
template <typename Eval>
std::optional<LinePoint> wolfe_search(Eval&& eval, const Vec& x, double f0, double d0,
                                      const Vec& dir, double alpha, long& budget) {
  constexpr double c1 = 0.1, c2 = 0.9, rel = 1e-10;
  const double band = rel * std::abs(f0);
  double lo = 0.0, hi = kInf;
  for (int tries = 0; tries < 60 && budget > 0; ++tries) {
    LinePoint p{alpha, 0.0, 0.0, x + alpha * dir, Vec{}};
    p.value = eval(p.x, p.g);
    --budget;
    if (!std::isfinite(p.value)) {
      hi = alpha;
    } else {
      p.slope = p.g.dot(dir);
      const bool curvature = p.slope >= c2 * d0;
      const bool wolfe = p.value <= f0 + c1 * alpha * d0 && curvature;
      const bool approx = p.value <= f0 + band && curvature && p.slope <= (2.0 * c1 - 1.0) * d0;
      if (wolfe || approx) return p;
      if (p.value > f0 + band || p.slope >= 0.0) hi = alpha;
      else lo = alpha;
    }
    alpha = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * alpha;
    if (std::isfinite(hi) && hi - lo <= 1e-16 * hi) break;
  }
  return std::nullopt;
}

}  // namespace detail

/// Limited-memory BFGS for subproblems over the whole space. max_iterations
/// caps value-and-gradient evaluations. Since N_X = {0}, the reported bound is
/// the exact gradient norm at the returned point.
inline InnerReport lbfgs_solve(const Objective& psi, const ConvexSet& set, const Vec& x0,
                               const InnerSolverConfig& cfg, double tol) {
  cfg.validate();
  require(tol > 0.0, "tolerance must be positive");
  require(set.kind() == "whole_space", "L-BFGS inner solver needs an unconstrained subproblem");

  long budget = cfg.max_iterations;
  auto eval = [&](const Vec& x, Vec& g) {
    g = psi.gradient(x);
    return psi.value(x);
  };

  InnerReport report;
  Vec x = x0, g;
  double f = eval(x, g);
  --budget;
  std::deque<std::pair<Vec, Vec>> pairs;  // (s, y), newest last
  long it = 0;
  while (g.norm() > tol && budget > 0) {
    // Two-loop recursion for dir = -H g.
    Vec q = g;
    std::vector<double> a(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      const auto& [s, yv] = pairs[i];
      a[i] = s.dot(q) / yv.dot(s);
      q -= a[i] * yv;
    }
    if (!pairs.empty()) {
      const auto& [s, yv] = pairs.back();
      q *= s.dot(yv) / yv.squaredNorm();
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, yv] = pairs[i];
      q += (a[i] - yv.dot(q) / yv.dot(s)) * s;
    }
    Vec dir = -q;
    double d0 = g.dot(dir);
    if (!(d0 < 0.0)) {
      pairs.clear();
      dir = -g;
      d0 = -g.squaredNorm();
    }
    const double alpha0 = pairs.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    auto p = detail::wolfe_search(eval, x, f, d0, dir, alpha0, budget);
    if (!p) {
      if (pairs.empty()) break;
      pairs.clear();  // retry from steepest descent
      continue;
    }
    Vec s = p->x - x, yv = p->g - g;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      pairs.emplace_back(std::move(s), std::move(yv));
      if (static_cast<int>(pairs.size()) > cfg.lbfgs_memory) pairs.pop_front();
    }
    x = std::move(p->x);
    g = std::move(p->g);
    f = p->value;
    ++it;
  }

  report.residual_bound = g.norm();
  report.converged = report.residual_bound <= tol;
  report.iterations = it;
  report.grad_evals = cfg.max_iterations - budget;
  report.x = std::move(x);
  return report;
}

}  // namespace palm
