#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "palm/problem.hpp"
#include "palm/types.hpp"

namespace palm {

/// phi(r) = ||r||^(nu+1) / (nu+1).
inline double phi_value(const Vec& r, Power nu) {
  return std::pow(r.norm(), nu + 1.0) / (nu + 1.0);
}

/// grad phi(r) = r / ||r||^(1-nu), and exactly zero at r = 0.
inline Vec phi_grad(const Vec& r, Power nu) {
  const double nr = r.norm();
  if (nr == 0.0) return Vec::Zero(r.size());
  if (nu.is_one()) return r;
  return r * std::pow(nr, nu - 1.0);
}

/// Parameters (nu, beta, y) of the power augmented Lagrangian.
struct ALParams {
  Power nu;
  double beta;
  Vec y;

  ALParams(Power power, double penalty, Vec multiplier)
      : nu{power}, beta{penalty}, y{std::move(multiplier)} {
    require(beta > 0.0, "penalty parameter must be positive");
  }
};

namespace detail {
inline void check_al_dims(const Problem& p, const Vec& x, const ALParams& a) {
  require(x.size() == p.n, "point dimension does not match problem");
  require(a.y.size() == p.m, "multiplier dimension does not match constraint dimension");
}
}  // namespace detail

/// L_beta(x, y) = f(x) + <y, A(x)> + beta * phi(A(x)).
inline double al_value(const Problem& problem, const Vec& x, const ALParams& p) {
  detail::check_al_dims(problem, x, p);
  const Vec ax = problem.constraint(x);
  return problem.f(x) + p.y.dot(ax) + p.beta * phi_value(ax, p.nu);
}

/// grad f(x) + J_A(x)^T (y + beta * grad phi(A(x))), one J^T-product.
inline Vec al_grad(const Problem& problem, const Vec& x, const ALParams& p) {
  detail::check_al_dims(problem, x, p);
  const Vec ax = problem.constraint(x);
  const Vec w = p.y + p.beta * phi_grad(ax, p.nu);
  return problem.grad_f(x) + problem.jt(x, w);
}

/// The map x -> L_beta(x, y) as a value/gradient oracle. Captures by value.
inline Objective al_objective(const Problem& problem, const ALParams& p) {
  return Objective{
      [problem, p](const Vec& x) { return al_value(problem, x, p); },
      [problem, p](const Vec& x) { return al_grad(problem, x, p); },
  };
}

struct HolderModulus {
  double H;
  double q;
};

/// (H_beta, q) such that grad_x L_beta(., y) is q-Hölder with constant H_beta
/// on the feasible set. Needs a finite diameter.
inline HolderModulus holder_modulus(const SmoothnessConstants& c, double y_norm, double beta,
                                    Power nu) {
  if (!std::isfinite(c.D)) throw Error("compactness required");
  const double q = std::min({c.nu_f, c.nu_A, nu.value()});
  const double penalty = std::pow(2.0, 1.0 - nu) * std::pow(c.JA_max, 1.0 + nu) +
                         std::pow(c.A_max, nu.value()) * c.H_A;
  const double scale = std::max(1.0, std::pow(c.D, 1.0 - q));
  return {(c.H_f + c.H_A * y_norm + beta * penalty) * scale, q};
}

/// rho = L_f + L_A (|y| + beta A_max^nu).
inline double weak_convexity_modulus(const SmoothnessConstants& c, double y_norm, double beta,
                                     Power nu) {
  return c.L_f + c.L_A * (y_norm + beta * std::pow(c.A_max, nu.value()));
}

}  // namespace palm
