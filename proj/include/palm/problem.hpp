#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "palm/sets.hpp"
#include "palm/types.hpp"

namespace palm {

/// Smoothness data over the feasible set feeding the Hölder and
/// weak-convexity moduli of the augmented Lagrangian.
struct SmoothnessConstants {
  double H_f = 0.0;
  double nu_f = 1.0;
  double H_A = 0.0;
  double nu_A = 1.0;
  double L_f = 0.0;
  double L_A = 0.0;
  double A_max = 0.0;
  double JA_max = 0.0;
  double gradf_max = 0.0;
  double D = kInf;
  /// True when D bounds a working region rather than the feasible set
  /// (unbounded sets).
  bool D_estimated = false;

  void validate() const {
    for (double c : {H_f, H_A, L_f, L_A, A_max, JA_max, gradf_max})
      require(c >= 0.0, "smoothness constants must be nonnegative");
    require(nu_f > 0.0 && nu_f <= 1.0 && nu_A > 0.0 && nu_A <= 1.0,
            "Hölder exponents must lie in (0, 1]");
    require(D > 0.0, "diameter must be positive");
  }
};

/// Differentiable scalar function given by value and gradient oracles.
struct Objective {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// Provenance of a generated instance; matrices are regenerable from it.
struct InstanceInfo {
  std::uint64_t seed = 0;
  std::string generator_version;
  std::map<std::string, double> params;
};

/// min_{x in X} f(x)  s.t.  A(x) = 0.
struct Problem {
  std::string family;
  Index n = 0;
  Index m = 0;
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad_f;
  std::function<Vec(const Vec&)> constraint;
  /// (x, v) -> J_A(x)^T v. Preferred over `jacobian` when both are set.
  std::function<Vec(const Vec&, const Vec&)> jt_product;
  /// Optional dense Jacobian, used only when no product oracle is given.
  std::function<Mat(const Vec&)> jacobian;
  ConvexSet set;
  SmoothnessConstants constants;
  std::optional<double> f_star;
  /// Seeded default starting point.
  Vec x_init;
  /// Lipschitz estimate of the classical (power one) augmented Lagrangian
  /// gradient at penalty beta and multiplier norm |y|; drives the automatic
  /// inner step size. Falls back to the Hölder modulus when empty.
  std::function<double(double beta, double y_norm)> lipschitz_hint;
  InstanceInfo info;

  Vec jt(const Vec& x, const Vec& v) const {
    require(v.size() == m, "multiplier dimension does not match constraint dimension");
    if (jt_product) return jt_product(x, v);
    require(static_cast<bool>(jacobian), "problem supplies neither J^T v products nor a Jacobian");
    return jacobian(x).transpose() * v;
  }

  void validate() const {
    require(n > 0 && m > 0, "problem dimensions must be positive");
    require(f && grad_f && constraint, "problem oracles are incomplete");
    require(jt_product || jacobian, "problem needs a Jacobian oracle");
    require(set.dim() == n, "feasible set dimension does not match problem");
    require(x_init.size() == n, "initial point has wrong dimension");
    constants.validate();
  }
};

}  // namespace palm
