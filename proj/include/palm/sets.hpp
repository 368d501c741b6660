#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "palm/types.hpp"

namespace palm {

/// A bound (box side, ball boundary, orthant face) counts as active when the
/// point is within this absolute distance of it.
inline constexpr double kActivityTol = 1e-9;

/// Membership tolerance used as the precondition of normal-cone queries.
inline constexpr double kMembershipTol = 1e-12;

/// { x : lower <= x <= upper }.
struct BoxSet {
  Vec lower;
  Vec upper;

  BoxSet(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    require(lower.size() == upper.size(), "box bounds differ in dimension");
    require((lower.array() <= upper.array()).all(), "box requires lower <= upper");
  }

  static BoxSet uniform(Index n, double lo, double hi) {
    return BoxSet(Vec::Constant(n, lo), Vec::Constant(n, hi));
  }

  Index dim() const { return lower.size(); }

  Vec project(const Vec& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

  double normal_cone_dist(const Vec& x, const Vec& v) const {
    double sq = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      const bool at_upper = upper[i] - x[i] <= kActivityTol;
      const bool at_lower = x[i] - lower[i] <= kActivityTol;
      double r;
      if (at_upper && at_lower)
        r = 0.0;  // degenerate side: normal cone is the whole line
      else if (at_upper)
        r = std::max(0.0, -v[i]);
      else if (at_lower)
        r = std::max(0.0, v[i]);
      else
        r = v[i];
      sq += r * r;
    }
    return std::sqrt(sq);
  }

  double diameter() const { return (upper - lower).norm(); }
};

/// Euclidean ball of the given radius centred at the origin.
struct BallSet {
  Index dimension;
  double radius;

  BallSet(Index n, double r) : dimension{n}, radius{r} {
    require(n > 0, "ball dimension must be positive");
    require(r > 0.0, "ball radius must be positive");
  }

  Index dim() const { return dimension; }

  Vec project(const Vec& x) const {
    const double nx = x.norm();
    return nx > radius ? Vec(x * (radius / nx)) : x;
  }

  double normal_cone_dist(const Vec& x, const Vec& v) const {
    const double nx = x.norm();
    if (nx < radius - kActivityTol) return v.norm();
    const double alpha = std::max(0.0, v.dot(x) / (nx * nx));
    return (v - alpha * x).norm();
  }

  double diameter() const { return 2.0 * radius; }
};

/// { x >= 0 } intersected with the Euclidean ball of the given radius.
struct BallNonnegSet {
  Index dimension;
  double radius;

  BallNonnegSet(Index n, double r) : dimension{n}, radius{r} {
    require(n > 0, "set dimension must be positive");
    require(r > 0.0, "ball radius must be positive");
  }

  Index dim() const { return dimension; }

  Vec project(const Vec& x) const {
    Vec p = x.cwiseMax(0.0);
    const double np = p.norm();
    if (np > radius) p *= radius / np;
    return p;
  }

  // N_X(x) = cone{x} (ball active) + cone{-e_i : x_i = 0}. After zeroing the
  // active coordinates the two generator families have disjoint supports, so
  // the projection onto the sum splits into a ray projection on the free
  // coordinates and a sign clamp on the active ones.
  double normal_cone_dist(const Vec& x, const Vec& v) const {
    const bool ball_active = x.norm() >= radius - kActivityTol;
    double sq = 0.0;
    Vec free_x = Vec::Zero(x.size());
    Vec free_v = Vec::Zero(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      if (x[i] <= kActivityTol) {
        const double r = std::max(0.0, v[i]);
        sq += r * r;
      } else {
        free_x[i] = x[i];
        free_v[i] = v[i];
      }
    }
    const double nf = free_x.squaredNorm();
    if (ball_active && nf > 0.0) {
      const double alpha = std::max(0.0, free_v.dot(free_x) / nf);
      sq += (free_v - alpha * free_x).squaredNorm();
    } else {
      sq += free_v.squaredNorm();
    }
    return std::sqrt(sq);
  }

  // Upper bound; only feeds smoothness moduli.
  double diameter() const { return 2.0 * radius; }
};

/// Unconstrained R^n.
struct WholeSpace {
  Index dimension;

  explicit WholeSpace(Index n) : dimension{n} { require(n > 0, "dimension must be positive"); }

  Index dim() const { return dimension; }
  Vec project(const Vec& x) const { return x; }
  double normal_cone_dist(const Vec&, const Vec& v) const { return v.norm(); }
  double diameter() const { return kInf; }
};

/// Closed convex feasible set with value semantics.
class ConvexSet {
 public:
  using Variant = std::variant<BoxSet, BallSet, BallNonnegSet, WholeSpace>;

  template <typename S>
    requires std::is_constructible_v<Variant, S>
  ConvexSet(S s) : set_(std::move(s)) {}  // NOLINT: implicit by design of the variant wrapper

  Index dim() const {
    return std::visit([](const auto& s) { return s.dim(); }, set_);
  }

  /// Euclidean projection onto the set.
  Vec project(const Vec& x) const {
    check_dim(x);
    return std::visit([&](const auto& s) { return s.project(x); }, set_);
  }

  bool contains(const Vec& x, double tol = kMembershipTol) const {
    check_dim(x);
    return (x - project(x)).lpNorm<Eigen::Infinity>() <= tol * (1.0 + x.lpNorm<Eigen::Infinity>());
  }

  /// min_{w in N_X(x)} ||v - w||. Requires x in the set.
  double normal_cone_dist(const Vec& x, const Vec& v) const {
    check_dim(x);
    require(v.size() == x.size(), "normal-cone direction has wrong dimension");
    if (!contains(x)) throw Error("point not in set");
    return std::visit([&](const auto& s) { return s.normal_cone_dist(x, v); }, set_);
  }

  /// sup ||x - x'|| over the set; +inf when unbounded.
  double diameter() const {
    return std::visit([](const auto& s) { return s.diameter(); }, set_);
  }

  bool bounded() const { return std::isfinite(diameter()); }

  std::string kind() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, BoxSet>) return "box";
          else if constexpr (std::is_same_v<S, BallSet>) return "ball";
          else if constexpr (std::is_same_v<S, BallNonnegSet>) return "ball_nonneg";
          else return "whole_space";
        },
        set_);
  }

  const Variant& variant() const { return set_; }

 private:
  void check_dim(const Vec& x) const {
    require(x.size() == dim(), "point dimension " + std::to_string(x.size()) +
                                   " does not match set dimension " + std::to_string(dim()));
  }

  Variant set_;
};

}  // namespace palm
