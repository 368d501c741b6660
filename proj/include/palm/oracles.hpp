#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <type_traits>
#include <vector>

#include "palm/sets.hpp"
#include "palm/types.hpp"

// Reference computations for tests and acceptance checks. Nothing here is
// used by the solvers.
namespace palm::oracles {

struct FiniteDiffConfig {
  double h = 1e-6;
};

/// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h).
inline Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                            FiniteDiffConfig cfg = {}) {
  require(cfg.h > 0.0, "finite-difference step must be positive");
  Vec g(x.size());
  Vec probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + cfg.h;
    const double up = f(probe);
    probe[i] = x[i] - cfg.h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * cfg.h);
  }
  return g;
}

/// Lower-triangular L with B = L L^T. Throws when B is not SPD.
inline Mat cholesky_lower(const Mat& B) {
  require(B.rows() == B.cols(), "matrix must be square");
  const Index n = B.rows();
  Mat L = Mat::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = B(j, j);
    for (Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0.0)) throw Error("B not SPD");
    L(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      double s = B(i, j);
      for (Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

struct SymmetricEigen {
  Vec values;
  Mat vectors;  // columns
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass falls below
/// tol times the total.
inline SymmetricEigen jacobi_eigen(Mat A, double tol = 1e-12, int max_sweeps = 100) {
  require(A.rows() == A.cols(), "matrix must be square");
  const Index n = A.rows();
  Mat V = Mat::Identity(n, n);
  const double total = std::max(A.norm(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += 2.0 * A(p, q) * A(p, q);
    if (std::sqrt(off) <= tol * total) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  return {A.diagonal(), V};
}

struct GevpSolution {
  double lambda_min;
  Vec x_star;
};

/// Smallest eigenvalue of C x = lambda B x with x^T B x = 1.
inline GevpSolution dense_gevp_min(const Mat& C, const Mat& B) {
  require(C.rows() == C.cols() && B.rows() == B.cols() && C.rows() == B.rows(),
          "C and B must be square of equal size");
  const Index n = C.rows();
  const Mat L = cholesky_lower(B);

  // M = L^{-1} C L^{-T} by two triangular solves.
  auto lower_solve = [&](const Mat& rhs) {
    Mat X = rhs;
    for (Index c = 0; c < X.cols(); ++c)
      for (Index i = 0; i < n; ++i) {
        double s = X(i, c);
        for (Index k = 0; k < i; ++k) s -= L(i, k) * X(k, c);
        X(i, c) = s / L(i, i);
      }
    return X;
  };
  Mat M = lower_solve(lower_solve(C).transpose());
  M = 0.5 * (M + M.transpose());

  const auto eig = jacobi_eigen(M);
  Index imin = 0;
  for (Index i = 1; i < n; ++i)
    if (eig.values[i] < eig.values[imin]) imin = i;

  // x = L^{-T} u.
  Vec x = eig.vectors.col(imin);
  for (Index i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (Index k = i + 1; k < n; ++k) s -= L(k, i) * x[k];
    x[i] = s / L(i, i);
  }
  x /= std::sqrt(x.dot(B * x));
  return {eig.values[imin], x};
}

/// Generators of N_X(x) as unit vectors (cone = nonnegative combinations).
inline std::vector<Vec> normal_cone_generators(const ConvexSet& set, const Vec& x) {
  std::vector<Vec> gens;
  const Index n = x.size();
  auto unit = [n](Index i, double sign) {
    Vec e = Vec::Zero(n);
    e[i] = sign;
    return e;
  };
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, BoxSet>) {
          for (Index i = 0; i < n; ++i) {
            if (s.upper[i] - x[i] <= kActivityTol) gens.push_back(unit(i, 1.0));
            if (x[i] - s.lower[i] <= kActivityTol) gens.push_back(unit(i, -1.0));
          }
        } else if constexpr (std::is_same_v<S, BallSet>) {
          if (x.norm() >= s.radius - kActivityTol) gens.push_back(x.normalized());
        } else if constexpr (std::is_same_v<S, BallNonnegSet>) {
          if (x.norm() >= s.radius - kActivityTol) gens.push_back(x.normalized());
          for (Index i = 0; i < n; ++i)
            if (x[i] <= kActivityTol) gens.push_back(unit(i, -1.0));
        }
      },
      set.variant());
  return gens;
}

/// min ||v - sum_j a_j g_j|| over a_j in {0, R/(grid-1), ..., R}, R = 10||v||.
/// Grids nest when (grid - 1) doubles, so refinement never increases the value.
inline double brute_force_ncd(const ConvexSet& set, const Vec& x, const Vec& v, int grid) {
  require(x.size() <= 3, "brute-force normal-cone distance is limited to dimension <= 3");
  require(grid >= 2, "grid needs at least two points");
  const auto gens = normal_cone_generators(set, x);
  const double range = 10.0 * v.norm();
  if (gens.empty() || range == 0.0) return v.norm();

  const std::size_t g = gens.size();
  std::vector<int> idx(g, 0);
  double best = v.norm();
  while (true) {
    Vec w = v;
    for (std::size_t j = 0; j < g; ++j) w -= (range * idx[j] / (grid - 1)) * gens[j];
    best = std::min(best, w.norm());
    std::size_t j = 0;
    while (j < g && ++idx[j] == grid) idx[j++] = 0;
    if (j == g) break;
  }
  return best;
}

/// Box normal-cone distance through the Moreau decomposition: the norm of the
/// projection of v onto the tangent cone.
inline double box_ncd_tangent(const BoxSet& box, const Vec& x, const Vec& v) {
  double sq = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const bool up = box.upper[i] - x[i] <= kActivityTol;
    const bool lo = x[i] - box.lower[i] <= kActivityTol;
    double t = v[i];
    if (up && lo) t = 0.0;
    else if (up) t = std::min(v[i], 0.0);
    else if (lo) t = std::max(v[i], 0.0);
    sq += t * t;
  }
  return std::sqrt(sq);
}

}  // namespace palm::oracles
