#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "palm/oracles.hpp"
#include "palm/problem.hpp"
#include "palm/rng.hpp"
#include "palm/sets.hpp"
#include "palm/types.hpp"

namespace palm {

/// Largest absolute eigenvalue of a symmetric matrix.
inline double sym_norm(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Spectral norm of a general matrix.
inline double spectral_norm(const Mat& M) {
  return std::sqrt(M.rows() <= M.cols() ? sym_norm(M * M.transpose()) : sym_norm(M.transpose() * M));
}

namespace detail {
inline InstanceInfo make_info(std::uint64_t seed, std::map<std::string, double> params) {
  return InstanceInfo{seed, std::string(Rng::kVersion), std::move(params)};
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Nonconvex QP over a box: f = x'Qx/2 + q'x, A(x) = Cx - b, X = [-5, 5]^n.

struct QpData {
  Mat Q;
  Vec q;
  Mat C;
  Vec b;
  Vec mu;
  Mat CtC;
};

inline Problem qp_generate(Index n, Index m, Seeded seed) {
  require(n >= m && m >= 1, "qp requires n >= m >= 1");
  Rng rng(seed);
  auto d = std::make_shared<QpData>();
  const Vec lambda = rng.normal_vector(n, 50.0);
  const Mat sigma = rng.normal_matrix(n, n);
  d->q = rng.normal_vector(n, 2.0);
  d->C = rng.normal_matrix(m, n);
  d->mu = rng.normal_vector(n);
  d->b = d->C * d->mu;

  const Mat sh = sigma / spectral_norm(sigma);
  const Mat Q = sh.transpose() * lambda.asDiagonal() * sh;
  d->Q = 0.5 * (Q + Q.transpose());
  d->CtC = d->C.transpose() * d->C;

  const double q_norm = sym_norm(d->Q);
  const double c_norm = spectral_norm(d->C);
  const double x_max = 5.0 * std::sqrt(static_cast<double>(n));

  SmoothnessConstants c;
  c.H_f = c.L_f = q_norm;
  c.H_A = c.L_A = 0.0;
  c.JA_max = c_norm;
  c.A_max = c_norm * x_max + d->b.norm();
  c.gradf_max = q_norm * x_max + d->q.norm();
  c.D = 10.0 * std::sqrt(static_cast<double>(n));

  Problem p{
      .family = "qp",
      .n = n,
      .m = m,
      .f = [d](const Vec& x) { return 0.5 * x.dot(d->Q * x) + d->q.dot(x); },
      .grad_f = [d](const Vec& x) -> Vec { return d->Q * x + d->q; },
      .constraint = [d](const Vec& x) -> Vec { return d->C * x - d->b; },
      .jt_product = [d](const Vec&, const Vec& v) -> Vec { return d->C.transpose() * v; },
      .jacobian = [d](const Vec&) -> Mat { return d->C; },
      .set = BoxSet::uniform(n, -5.0, 5.0),
      .constants = c,
      .f_star = std::nullopt,
      .x_init = Vec::Zero(n),
      .lipschitz_hint = [d](double beta, double) { return sym_norm(d->Q + beta * d->CtC); },
      .info = detail::make_info(seed.seed, {{"n", double(n)}, {"m", double(m)}}),
  };
  return p;
}

// ---------------------------------------------------------------------------
// Generalized eigenvalue problem: f = x'Cx, A(x) = x'Bx - 1, X = R^n.

enum class GevpB { AsPaper, Triangular };

inline std::string to_string(GevpB b) { return b == GevpB::AsPaper ? "as_paper" : "triangular"; }

inline GevpB parse_gevp_b(const std::string& s) {
  if (s == "as_paper") return GevpB::AsPaper;
  if (s == "triangular") return GevpB::Triangular;
  throw Error("unknown gevp_b value '" + s + "' (expected as_paper or triangular)");
}

struct GevpData {
  Mat C;
  Mat B;
  Vec x_star;
  double lambda_min = 0.0;
};

namespace detail {
inline std::pair<Mat, Mat> gevp_draw(Rng& rng, Index n, GevpB b_kind) {
  const Mat c_hat = rng.normal_matrix(n, n, 0.1);
  const Mat M = rng.uniform_matrix(n, n);
  Eigen::HouseholderQR<Mat> qr(M);
  Mat B;
  if (b_kind == GevpB::AsPaper) {
    const Mat Q = qr.householderQ() * Mat::Identity(n, n);
    B = Q.transpose() * Q;
  } else {
    const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    B = R.transpose() * R;
  }
  return {0.5 * (c_hat + c_hat.transpose()), 0.5 * (B + B.transpose())};
}
}  // namespace detail

/// Matrices (C, B) of a GEVP instance, regenerated from its seed.
inline std::pair<Mat, Mat> gevp_matrices(Index n, Seeded seed, GevpB b_kind) {
  Rng rng(seed);
  return detail::gevp_draw(rng, n, b_kind);
}

inline Problem gevp_generate(Index n, Seeded seed, GevpB b_kind = GevpB::AsPaper) {
  require(n >= 2, "gevp requires n >= 2");
  Rng rng(seed);
  auto d = std::make_shared<GevpData>();
  std::tie(d->C, d->B) = detail::gevp_draw(rng, n, b_kind);
  const Vec x0 = rng.normal_vector(n);

  const auto sol = oracles::dense_gevp_min(d->C, d->B);
  d->lambda_min = sol.lambda_min;
  d->x_star = sol.x_star;

  const double c_norm = sym_norm(d->C);
  const double b_norm = sym_norm(d->B);
  const Vec x_init = x0 / x0.norm();
  // Working region: ball of radius R around the origin holding the start and
  // the reference solution with a factor two of slack.
  const double R = 2.0 * std::max(x_init.norm(), d->x_star.norm());

  SmoothnessConstants c;
  c.H_f = c.L_f = 2.0 * c_norm;
  c.H_A = c.L_A = 2.0 * b_norm;
  c.JA_max = 2.0 * b_norm * R;
  c.A_max = b_norm * R * R + 1.0;
  c.gradf_max = 2.0 * c_norm * R;
  c.D = 2.0 * R;
  c.D_estimated = true;

  std::function<double(double, double)> hint;
  if (b_kind == GevpB::AsPaper) {
    hint = [c_norm](double beta, double) { return (10.0 * c_norm + 5000.0 + 500.0 * beta) / 0.5; };
  } else {
    hint = [c_norm, b_norm](double beta, double y_norm) {
      return 2.0 * c_norm + 2.0 * y_norm * b_norm + 6.0 * beta * b_norm;
    };
  }

  Problem p{
      .family = "gevp",
      .n = n,
      .m = 1,
      .f = [d](const Vec& x) { return x.dot(d->C * x); },
      .grad_f = [d](const Vec& x) -> Vec { return 2.0 * (d->C * x); },
      .constraint = [d](const Vec& x) -> Vec { return Vec::Constant(1, x.dot(d->B * x) - 1.0); },
      .jt_product = [d](const Vec& x, const Vec& v) -> Vec { return (2.0 * v[0]) * (d->B * x); },
      .jacobian = [d](const Vec& x) -> Mat { return (2.0 * (d->B * x)).transpose(); },
      .set = WholeSpace(n),
      .constants = c,
      .f_star = d->lambda_min,
      .x_init = x_init,
      .lipschitz_hint = hint,
      .info = detail::make_info(seed.seed, {{"n", double(n)},
                                            {"gevp_b_triangular", b_kind == GevpB::Triangular}}),
  };
  return p;
}

// ---------------------------------------------------------------------------
// Basis pursuit, min ||z||_1 s.t. Bz = b, through z = x[:n]^2 - x[n:]^2:
// f = ||x||^2, A(x) = [B, -B](x o x) - b, X = R^{2n}.

struct BasisPursuitData {
  Mat Bbar;
  Vec b;
  Vec z_star;
};

inline Problem basis_pursuit_generate(Index n, Index m, Index k, Seeded seed) {
  require(k >= 1 && k <= n, "basis pursuit requires 1 <= k <= n");
  require(m >= 1 && m < n, "basis pursuit requires 1 <= m < n");
  Rng rng(seed);
  auto d = std::make_shared<BasisPursuitData>();
  const Mat B = rng.normal_matrix(m, n);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 0; i < k; ++i) std::swap(perm[i], perm[i + rng.index(n - i)]);
  d->z_star = Vec::Zero(n);
  for (Index i = 0; i < k; ++i) d->z_star[perm[i]] = rng.normal();
  const Vec x0 = rng.normal_vector(2 * n);
  d->b = B * d->z_star;
  d->Bbar.resize(m, 2 * n);
  d->Bbar << B, -B;

  const double bb = spectral_norm(d->Bbar);
  const double x_ref = std::sqrt(d->z_star.lpNorm<1>());
  const double R = 2.0 * std::max(x0.norm(), x_ref);

  SmoothnessConstants c;
  c.H_f = c.L_f = 2.0;
  c.H_A = c.L_A = 2.0 * bb;
  c.JA_max = 2.0 * bb * R;
  c.A_max = bb * R * R + d->b.norm();
  c.gradf_max = 2.0 * R;
  c.D = 2.0 * R;
  c.D_estimated = true;

  Problem p{
      .family = "basis_pursuit",
      .n = 2 * n,
      .m = m,
      .f = [](const Vec& x) { return x.squaredNorm(); },
      .grad_f = [](const Vec& x) -> Vec { return 2.0 * x; },
      .constraint = [d](const Vec& x) -> Vec { return d->Bbar * x.cwiseProduct(x) - d->b; },
      .jt_product = [d](const Vec& x, const Vec& v) -> Vec {
        return 2.0 * x.cwiseProduct(d->Bbar.transpose() * v);
      },
      .jacobian = [d](const Vec& x) -> Mat { return 2.0 * d->Bbar * x.asDiagonal(); },
      .set = WholeSpace(2 * n),
      .constants = c,
      .f_star = d->z_star.lpNorm<1>(),
      .x_init = x0,
      .lipschitz_hint = [bb](double beta, double y_norm) {
        return 2.0 + 2.0 * bb * y_norm + 6.0 * beta * bb * bb;
      },
      .info = detail::make_info(seed.seed, {{"n", double(n)}, {"m", double(m)}, {"k", double(k)}}),
  };
  return p;
}

/// Ground-truth sparse vector of a basis-pursuit instance.
inline Vec basis_pursuit_ground_truth(Index n, Index m, Index k, Seeded seed) {
  Rng rng(seed);
  rng.normal_matrix(m, n);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 0; i < k; ++i) std::swap(perm[i], perm[i + rng.index(n - i)]);
  Vec z = Vec::Zero(n);
  for (Index i = 0; i < k; ++i) z[perm[i]] = rng.normal();
  return z;
}

/// x in R^{2n} with x[:n]^2 = z_+ and x[n:]^2 = z_-.
inline Vec basis_pursuit_lift(const Vec& z) {
  const Index n = z.size();
  Vec x(2 * n);
  for (Index i = 0; i < n; ++i) {
    x[i] = std::sqrt(std::max(z[i], 0.0));
    x[n + i] = std::sqrt(std::max(-z[i], 0.0));
  }
  return x;
}

// ---------------------------------------------------------------------------
// Clustering through a rank-r Burer-Monteiro factorization. x stacks the rows
// x_1, ..., x_n of an n-by-r matrix X. f = sum_ij D_ij <x_i, x_j> = tr(X'DX),
// A_i(x) = <x_i, sum_j x_j> - 1, X in {x >= 0, ||x|| <= sqrt(s)}.

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ClusteringData {
  Mat D;
  Index n = 0;
  Index r = 0;
};

/// Pairwise Euclidean distances between the rows of `points`.
inline Mat distance_matrix(const Mat& points) {
  const Index n = points.rows();
  Mat D = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = (points.row(i) - points.row(j)).norm();
  return D;
}

inline Problem clustering_generate(const Mat& points, Index s, Index r) {
  require(s >= 2, "clustering requires s >= 2");
  require(r >= 1, "clustering requires r >= 1");
  const Index n = points.rows();
  require(n >= s, "clustering requires at least s points");
  auto d = std::make_shared<ClusteringData>();
  d->D = distance_matrix(points);
  d->n = n;
  d->r = r;

  auto view = [d](const Vec& x) { return Eigen::Map<const RowMat>(x.data(), d->n, d->r); };

  const double dn = static_cast<double>(n);
  const double ds = static_cast<double>(s);
  const double d_norm = sym_norm(d->D);
  SmoothnessConstants c;
  c.H_f = c.L_f = 2.0 * d_norm;
  c.H_A = c.L_A = 2.0 * std::sqrt(dn);
  c.JA_max = 2.0 * std::sqrt(dn * ds);
  c.A_max = std::sqrt(dn) * (ds + 1.0);
  c.gradf_max = 2.0 * d_norm * std::sqrt(ds);
  c.D = 2.0 * std::sqrt(ds);

  const BallNonnegSet set(n * r, std::sqrt(ds));
  Rng rng(Seeded{0x5eedu});
  Vec x0(n * r);
  for (Index i = 0; i < x0.size(); ++i) x0[i] = rng.uniform();

  Problem p{
      .family = "clustering",
      .n = n * r,
      .m = n,
      .f = [d, view](const Vec& x) {
        const auto X = view(x);
        return (X.transpose() * d->D * X).trace();
      },
      .grad_f = [d, view](const Vec& x) -> Vec {
        const RowMat G = 2.0 * (d->D * view(x));
        return Eigen::Map<const Vec>(G.data(), G.size());
      },
      .constraint = [view](const Vec& x) -> Vec {
        const auto X = view(x);
        const Vec S = X.colwise().sum().transpose();
        return (X * S).array() - 1.0;
      },
      .jt_product = [view](const Vec& x, const Vec& v) -> Vec {
        const auto X = view(x);
        const Vec S = X.colwise().sum().transpose();
        const Vec xtv = X.transpose() * v;
        RowMat G = v * S.transpose();
        G.rowwise() += xtv.transpose();
        return Eigen::Map<const Vec>(G.data(), G.size());
      },
      .jacobian = {},
      .set = set,
      .constants = c,
      .f_star = std::nullopt,
      .x_init = set.project(x0),
      .lipschitz_hint = {},
      .info = detail::make_info(0, {{"n", dn}, {"s", ds}, {"r", double(r)}}),
  };
  return p;
}

/// n points in `dim` dimensions from s isotropic Gaussian clusters; point i
/// belongs to cluster i mod s. Centres ~ N(0, spread^2 I), noise ~ N(0, I).
inline Mat gaussian_cluster_points(Index n, Index s, Index dim, Seeded seed, double spread = 4.0) {
  require(n >= 1 && s >= 1 && dim >= 1, "cluster generator needs positive sizes");
  Rng rng(seed);
  const Mat centres = rng.normal_matrix(s, dim, spread * spread);
  Mat pts(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) pts(i, j) = centres(i % s, j) + rng.normal();
  return pts;
}

// ---------------------------------------------------------------------------
// Scalar toy: f = 0, A(x) = x - 1, X = [-2, 2]. Solution x = 1.

inline Problem toy_problem() {
  SmoothnessConstants c;
  c.JA_max = 1.0;
  c.A_max = 3.0;
  c.D = 4.0;
  Problem p{
      .family = "toy",
      .n = 1,
      .m = 1,
      .f = [](const Vec&) { return 0.0; },
      .grad_f = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); },
      .constraint = [](const Vec& x) -> Vec { return x.array() - 1.0; },
      .jt_product = [](const Vec&, const Vec& v) -> Vec { return v; },
      .jacobian = [](const Vec&) -> Mat { return Mat::Ones(1, 1); },
      .set = BoxSet::uniform(1, -2.0, 2.0),
      .constants = c,
      .f_star = 0.0,
      .x_init = Vec::Zero(1),
      .lipschitz_hint = {},
      .info = detail::make_info(0, {}),
  };
  return p;
}

}  // namespace palm
