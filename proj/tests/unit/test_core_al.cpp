#include <gtest/gtest.h>

#include <cmath>

#include "palm/core_al.hpp"
#include "palm/oracles.hpp"
#include "palm/problems.hpp"
#include "palm/rng.hpp"

using namespace palm;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Vec random_in_box(Rng& rng, Index n, double lo, double hi) {
  Vec x(n);
  for (Index i = 0; i < n; ++i) x[i] = rng.uniform(lo, hi);
  return x;
}

}  // namespace

TEST(Power, RejectsValuesOutsideHalfOpenInterval) {
  EXPECT_THROW(Power{0.0}, Error);
  EXPECT_THROW(Power{-0.5}, Error);
  EXPECT_THROW(Power{1.0000001}, Error);
  EXPECT_NO_THROW(Power{1.0});
  EXPECT_NO_THROW(Power{1e-6});
}

TEST(PhiValue, ZeroAtOrigin) {
  for (double nu : {0.2, 0.5, 1.0}) EXPECT_EQ(phi_value(Vec::Zero(3), Power{nu}), 0.0);
}

TEST(PhiValue, QuadraticAtPowerOne) { EXPECT_DOUBLE_EQ(phi_value(v2(3, 4), Power{1.0}), 12.5); }

TEST(PhiValue, HalfPower) { EXPECT_NEAR(phi_value(v2(3, 4), Power{0.5}), 7.45356, 1e-5); }

TEST(PhiGrad, ZeroAtOriginExactly) {
  const Vec g = phi_grad(Vec::Zero(4), Power{0.3});
  EXPECT_EQ(g.size(), 4);
  EXPECT_TRUE((g.array() == 0.0).all());
}

TEST(PhiGrad, IdentityAtPowerOne) { EXPECT_EQ(phi_grad(v2(3, 4), Power{1.0}), v2(3, 4)); }

TEST(PhiGrad, HalfPower) {
  const Vec g = phi_grad(v2(3, 4), Power{0.5});
  EXPECT_NEAR(g[0], 1.34164, 1e-5);
  EXPECT_NEAR(g[1], 1.78885, 1e-5);
  EXPECT_NEAR(g.norm(), std::sqrt(5.0), 1e-12);
}

TEST(PhiGradProperty, NormIsPowerOfResidualNorm) {
  Rng rng(Seeded{1});
  for (int i = 0; i < 500; ++i) {
    const Power nu{rng.uniform(0.05, 1.0)};
    const Vec r = rng.normal_vector(1 + rng.index(6)) * std::pow(10.0, rng.uniform(-6, 6));
    const double expect = std::pow(r.norm(), nu.value());
    EXPECT_NEAR(phi_grad(r, nu).norm(), expect, 1e-13 * expect);
  }
}

TEST(PhiGradProperty, HolderContinuousOfOrderNu) {
  Rng rng(Seeded{2});
  for (int i = 0; i < 2000; ++i) {
    const Power nu{rng.uniform(0.05, 1.0)};
    const Index m = 1 + rng.index(4);
    const Vec r = rng.normal_vector(m);
    const Vec s = r + rng.normal_vector(m) * std::pow(10.0, rng.uniform(-8, 1));
    const double lhs = (phi_grad(r, nu) - phi_grad(s, nu)).norm();
    const double rhs = std::pow(2.0, 1.0 - nu) * std::pow((r - s).norm(), nu.value());
    EXPECT_LE(lhs, rhs * (1.0 + 1e-12) + 1e-15);
  }
}

TEST(PhiGradProperty, MatchesFiniteDifferencesAwayFromZero) {
  Rng rng(Seeded{3});
  for (int i = 0; i < 100; ++i) {
    const Power nu{rng.uniform(0.1, 1.0)};
    const Vec r = rng.normal_vector(3);
    const Vec fd = oracles::finite_diff_grad([&](const Vec& z) { return phi_value(z, nu); }, r);
    EXPECT_LE((phi_grad(r, nu) - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
  }
}

TEST(ALParamsTest, RejectsNonpositivePenalty) {
  EXPECT_THROW((ALParams{Power{1.0}, 0.0, Vec::Zero(1)}), Error);
  EXPECT_THROW((ALParams{Power{1.0}, -1.0, Vec::Zero(1)}), Error);
}

TEST(ALValue, ScalarToy) {
  Problem p = toy_problem();
  p.set = BoxSet::uniform(1, -2.0, 2.0);
  const ALParams a{Power{0.5}, 4.0, Vec::Constant(1, 2.0)};
  EXPECT_NEAR(al_value(p, Vec::Zero(1), a), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(al_value(p, Vec::Zero(1), a), 0.6667, 1e-4);
}

TEST(ALValue, FeasiblePointWithZeroMultiplierGivesObjective) {
  const Problem p = qp_generate(12, 4, Seeded{5});
  const Mat C = p.jacobian(Vec::Zero(12));
  // Least-norm feasible point of C x = b.
  const Vec b = -p.constraint(Vec::Zero(12));
  const Vec x = C.transpose() * (C * C.transpose()).ldlt().solve(b);
  ASSERT_LE(p.constraint(x).norm(), 1e-10);
  for (double beta : {0.1, 10.0, 1e4})
    EXPECT_NEAR(al_value(p, x, ALParams{Power{0.7}, beta, Vec::Zero(4)}), p.f(x), 1e-7);
}

TEST(ALValue, ClassicalAtPowerOne) {
  const Problem p = qp_generate(10, 3, Seeded{6});
  Rng rng(Seeded{7});
  const Vec x = random_in_box(rng, 10, -5, 5);
  const Vec y = rng.normal_vector(3);
  const Vec ax = p.constraint(x);
  const double expect = p.f(x) + y.dot(ax) + 0.5 * 3.0 * ax.squaredNorm();
  EXPECT_NEAR(al_value(p, x, ALParams{Power{1.0}, 3.0, y}), expect, 1e-10 * std::abs(expect));
}

TEST(ALValue, RejectsMultiplierOfWrongDimension) {
  const Problem p = qp_generate(10, 3, Seeded{6});
  EXPECT_THROW(al_value(p, Vec::Zero(10), ALParams(Power{1.0}, 1.0, Vec::Zero(4))), Error);
  EXPECT_THROW(al_grad(p, Vec::Zero(9), ALParams(Power{1.0}, 1.0, Vec::Zero(3))), Error);
}

TEST(ALGrad, FeasiblePointDropsPenaltyTerm) {
  const Problem p = toy_problem();
  const Vec x = Vec::Constant(1, 1.0);
  const ALParams a{Power{0.4}, 100.0, Vec::Constant(1, -3.0)};
  EXPECT_DOUBLE_EQ(al_grad(p, x, a)[0], -3.0);
}

TEST(ALGrad, ClassicalLinearFormula) {
  const Problem p = qp_generate(15, 5, Seeded{8});
  const Mat C = p.jacobian(Vec::Zero(15));
  Rng rng(Seeded{9});
  const Vec x = random_in_box(rng, 15, -5, 5);
  const Vec y = rng.normal_vector(5);
  const double beta = 2.5;
  const Vec expect = p.grad_f(x) + C.transpose() * y + beta * C.transpose() * p.constraint(x);
  EXPECT_LE((al_grad(p, x, ALParams{Power{1.0}, beta, y}) - expect).norm(), 1e-10 * expect.norm());
}

TEST(ALGrad, MatchesFiniteDifferencesOnRandomQp) {
  const Problem p = qp_generate(20, 5, Seeded{10});
  Rng rng(Seeded{11});
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_in_box(rng, 20, -5, 5);
    const ALParams a{Power{rng.uniform(0.2, 1.0)}, std::pow(10.0, rng.uniform(-2, 2)),
                     rng.normal_vector(5)};
    if (p.constraint(x).norm() < 1e-8) continue;
    const Vec g = al_grad(p, x, a);
    const Vec fd = oracles::finite_diff_grad([&](const Vec& z) { return al_value(p, z, a); }, x);
    EXPECT_LE((g - fd).norm() / std::max(1.0, g.norm()), 1e-5);
  }
}

TEST(ALGrad, UsesProductsWithoutJacobian) {
  Problem p = qp_generate(8, 2, Seeded{12});
  const Vec x = Vec::Constant(8, 0.3);
  const ALParams a{Power{0.6}, 1.0, Vec::Ones(2)};
  const Vec with = al_grad(p, x, a);
  p.jacobian = {};
  EXPECT_EQ(al_grad(p, x, a), with);
}

TEST(HolderModulus, CollapsesAtPowerOne) {
  SmoothnessConstants c;
  c.H_f = 2.0;
  c.H_A = 3.0;
  c.JA_max = 4.0;
  c.A_max = 5.0;
  c.D = 0.5;
  const auto hm = holder_modulus(c, 1.5, 7.0, Power{1.0});
  EXPECT_DOUBLE_EQ(hm.q, 1.0);
  EXPECT_DOUBLE_EQ(hm.H, 2.0 + 3.0 * 1.5 + 7.0 * (16.0 + 5.0 * 3.0));
}

TEST(HolderModulus, LinearConstraints) {
  SmoothnessConstants c;
  c.H_f = 2.0;
  c.nu_f = 0.8;
  c.JA_max = 3.0;
  c.D = 1.0;
  const auto hm = holder_modulus(c, 4.0, 5.0, Power{1.0});
  EXPECT_DOUBLE_EQ(hm.q, 0.8);
  EXPECT_DOUBLE_EQ(hm.H, 2.0 + 5.0 * 9.0);
}

TEST(HolderModulus, GeneralFormula) {
  SmoothnessConstants c;
  c.H_f = 1.0;
  c.nu_f = 0.9;
  c.H_A = 2.0;
  c.nu_A = 0.7;
  c.JA_max = 3.0;
  c.A_max = 4.0;
  c.D = 9.0;
  const double nu = 0.8, q = 0.7;
  const double expect = (1.0 + 2.0 * 0.5 +
                         10.0 * (std::pow(2.0, 1.0 - nu) * std::pow(3.0, 1.0 + nu) +
                                 std::pow(4.0, nu) * 2.0)) *
                        std::pow(9.0, 1.0 - q);
  const auto hm = holder_modulus(c, 0.5, 10.0, Power{nu});
  EXPECT_DOUBLE_EQ(hm.q, q);
  EXPECT_NEAR(hm.H, expect, 1e-12 * expect);
}

TEST(HolderModulus, NeedsFiniteDiameter) {
  SmoothnessConstants c;
  EXPECT_THROW(holder_modulus(c, 0.0, 1.0, Power{1.0}), Error);
}

TEST(HolderModulus, SampledPairsOnRandomQp) {
  const Problem p = qp_generate(20, 5, Seeded{13});
  Rng rng(Seeded{14});
  for (int i = 0; i < 1000; ++i) {
    const Vec x = random_in_box(rng, 20, -5, 5);
    const Vec z = p.set.project(x + rng.normal_vector(20) * std::pow(10.0, rng.uniform(-6, 1)));
    const ALParams a{Power{rng.uniform(0.2, 1.0)}, std::pow(10.0, rng.uniform(-2, 2)),
                     rng.normal_vector(5)};
    const auto hm = holder_modulus(p.constants, a.y.norm(), a.beta, a.nu);
    EXPECT_LE((al_grad(p, x, a) - al_grad(p, z, a)).norm(), hm.H * std::pow((x - z).norm(), hm.q));
  }
}

TEST(WeakConvexityModulus, HandExample) {
  SmoothnessConstants c;
  c.L_f = 2.0;
  c.L_A = 1.0;
  c.A_max = 4.0;
  EXPECT_DOUBLE_EQ(weak_convexity_modulus(c, 3.0, 10.0, Power{0.5}), 25.0);
}

TEST(WeakConvexityModulus, LinearConstraintsIgnorePenalty) {
  SmoothnessConstants c;
  c.L_f = 7.0;
  c.A_max = 100.0;
  for (double beta : {1e-3, 1.0, 1e6}) EXPECT_DOUBLE_EQ(weak_convexity_modulus(c, 5.0, beta, Power{0.3}), 7.0);
}

TEST(WeakConvexityModulus, SampledPairsOnRandomQp) {
  const Problem p = qp_generate(20, 5, Seeded{15});
  Rng rng(Seeded{16});
  for (int i = 0; i < 1000; ++i) {
    const Vec x = random_in_box(rng, 20, -5, 5);
    const Vec z = random_in_box(rng, 20, -5, 5);
    const ALParams a{Power{rng.uniform(0.2, 1.0)}, std::pow(10.0, rng.uniform(-2, 2)),
                     rng.normal_vector(5)};
    const double rho = weak_convexity_modulus(p.constants, a.y.norm(), a.beta, a.nu);
    const double lx = al_value(p, x, a), lz = al_value(p, z, a);
    const double lower = lz + al_grad(p, z, a).dot(x - z) - 0.5 * rho * (x - z).squaredNorm();
    EXPECT_GE(lx, lower - 1e-12 * (std::abs(lx) + std::abs(lz)));
  }
}

TEST(ModuliProperty, MonotoneInPenaltyAndMultiplier) {
  Rng rng(Seeded{17});
  for (int i = 0; i < 300; ++i) {
    SmoothnessConstants c;
    c.H_f = rng.uniform(0, 5);
    c.H_A = c.L_A = rng.uniform(0, 5);
    c.L_f = rng.uniform(0, 5);
    c.nu_f = rng.uniform(0.1, 1);
    c.nu_A = rng.uniform(0.1, 1);
    c.JA_max = rng.uniform(0, 5);
    c.A_max = rng.uniform(0, 5);
    c.D = rng.uniform(0.1, 20);
    const Power nu{rng.uniform(0.1, 1)};
    const double y = rng.uniform(0, 10), b = rng.uniform(0.01, 10);
    const double dy = rng.uniform(0, 3), db = rng.uniform(0, 3);
    EXPECT_LE(holder_modulus(c, y, b, nu).H, holder_modulus(c, y + dy, b, nu).H);
    EXPECT_LE(holder_modulus(c, y, b, nu).H, holder_modulus(c, y, b + db, nu).H);
    EXPECT_LE(weak_convexity_modulus(c, y, b, nu), weak_convexity_modulus(c, y + dy, b, nu));
    EXPECT_LE(weak_convexity_modulus(c, y, b, nu), weak_convexity_modulus(c, y, b + db, nu));
  }
}
