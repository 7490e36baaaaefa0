#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dflat/phi.hpp"

using namespace dflat;

namespace {

// Unnormalized left-hand side of the ODE, typed in independently.
double lhs(double p, double p1, double p2, const KParams& k, double s) {
  return s * (k.k2 - k.k3 * s * s) * (p * p1 - s * p1 * p1 - s * p * p2) - (p1 * p1 + p * p2) +
         k.k1 * p * (p - s * p1);
}

double lhs(const PhiFunction& phi, const KParams& k, double s) {
  const PhiValues v = phi.eval(s);
  return lhs(v.value, v.d1, v.d2, k, s);
}

TEST(Phi, InvariantRelation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 200; ++i) {
    const KParams k(u(rng), u(rng), u(rng), 1.0);
    const InvariantTriple d = invariants(k);
    EXPECT_NEAR(d.delta1, k.k2 * k.k2 + 4 * k.k3, 1e-15);
    EXPECT_NEAR(d.delta2, k.k2 - 2 * k.k1, 1e-15);
    EXPECT_NEAR(d.delta3, k.k1 * k.k1 - k.k1 * k.k2 - k.k3, 1e-15);
    EXPECT_NEAR(d.delta2 * d.delta2 - 4 * d.delta3, d.delta1, 1e-12);
  }
}

TEST(Phi, LinearCase) {
  // k = 0: phi = sqrt(1 + 2 eps s)
  const KParams k(0, 0, 0, 0.5);
  const PhiFunction phi = elementary_solution(k);
  for (double s : {-0.5, 0.0, 0.3, 1.2}) {
    EXPECT_NEAR(phi.eval(s).value, std::sqrt(1 + s), 1e-14);
    EXPECT_NEAR(solve_phi(k, s), std::sqrt(1 + s), 1e-9);
  }
  EXPECT_EQ(match_elementary(k).which, ElementaryCase::kLinear);
}

TEST(Phi, QuadraticCase) {
  // k1 + k2 = 0, k3 = 0, eps = 1: phi = 1 + s solves the ODE.
  const KParams k(1, -1, 0, 1);
  const PhiFunction phi = elementary_solution(k);
  for (double s : {-0.4, 0.0, 0.7}) {
    EXPECT_NEAR(phi.eval(s).value, 1 + s, 1e-13);
    EXPECT_NEAR(lhs(1 + s, 1, 0, k, s), 0.0, 1e-15);
  }
}

TEST(Phi, GeneralSolutionSolvesOde) {
  const KParams ks[] = {KParams(0.3, 0.5, 0.2, 0.5), KParams(-0.4, 0.2, -0.3, 0.7),
                        KParams(1, 0.5, -0.0625, 0.4), KParams(0.2, 0, -1, 0.3),
                        KParams(2, 0, 0, 0.5), KParams(0, 0, 0.8, 0.5)};
  for (const KParams& k : ks) {
    const PhiFunction phi = general_solution(k);
    const PhiValues p0 = phi.eval(0.0);
    EXPECT_NEAR(p0.value, 1.0, 1e-12);
    EXPECT_NEAR(p0.d1, k.eps, 1e-10);
    for (double s : phi.grid(25)) {
      const PhiValues v = phi.eval(s);
      const double scale = 1 + v.value * v.value + v.d1 * v.d1 + v.d2 * v.d2;
      EXPECT_LT(std::abs(lhs(phi, k, s)) / scale, 1e-8) << phi.label() << " s=" << s;
      EXPECT_NEAR(ode_residual(phi, k, s), lhs(phi, k, s) / scale, 1e-14);
    }
  }
}

TEST(Phi, ElementaryCasesSolveOde) {
  const KParams ks[] = {KParams(0, -0.5, 0, 0.5),  KParams(0, 0.5, 0, 0.5),
                        KParams(1, 0.25, 0, 0.5),  KParams(1, 1.0 / 3, 0, 0.5),
                        KParams(-1, -1.0 / 5, 0, 0.5), KParams(1, -1.0 / 3, 0, 0.5),
                        KParams(1, -0.5, 0, 0.5),  KParams(-1, 0.25, 0, 0.5),
                        KParams(0, 0, 0.5, 0.5),   KParams(0.7, 0, 0, 0.5)};
  for (const KParams& k : ks) {
    const PhiFunction phi = elementary_solution(k);
    for (double s : phi.grid(20)) {
      const PhiValues v = phi.eval(s);
      const double scale = 1 + v.value * v.value + v.d1 * v.d1 + v.d2 * v.d2;
      EXPECT_LT(std::abs(lhs(phi, k, s)) / scale, 1e-7) << phi.label() << " s=" << s;
    }
  }
}

TEST(Phi, OracleAgreesWithClosedForm) {
  const KParams k(0.3, 0.5, 0.2, 0.5);
  const PhiFunction phi = general_solution(k);
  const std::vector<double> grid = phi.grid(20);
  const std::vector<double> ref = ode_oracle(k, grid);
  for (size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(phi.eval(grid[i]).value, ref[i], 1e-7);
}

TEST(Phi, FFactorSolvesReducedEquation) {
  // (log f)' = s (d2 + d3 s^2) / (1 + d2 s^2 + d3 s^4)
  const InvariantTriple ds[] = {{0, 0, 0}, {1, 1, 0}, {2.25, 0.5, -0.5}, {0, 1, 0.25}, {-0.44, 0.4, 0.15}};
  for (const InvariantTriple& d : ds) {
    for (double s : {-0.5, 0.1, 0.6}) {
      const Jet2 f = f_factor(d, Jet2::variable(s, 1, 0));
      const double Q = 1 + d.delta2 * s * s + d.delta3 * s * s * s * s;
      EXPECT_NEAR(f.grad(0) / f.value(), s * (d.delta2 + d.delta3 * s * s) / Q, 1e-12)
          << to_string(classify_f(d).branch);
    }
    EXPECT_NEAR(f_factor(d, 0.0), 1.0, 1e-15);
  }
  EXPECT_EQ(classify_f({0, 0, 0}).branch, FCase::kConstant);
  EXPECT_EQ(classify_f({1, 1, 0}).branch, FCase::kSqrt);
  EXPECT_EQ(classify_f({2.25, 0.5, -0.5}).branch, FCase::kPositiveDiscriminant);
  EXPECT_EQ(classify_f({0, 1, 0.25}).branch, FCase::kZeroDiscriminant);
  EXPECT_EQ(classify_f({-0.44, 0.4, 0.15}).branch, FCase::kNegativeDiscriminant);
}

TEST(Phi, TransportCarriesSolutions) {
  // g_u sqrt(1 + 2 eps s) solves the ODE at (u, 2u, -u^2).
  const KParams k0(0, 0, 0, 0.5);
  const PhiFunction base = elementary_solution(k0);
  for (double u : {-0.3, 0.4}) {
    const KParams k = transform_k_gu(k0, u);
    EXPECT_DOUBLE_EQ(k.k1, u);
    EXPECT_DOUBLE_EQ(k.k2, 2 * u);
    EXPECT_DOUBLE_EQ(k.k3, -u * u);
    const PhiFunction phi = apply_gu(base, u);
    for (double s : {-0.3, 0.0, 0.2}) {
      const double w = std::sqrt(1 + u * s * s);
      EXPECT_NEAR(phi.eval(s).value, w * std::sqrt(1 + s / w), 1e-14);
      EXPECT_NEAR(lhs(phi, k, s), 0.0, 1e-12);
    }
  }
  const KParams k1(0.3, 0.5, 0.2, 0.5);
  const KParams kv = transform_k_hv(k1, -2.0);
  EXPECT_DOUBLE_EQ(kv.k1, 4 * 0.3);
  EXPECT_DOUBLE_EQ(kv.k2, 4 * 0.5);
  EXPECT_DOUBLE_EQ(kv.k3, 16 * 0.2);
  EXPECT_DOUBLE_EQ(kv.eps, -1.0);
  const PhiFunction hv = apply_hv(general_solution(k1), -2.0);
  for (double s : {-0.1, 0.05, 0.15}) EXPECT_NEAR(lhs(hv, kv, s), 0.0, 1e-10);
}

TEST(Phi, GroupComposition) {
  const TransformElement a{0.3, 1.5}, b{-0.2, 0.5};
  const TransformElement ab = a.compose(b);
  EXPECT_DOUBLE_EQ(ab.u, 0.3 + 1.5 * 1.5 * -0.2);
  EXPECT_DOUBLE_EQ(ab.v, 0.75);
  const TransformElement e = a.compose(a.inverse());
  EXPECT_NEAR(e.u, 0.0, 1e-15);
  EXPECT_NEAR(e.v, 1.0, 1e-15);
}

TEST(Phi, DoubleFactorial) {
  EXPECT_EQ(double_factorial(-1), 1);
  EXPECT_EQ(double_factorial(0), 1);
  EXPECT_EQ(double_factorial(7), 105);
  EXPECT_EQ(double_factorial(8), 384);
}

TEST(Phi, NaturalDomain) {
  const Interval d = natural_domain([](double s) { return s < 0.5 && s > -1.0; }, 2.0);
  EXPECT_NEAR(d.hi, 0.95 * 0.5, 1e-9);
  EXPECT_NEAR(d.lo, -0.95, 1e-9);
  const Interval open = natural_domain([](double) { return true; }, 2.0);
  EXPECT_EQ(open.hi, 2.0);
  EXPECT_THROW(natural_domain([](double s) { return s > 0.1; }, 2.0), DomainError);
}

TEST(Phi, DomainErrors) {
  const PhiFunction phi = elementary_solution(KParams(0, 0, 0, 0.5));
  EXPECT_THROW(phi.eval(5.0), DomainError);
  EXPECT_THROW(match_elementary(KParams(0.3, 0.5, 0.2, 0.5)), DomainError);
}

TEST(Phi, InvariantsByHand) {
  const InvariantTriple a = invariants(KParams(1, 2, 3, 1));
  EXPECT_EQ(a.delta1, 16);
  EXPECT_EQ(a.delta2, 0);
  EXPECT_EQ(a.delta3, -4);
  const InvariantTriple b = invariants(KParams(1, -1, 0, 1));
  EXPECT_EQ(b.delta1, 1);
  EXPECT_EQ(b.delta2, -3);
  EXPECT_EQ(b.delta3, 2);
}

TEST(Phi, TransportByHand) {
  const KParams a = transform_k_gu(KParams(1, 0, 0, 1), -1);
  EXPECT_EQ(a.k1, 0);
  EXPECT_EQ(a.k2, -2);
  EXPECT_EQ(a.k3, -1);
  const KParams b = transform_k_hv(KParams(1, 2, 3, 1), 2);
  EXPECT_EQ(b.k1, 4);
  EXPECT_EQ(b.k2, 8);
  EXPECT_EQ(b.k3, 48);
}

TEST(Phi, GroupLawsAtPoint) {
  const PhiFunction phi = general_solution(KParams(0.3, 0.5, 0.2, 0.5));
  const double s = 0.3;
  EXPECT_NEAR(apply_gu(apply_gu(phi, 1.0), 2.0).eval(s).value, apply_gu(phi, 3.0).eval(s).value, 1e-12);
  const double u = 0.4, v = -1.3;
  EXPECT_NEAR(apply_hv(apply_gu(phi, u), v).eval(0.1).value,
              apply_gu(apply_hv(phi, v), v * v * u).eval(0.1).value, 1e-12);
  const PhiValues p0 = apply_gu(phi, u).eval(0.0);
  EXPECT_NEAR(p0.value, 1.0, 1e-14);
  EXPECT_NEAR(p0.d1, 0.5, 1e-10);
}

TEST(Phi, ResidualNegativeControlAndOrigin) {
  // phi = 1 + eps s solves only when k1 + k2 = 0; at s = 0 the residual is
  // -(phi'^2 + phi phi'') + k1 phi^2 = k1 - eps^2.
  const KParams k(0.7, 0, 0, 0.5);
  EXPECT_NEAR(ode_residual(PhiValues{1, 0.5, 0}, k, 0.0) * (1 + 1 + 0.25), 0.7 - 0.25, 1e-15);
  EXPECT_GT(std::abs(ode_residual(PhiValues{1.1, 0.5, 0}, k, 0.2)), 1e-3);
}

TEST(Phi, FFactorSqrtValue) {
  EXPECT_NEAR(f_factor(InvariantTriple{1, 1, 0}, 1.0), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(f_factor(InvariantTriple{0, 0, 0}, 0.7), 1.0);
}

TEST(Phi, ListedClosedForms) {
  EXPECT_NEAR(elementary_solution(KParams(0, 0, 0, 0.5)).eval(0.21).value, 1.1, 1e-15);
  for (double kap : {-0.5, 0.8}) {
    const KParams k(kap, -kap, 0, 0.3);
    const PhiFunction phi = elementary_solution(k);
    for (double s : phi.grid(15))
      EXPECT_NEAR(phi.eval(s).value, std::sqrt(1 + 0.6 * s + kap * s * s), 1e-8);
  }
  // k1 = 0, k2 < 0, k3 = 0
  const double k2 = -0.8, eps = 0.4;
  const PhiFunction arcsin_case = elementary_solution(KParams(0, k2, 0, eps));
  for (double s : arcsin_case.grid(15)) {
    const double r = std::sqrt(-k2);
    const double sq = 1 + eps * (s * std::sqrt(1 + k2 * s * s) + std::asin(r * s) / r);
    EXPECT_NEAR(arcsin_case.eval(s).value, std::sqrt(sq), 1e-12) << s;
  }
}

TEST(Phi, OracleOnSymmetricWindow) {
  std::vector<double> grid;
  for (int i = 0; i <= 16; ++i) grid.push_back(-0.4 + 0.05 * i);
  for (const KParams& k : {KParams(0.3, 0.5, 0.2, 0.5), KParams(-0.4, 0.2, -0.3, 0.7),
                           KParams(1, 0.25, 0, 0.5), KParams(0, 0, 0.8, 0.5)}) {
    const std::vector<double> ref = ode_oracle(k, grid);
    for (size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(solve_phi(k, grid[i]), ref[i], 1e-6);
  }
}

}  // namespace
