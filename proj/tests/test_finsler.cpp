#include <cmath>

#include <gtest/gtest.h>

#include "dflat/catalog.hpp"
#include "dflat/finsler.hpp"

using namespace dflat;

namespace {

double funk_by_hand(const Vec& x, const Vec& y) {
  const double q = 1 - x.squaredNorm(), xy = x.dot(y);
  return (std::sqrt(q * y.squaredNorm() + xy * xy) + xy) / q;
}

TEST(Finsler, FunkValues) {
  const FinslerFunction F = funk(3);
  Vec x(3), y(3);
  x << 0.3, -0.2, 0.5;
  y << -0.4, 1.0, 0.8;
  EXPECT_NEAR(F.at(x, y), funk_by_hand(x, y), 1e-15);
  EXPECT_NEAR(F.at(Vec::Zero(3), y), y.norm(), 1e-15);
}

TEST(Finsler, FundamentalTensorOfRiemannianNorm) {
  const MetricField a = random_metric(3, 11);
  Vec x(3), y(3);
  x << 0.1, 0.2, -0.3;
  y << 1.0, -0.5, 0.25;
  const Mat g = fundamental_tensor(riemannian_norm(a), x, y);
  EXPECT_LT((g - a.at(x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Finsler, FunkSprayIsProjective) {
  // Funk satisfies F_x = F F_y, so G^i = F y^i / 2.
  const FinslerFunction F = funk(3);
  Vec x(3), y(3);
  x << -0.25, 0.4, 0.1;
  y << 0.3, 0.9, -1.2;
  const Vec G = spray_finsler(F, x, y);
  const Vec expect = 0.5 * funk_by_hand(x, y) * y;
  EXPECT_LT((G - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Finsler, SprayOfRiemannianNormMatches) {
  const MetricField a = random_metric(3, 5);
  Vec x(3), y(3);
  x << 0.2, -0.1, 0.05;
  y << -1.0, 0.3, 0.6;
  const Vec G1 = spray_finsler(riemannian_norm(a), x, y);
  const Vec G2 = spray_riemann(a, x, y);
  EXPECT_LT((G1 - G2).cwiseAbs().maxCoeff(), 1e-11 * (1 + G2.cwiseAbs().maxCoeff()));
}

TEST(Finsler, DualFlatResidualFunkVersusControl) {
  Vec x(3), y(3);
  x << 0.2, 0.3, -0.4;
  y << 0.5, -1.0, 0.7;
  EXPECT_LT(dual_flat_residual(funk(3), x, y).max_abs(), 1e-13);
  EXPECT_GT(dual_flat_residual(control_scaled_euclidean(3), x, y).max_abs(), 1e-3);
}

TEST(Finsler, VerifyReportCarriesSeed) {
  const DualFlatReport r = verify_dually_flat(funk(2), ball_domain(2, 0.9), 50, 1e-6, 99);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.samples, 50);
  EXPECT_EQ(r.seed, 99u);
  EXPECT_LE(r.mean_residual, r.max_residual);
}

TEST(Finsler, SprayFormOfEuclideanIsZero) {
  Vec x(3);
  x << 0.1, 0.1, 0.1;
  Sampler s(3);
  const SprayFormFit f = fit_spray_form(euclidean_metric(3), x, s.tangents(3, 9));
  EXPECT_EQ(f.theta_lower.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(f.residual, 0.0);
}

TEST(Finsler, SprayFormOfConformal) {
  // e^{2 x^1} delta has G^i = y^1 y^i - |y|^2/2 delta^i_1; the y^i term wants
  // theta = dx^1 / 2 and the |y|^2 term wants theta = -dx^1 / 2.
  const int n = 3;
  const MetricField a(n, [n](JetSpan x) {
    JetMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = exp(2.0 * x[0]);
    return m;
  });
  Vec x(3);
  x << 0.1, 0.0, 0.2;
  Sampler s(4);
  EXPECT_GT(fit_spray_form(a, x, s.tangents(n, 3 * n)).residual, 1e-3);
}

TEST(Finsler, DuallyRelatedConstantFormOnEuclidean) {
  // b = const on Euclidean: b_{i|j} = 0 = 2 theta_j b_i + c a_ij with theta = c = 0.
  const OneFormField b(3, [](JetSpan) { return std::vector<Jet2>{0.3, -0.1, 0.2}; });
  Vec x(3);
  x << 0.2, 0.1, 0.0;
  Sampler s(8);
  const DualRelationFit f = fit_dually_related(euclidean_metric(3), b, x, s.tangents(3, 9));
  EXPECT_LT(f.residual, 1e-14);
  EXPECT_NEAR(f.c, 0.0, 1e-14);
}

TEST(Finsler, HomogeneityAndConvexity) {
  const FinslerFunction F = funk(3);
  const ChartDomain d = ball_domain(3, 0.8);
  EXPECT_LT(homogeneity_defect(F, d, 100, 3.0, 1), 1e-13);
  EXPECT_GT(strong_convexity_probe(F, d, 100, 2).min_eigenvalue, 0.0);
}

TEST(Finsler, FunkDualFlatAtFixedPoint) {
  Vec x(3), y(3);
  x << 0.2, 0.1, 0;
  y << 1, -0.3, 0.5;
  EXPECT_LT(dual_flat_residual(funk(3), x, y).max_abs(), 1e-6);
}

TEST(Finsler, ScaledEuclideanBoundedAway) {
  Sampler s(12);
  for (const Vec& x : s.points(ball_domain(3, 0.5), 20)) {
    Vec y = s.tangent(3);
    y[1] += 0.5;  // keep away from the degenerate direction e_1
    EXPECT_GT(dual_flat_residual(control_scaled_euclidean(3), x, y).max_abs(), 1e-2);
  }
}

TEST(Finsler, FlatFamilySprayFormAtFixedPoint) {
  Vec x(3);
  x << 0.2, 0, 0;
  Sampler s(2);
  EXPECT_LT(fit_spray_form(flat_alpha(3, -0.5), x, s.tangents(3, 9)).residual, 1e-8);
  for (const Vec& p : s.points(ball_domain(3, 2.0), 20))
    EXPECT_LT(fit_spray_form(flat_alpha(3, 1.0), p, s.tangents(3, 9)).residual, 1e-8);
}

TEST(Finsler, RelatedFormAtFixedPair) {
  Sampler s(6);
  for (const Vec& x : s.points(ball_domain(3, working_radius(0.3)), 20))
    EXPECT_LT(fit_dually_related(flat_alpha(3, 0.3), related_beta(3, 0.3, 0.7), x, s.tangents(3, 9))
                  .residual,
              1e-6);
}

TEST(Finsler, RandersFamilyReproducesFunk) {
  Sampler s(4);
  const FinslerFunction F = randers_family(3, -1.0, 1.0), G = funk(3);
  for (const Vec& x : s.points(ball_domain(3, 0.9), 50)) {
    const Vec y = s.tangent(3);
    EXPECT_NEAR(F.at(x, y), G.at(x, y), 1e-12 * G.at(x, y));
  }
}

TEST(Finsler, StructuralTrivialCase) {
  // Euclidean alpha, constant beta, theta = 0, tau = 0.
  const OneFormField b(3, [](JetSpan) { return std::vector<Jet2>{0.2, -0.1, 0.3}; });
  const KParams k(0.3, 0.5, 0.2, 1.0);
  Vec x(3), y(3);
  x << 0.1, 0.2, 0.3;
  y << 1, -1, 0.5;
  EXPECT_LT(structural_residuals(euclidean_metric(3), b, Vec::Zero(3), 0.0, k, x, y).max(), 1e-6);
}

}  // namespace
