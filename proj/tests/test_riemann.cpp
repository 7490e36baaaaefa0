#include <cmath>

#include <gtest/gtest.h>

#include "dflat/riemann.hpp"

using namespace dflat;

namespace {

// e^{2 sigma} delta with sigma = x^1.
MetricField conformal_x1(int n) {
  return MetricField(n, [n](JetSpan x) {
    JetMatrix a(n);
    const Jet2 f = exp(2.0 * x[0]);
    for (int i = 0; i < n; ++i) a(i, i) = f;
    return a;
  });
}

TEST(Christoffel, ConformalMetric) {
  // Gamma^i_jk = d_j s delta^i_k + d_k s delta^i_j - d^i s delta_jk, ds = e_1.
  const int n = 3;
  Vec x(n);
  x << 0.4, -0.2, 0.1;
  const Christoffel G = christoffel(conformal_x1(n), x);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double expect = (j == 0) * (i == k) + (k == 0) * (i == j) - (i == 0) * (j == k);
        EXPECT_NEAR(G(i, j, k), expect, 1e-13) << i << j << k;
      }
  EXPECT_NEAR(G(0, 0, 0), 1.0, 1e-13);
}

TEST(Christoffel, EuclideanVanishes) {
  Vec x(4);
  x << 1, 2, 3, 4;
  const Christoffel G = christoffel(euclidean_metric(4), x);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) EXPECT_EQ(G(i, j, k), 0.0);
}

TEST(Spray, Conformal) {
  // G^i = (y^1) y^i - 1/2 |y|^2 delta^i_1
  const int n = 3;
  Vec x(n), y(n);
  x << 0.1, 0.5, -0.3;
  y << 0.7, -1.1, 0.4;
  const Vec G = spray_riemann(conformal_x1(n), x, y);
  Vec expect = y[0] * y;
  expect[0] -= 0.5 * y.squaredNorm();
  EXPECT_LT((G - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(CovariantDerivative, EuclideanIsPartial) {
  // b = (x^2 x^3, x^1, (x^1)^2): b_{i|j} = d_j b_i.
  const int n = 3;
  const OneFormField b(n, [](JetSpan x) { return std::vector<Jet2>{x[1] * x[2], x[0], x[0] * x[0]}; });
  Vec x(n), y(n);
  x << 0.3, -0.6, 0.2;
  y << 1.0, 2.0, -1.0;
  const CovariantData c = covariant_derivative(euclidean_metric(n), b, x, y);
  Mat expect = Mat::Zero(n, n);
  expect(0, 1) = x[2];
  expect(0, 2) = x[1];
  expect(1, 0) = 1.0;
  expect(2, 0) = 2 * x[0];
  EXPECT_LT((c.bij - expect).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((c.r_ij - 0.5 * (expect + expect.transpose())).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((c.s_ij - 0.5 * (expect - expect.transpose())).cwiseAbs().maxCoeff(), 1e-14);
  const Vec bv = b.at(x);
  EXPECT_NEAR(c.b2, bv.squaredNorm(), 1e-14);
  EXPECT_NEAR(c.beta, bv.dot(y), 1e-14);
  EXPECT_NEAR(c.r00, y.dot(expect * y), 1e-13);
  EXPECT_LT((c.s_i0 - 0.5 * (expect - expect.transpose()) * y).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CovariantDerivative, ConformalConstantForm) {
  // b = dx^1 on e^{2 x^1} delta: b_{i|j} = -Gamma^1_ij.
  const int n = 3;
  const OneFormField b(n, [](JetSpan) { return std::vector<Jet2>{1.0, 0.0, 0.0}; });
  Vec x(n), y(n);
  x << 0.2, 0.0, 0.0;
  y << 1.0, 0.0, 0.0;
  const CovariantData c = covariant_derivative(conformal_x1(n), b, x, y);
  Mat expect = Mat::Identity(n, n);
  expect(0, 0) = -1.0;
  EXPECT_LT((c.bij - expect).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(norm_sq(conformal_x1(n), b, x), std::exp(-0.4), 1e-14);
}

TEST(Sampler, DeterministicAndInside) {
  const ChartDomain d = ball_domain(3, 0.5);
  Sampler a(7), b(7);
  const auto pa = a.points(d, 50);
  const auto pb = b.points(d, 50);
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i], pb[i]);
    EXPECT_LE(pa[i].norm(), 0.5);
  }
  for (int i = 0; i < 50; ++i) {
    const double len = a.tangent(3).norm();
    EXPECT_GE(len, 0.5);
    EXPECT_LE(len, 2.0);
  }
}

TEST(Sampler, RejectsHostileDomain) {
  ChartDomain d = ball_domain(2, 1.0);
  d.margin = [](const Vec& x) { return x[0] - 0.99; };
  Sampler s(1);
  EXPECT_THROW(s.points(d, 10), ConfigError);
}

TEST(CovariantDerivative, ClosedFormHasNoAntisymmetricPart) {
  // b = d(x^1 x^2 + (x^3)^3) is closed.
  const OneFormField b(3, [](JetSpan x) {
    return std::vector<Jet2>{x[1], x[0], 3.0 * x[2] * x[2]};
  });
  Vec x(3), y(3);
  x << 0.3, -0.7, 0.5;
  y << 1, 1, 1;
  EXPECT_LT(covariant_derivative(euclidean_metric(3), b, x, y).s_ij.cwiseAbs().maxCoeff(), 1e-15);
}

}  // namespace
