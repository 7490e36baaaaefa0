#include <cmath>

#include <gtest/gtest.h>

#include "dflat/catalog.hpp"
#include "dflat/deform.hpp"

using namespace dflat;

namespace {

TEST(Profile, ClosedPieces) {
  const KParams k(0.3, 0.5, 0.2, 1.0);
  const DeformationProfile p(k);
  for (double t : {0.0, 0.2, 0.6}) {
    const double P = 1 + 0.5 * t - 0.2 * t * t;
    EXPECT_NEAR(p.P(Jet2(t)).value(), P, 1e-15);
    EXPECT_NEAR(p.kappa(Jet2(t)).value(), -0.5 + 0.2 * t, 1e-15);
    const double rho = p.rho(Jet2(t)).value();
    EXPECT_NEAR(p.nu(Jet2(t)).value(), -std::sqrt(P) * std::exp(rho), 1e-14);
    EXPECT_NEAR(p.eta(Jet2(t)).value(), std::exp(-rho), 1e-14);
    const ProfileValue r = evaluate([&p](const Jet2& s) { return p.rho(s); }, t);
    EXPECT_NEAR(r.d1, -0.25 * (0.3 - 0.5 + 0.2 * t) / P, 1e-10);
  }
  EXPECT_EQ(p.rho(Jet2(0.0)).value(), 0.0);
}

TEST(Profile, TMaxIsFirstRootOfMargin) {
  // P = 1 - t: P = 0.01 at t = 0.99.
  const DeformationProfile p(KParams(0, -1, 0, 1));
  EXPECT_NEAR(p.t_max(), 0.99, 1e-12);
  EXPECT_THROW(p.rho(Jet2(1.5)), DomainError);
  const DeformationProfile q(KParams(0, 1, 0, 1));
  EXPECT_TRUE(std::isinf(q.t_max()));
}

TEST(Profile, Identities) {
  const DeformationProfile p(KParams(-0.4, 0.2, -0.3, 1.0));
  for (double t : {0.1, 0.5, 1.0}) {
    const ProfileIdentityResiduals r = verify_profile_identities(p, t);
    EXPECT_LT(r.kappa, 1e-12);
    EXPECT_LT(r.rho_prime, 1e-9);
    EXPECT_LT(r.nu, 1e-9);
  }
}

TEST(Eta, CaseOneAndTwoByHand) {
  const KParams k1(0.8, 0, 0, 1);
  EXPECT_EQ(eta_case(k1), 1);
  const KParams k2(0.8, -0.5, 0, 1);
  EXPECT_EQ(eta_case(k2), 2);
  for (double t : {0.1, 0.7, 1.5}) {
    EXPECT_NEAR(eta_closed_form(k1, t), std::exp(0.8 * t / 4), 1e-14);
    EXPECT_NEAR(eta_quadrature(k1, t), std::exp(0.8 * t / 4), 1e-11);
    const double expect = std::pow(1 - 0.5 * t, (0.8 + 0.5) / (4 * -0.5));
    EXPECT_NEAR(eta_closed_form(k2, t), expect, 1e-13);
    EXPECT_NEAR(eta_quadrature(k2, t), expect, 1e-10);
  }
}

TEST(Eta, CasesThreeToFive) {
  const KParams ks[] = {KParams(0.3, 0.5, 0.2, 1), KParams(0.3, 1, -0.25, 1),
                        KParams(0.3, 0, -1, 1)};
  const int expect[] = {3, 4, 5};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(eta_case(ks[i]), expect[i]);
    for (double t : {0.05, 0.4, 0.8})
      EXPECT_NEAR(eta_closed_form(ks[i], t), eta_quadrature(ks[i], t), 1e-9) << expect[i];
  }
}

TEST(Stages, TildeOfEuclideanWithConstantForm) {
  const OneFormField b(3, [](JetSpan) { return std::vector<Jet2>{0.3, 0.1, -0.2}; });
  const DeformedPair t = tilde_deform(euclidean_metric(3), b, [](const Jet2& s) { return 1.0 + s; });
  Vec x = Vec::Zero(3), bv(3);
  bv << 0.3, 0.1, -0.2;
  const Mat expect = Mat::Identity(3, 3) - (1 + bv.squaredNorm()) * bv * bv.transpose();
  EXPECT_LT((t.metric.at(x) - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(t.base_b2.at(x), bv.squaredNorm(), 1e-15);
}

TEST(Stages, HatAndBarScaleByBaseNorm) {
  const MetricField a = random_metric(3, 4);
  const OneFormField b = random_form(3, 4);
  Vec x(3);
  x << 0.1, -0.2, 0.15;
  const BetaProfile p = random_profile(9);
  const DeformedPair d = deform(a, b, p);
  const double t = norm_sq(a, b, x);
  const Vec bv = b.at(x);
  const Mat tilde = a.at(x) - evaluate(p.kappa, t).value * bv * bv.transpose();
  const double e2r = std::exp(2 * evaluate(p.rho, t).value);
  EXPECT_LT((d.metric.at(x) - e2r * tilde).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((d.form.at(x) - evaluate(p.nu, t).value * bv).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(d.stage, Stage::kBar);
}

TEST(Stages, TwoPathAgreement) {
  const MetricField a = random_metric(3, 21);
  const OneFormField b = random_form(3, 21);
  const BetaProfile p = random_profile(21);
  Sampler s(21);
  for (const Vec& x : s.points(ball_domain(3, 0.4), 5)) {
    const Vec y = s.tangent(3);
    EXPECT_LT(verify_tilde_stage(a, b, p, x, y).max(), 1e-9);
    EXPECT_LT(verify_hat_stage(a, b, p, x, y).max(), 1e-9);
    EXPECT_LT(verify_bar_stage(a, b, p, x, y).max(), 1e-9);
  }
}

TEST(Inverse, RoundTripAndNorm) {
  const MetricField abar = flat_alpha(3, -0.5);
  const OneFormField bbar = related_beta(3, -0.5, 0.3);
  const KParams k(0.3, 0.5, 0.2, 1.0);
  const RiemannPair ab = inverse_deform(abar, bbar, k);
  const RiemannPair back = forward_deform(ab.metric, ab.form, k);
  Vec x(3);
  x << 0.2, -0.3, 0.1;
  EXPECT_LT((back.metric.at(x) - abar.at(x)).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT((back.form.at(x) - bbar.at(x)).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT(norm_preservation_defect(ab.metric, ab.form, k, x), 1e-11);

  // By hand: beta = -eta P^{-1/2} betabar.
  const double bb = norm_sq(abar, bbar, x);
  const double P = 1 + 0.5 * bb - 0.2 * bb * bb;
  const Vec expect = -eta_quadrature(k, bb) / std::sqrt(P) * bbar.at(x);
  EXPECT_LT((ab.form.at(x) - expect).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(AlphaPhi, LinearCase) {
  // phi = sqrt(1 + 2 eps s): F = sqrt(alpha^2 + 2 eps alpha beta).
  const MetricField a = random_metric(3, 2);
  const OneFormField b = random_form(3, 2, 0.2);
  const PhiFunction phi = elementary_solution(KParams(0, 0, 0, 0.5));
  const FinslerFunction F = alpha_phi_metric(a, b, phi);
  Vec x(3), y(3);
  x << 0.1, 0.0, -0.1;
  y << 0.4, 1.0, -0.3;
  const double alpha = std::sqrt(y.dot(a.at(x) * y));
  const double beta = b.at(x).dot(y);
  EXPECT_NEAR(F.at(x, y), std::sqrt(alpha * alpha + alpha * beta), 1e-14);
}

TEST(Eta, ListedValues) {
  EXPECT_NEAR(eta_closed_form(KParams(1, 1, 0, 1), 1.0), 1.0, 1e-15);
  const KParams k(2, 1, 0, 1);
  for (double t : {0.2, 0.9, 2.0}) EXPECT_NEAR(eta_closed_form(k, t), eta_quadrature(k, t), 1e-8);
  EXPECT_EQ(eta_closed_form(KParams(0, 0, 0, 1), 0.8), 1.0);
}

TEST(Stages, IdentityProfiles) {
  const MetricField a = random_metric(3, 8);
  const OneFormField b = random_form(3, 8);
  Vec x(3);
  x << 0.1, 0.1, -0.2;
  const DeformedPair t = tilde_deform(a, b, [](const Jet2&) { return Jet2(0.0); });
  const DeformedPair h = hat_deform(t, [](const Jet2&) { return Jet2(0.0); });
  const DeformedPair r = bar_deform(h, [](const Jet2&) { return Jet2(1.0); });
  EXPECT_LT((r.metric.at(x) - a.at(x)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((r.form.at(x) - b.at(x)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Inverse, OutputOfForwardIsFlatAndRelated) {
  // forward(inverse(abar, bbar)) reproduces the flat pair, so its metric is
  // of spray form and its form is dually related.
  const KParams k(0.3, 0.5, 0.2, 1.0);
  const RiemannPair ab = inverse_deform(flat_alpha(3, -0.5), related_beta(3, -0.5, 0.3), k);
  const RiemannPair back = forward_deform(ab.metric, ab.form, k);
  Sampler s(5);
  for (const Vec& x : s.points(ball_domain(3, 0.5), 5)) {
    EXPECT_LT(fit_spray_form(back.metric, x, s.tangents(3, 9)).residual, 1e-8);
    EXPECT_LT(fit_dually_related(back.metric, back.form, x, s.tangents(3, 9)).residual, 1e-6);
  }
}

TEST(Inverse, FamilyClosedForm) {
  // k = (kappa, -kappa, 0): the closed-form pair matches inverse_deform.
  for (double kappa : {-1.0, 0.5, 1.0}) {
    ExampleOptions o;
    o.kappa = kappa;
    const Example ex = make_example("family-1.11", o);
    Sampler s(3);
    EXPECT_LT(closed_form_gap(ex, s.points(ex.domain, 20)), 1e-8) << kappa;
  }
}

}  // namespace
