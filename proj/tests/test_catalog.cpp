#include <cmath>

#include <gtest/gtest.h>
#include <Eigen/Eigenvalues>

#include "dflat/catalog.hpp"

using namespace dflat;

namespace {

TEST(Catalog, FlatAlphaByHand) {
  const double mu = -0.5;
  Vec x(3), y(3);
  x << 0.2, 0.4, -0.1;
  y << 1.0, -0.3, 0.5;
  const double A = 1 + mu * x.squaredNorm();
  const Mat expect = (A * Mat::Identity(3, 3) - mu * x * x.transpose()) / std::pow(A, 1.5);
  EXPECT_LT((flat_alpha(3, mu).at(x) - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((flat_alpha(3, 0.0).at(x) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  const Vec b = related_beta(3, mu, 0.3).at(x);
  EXPECT_LT((b - 0.3 * x / std::pow(A, 1.25)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Catalog, Radii) {
  EXPECT_NEAR(radius_mu(-0.25), 2.0, 1e-15);
  EXPECT_TRUE(std::isinf(radius_mu(0.5)));
  EXPECT_NEAR(working_radius(-0.25), 1.2, 1e-15);
  EXPECT_NEAR(working_radius(1.0), 0.6, 1e-15);
}

TEST(Catalog, NavigationRoundTrip) {
  const MetricField a = random_metric(3, 17);
  const OneFormField b = random_form(3, 17, 0.2);
  const RiemannPair nav = navigation_data(a, b);
  const FinslerFunction back = navigation_form(nav.metric, nav.form);
  Vec x(3), y(3);
  x << 0.1, -0.05, 0.2;
  y << 0.6, 0.2, -1.0;
  const double alpha = std::sqrt(y.dot(a.at(x) * y));
  EXPECT_NEAR(randers_metric(a, b).at(x, y), alpha + b.at(x).dot(y), 1e-15);
  EXPECT_NEAR(back.at(x, y), alpha + b.at(x).dot(y), 1e-12);
}

TEST(Catalog, FunkIsNavigationOfEuclideanPair) {
  const FinslerFunction nav = navigation_form(flat_alpha(3, 0.0), related_beta(3, 0.0, -1.0));
  Vec x(3), y(3);
  x << 0.3, 0.1, -0.4;
  y << -0.2, 0.5, 1.0;
  EXPECT_NEAR(nav.at(x, y), funk(3).at(x, y), 1e-14);
}

TEST(Catalog, ExamplesBuildAndMatchClosedForms) {
  const std::vector<std::string> ids = example_ids();
  ASSERT_EQ(ids.size(), 7u);
  for (const std::string& id : ids) {
    const Example ex = make_example(id);
    EXPECT_EQ(ex.id, id);
    Sampler s(1);
    const std::vector<Vec> xs = s.points(ex.domain, 20);
    EXPECT_LT(closed_form_gap(ex, xs), 1e-8) << id;
  }
  EXPECT_THROW(make_example("ex-9.9"), ConfigError);
}

TEST(Catalog, RandomFieldsAreSmoothAndPositive) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MetricField a = random_metric(4, seed);
    Vec x = Vec::Constant(4, 0.3);
    const Mat m = a.at(x);
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().minCoeff(), 0.5 - 1e-12);
  }
  EXPECT_EQ(random_metric(3, 5).at(Vec::Zero(3)), random_metric(3, 5).at(Vec::Zero(3)));
}

TEST(Catalog, Entries) {
  EXPECT_TRUE(find_entry("funk").has_value());
  EXPECT_TRUE(find_entry("ex-5.3").has_value());
  EXPECT_FALSE(find_entry("nope").has_value());
  for (const std::string& id : example_ids()) EXPECT_TRUE(find_entry(id).has_value()) << id;
}

}  // namespace
