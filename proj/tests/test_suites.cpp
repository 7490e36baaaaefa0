#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dflat/suites.hpp"

using namespace dflat;

namespace {

TEST(CheckBuilder, PassAndFail) {
  CheckBuilder b("c", "claim", 1e-6);
  b.add(1e-8);
  b.add(3e-8);
  const CheckRecord r = b.finish();
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.samples, 2);
  EXPECT_DOUBLE_EQ(r.max_residual, 3e-8);
  EXPECT_DOUBLE_EQ(r.mean_residual, 2e-8);
  b.add(std::numeric_limits<double>::quiet_NaN());
  EXPECT_FALSE(b.finish().pass);
  EXPECT_FALSE(CheckBuilder("e", "empty", 1).finish().pass);
}

TEST(CheckBuilder, ExpectLargeUsesMinimum) {
  CheckBuilder b("c", "claim", 1e-3);
  b.add(0.5);
  b.add(2.0);
  EXPECT_TRUE(b.finish_expect_large().pass);
  b.add(1e-4);
  EXPECT_FALSE(b.finish_expect_large().pass);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.samples = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.dim = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.case_id = "nope";
  EXPECT_THROW(run_suite(c), ConfigError);
}

TEST(Substream, DistinctAndStable) {
  EXPECT_EQ(substream(42, 1), substream(42, 1));
  EXPECT_NE(substream(42, 1), substream(42, 2));
  EXPECT_NE(substream(42, 1), substream(43, 1));
}

TEST(Report, JsonShapeAndDeterminism) {
  RunConfig c;
  c.case_id = "funk";
  c.samples = 100;
  const SuiteReport a = run_suite(c);
  const SuiteReport b = run_suite(c);
  EXPECT_TRUE(a.pass());
  const nlohmann::json j = a.to_json();
  EXPECT_EQ(j.dump(), b.to_json().dump());
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["config"]["seed"], 42);
  ASSERT_FALSE(j["checks"].empty());
  for (const auto& check : j["checks"]) {
    EXPECT_TRUE(check.contains("max_residual"));
    EXPECT_TRUE(check.contains("tolerance"));
    EXPECT_TRUE(check.contains("anchor"));
  }
}

TEST(Report, RandomKInClass) {
  std::mt19937_64 rng(5);
  for (FCase c : {FCase::kConstant, FCase::kSqrt, FCase::kPositiveDiscriminant,
                  FCase::kZeroDiscriminant, FCase::kNegativeDiscriminant})
    for (int i = 0; i < 20; ++i)
      EXPECT_EQ(classify_f(invariants(random_k_in_class(c, rng))).branch, c) << to_string(c);
}

TEST(PhiTable, Methods) {
  const PhiTable t = phi_table(KParams(0, 0, 0, 0.5), "auto", 11);
  EXPECT_EQ(t.method, "elementary");
  ASSERT_EQ(t.rows.size(), 11u);
  for (const PhiRow& r : t.rows) EXPECT_NEAR(r.value, std::sqrt(1 + r.s), 1e-14);
  EXPECT_EQ(phi_table(KParams(0.3, 0.5, 0.2, 0.5), "auto", 5).method, "integral");
  EXPECT_THROW(phi_table(KParams(0.3, 0.5, 0.2, 0.5), "elementary", 5), DomainError);
  EXPECT_THROW(phi_table(KParams(), "auto", 1), ConfigError);
}

}  // namespace
