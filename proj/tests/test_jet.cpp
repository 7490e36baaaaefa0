#include <cmath>

#include <gtest/gtest.h>

#include "dflat/jet.hpp"

using namespace dflat;

namespace {

// f(u, v) = exp(u) v^2, written out by hand.
TEST(Jet, ProductAndExp) {
  const double u0 = 0.3, v0 = -1.2;
  const Jet2 u = Jet2::variable(u0, 2, 0);
  const Jet2 v = Jet2::variable(v0, 2, 1);
  const Jet2 f = exp(u) * v * v;
  const double e = std::exp(u0);
  EXPECT_NEAR(f.value(), e * v0 * v0, 1e-15);
  EXPECT_NEAR(f.grad(0), e * v0 * v0, 1e-15);
  EXPECT_NEAR(f.grad(1), 2 * e * v0, 1e-15);
  EXPECT_NEAR(f.hess(0, 0), e * v0 * v0, 1e-15);
  EXPECT_NEAR(f.hess(0, 1), 2 * e * v0, 1e-15);
  EXPECT_NEAR(f.hess(1, 0), 2 * e * v0, 1e-15);
  EXPECT_NEAR(f.hess(1, 1), 2 * e, 1e-15);
}

TEST(Jet, Quotient) {
  const double u0 = 0.7, v0 = 1.9;
  const Jet2 f = Jet2::variable(u0, 2, 0) / Jet2::variable(v0, 2, 1);
  EXPECT_NEAR(f.value(), u0 / v0, 1e-15);
  EXPECT_NEAR(f.grad(0), 1 / v0, 1e-15);
  EXPECT_NEAR(f.grad(1), -u0 / (v0 * v0), 1e-15);
  EXPECT_NEAR(f.hess(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(f.hess(0, 1), -1 / (v0 * v0), 1e-15);
  EXPECT_NEAR(f.hess(1, 1), 2 * u0 / (v0 * v0 * v0), 1e-15);
}

struct Unary {
  const char* name;
  Jet2 (*jet)(const Jet2&);
  double (*f)(double);
  double (*d1)(double);
  double (*d2)(double);
  double at;
};

Jet2 jet_sqrt(const Jet2& a) { return sqrt(a); }
Jet2 jet_exp(const Jet2& a) { return exp(a); }
Jet2 jet_log(const Jet2& a) { return log(a); }
Jet2 jet_atan(const Jet2& a) { return atan(a); }
Jet2 jet_asin(const Jet2& a) { return asin(a); }
Jet2 jet_asinh(const Jet2& a) { return asinh(a); }
Jet2 jet_atanh(const Jet2& a) { return atanh(a); }
Jet2 jet_pow(const Jet2& a) { return pow(a, -1.5); }

TEST(Jet, UnaryDerivatives) {
  const Unary cases[] = {
      {"sqrt", jet_sqrt, [](double x) { return std::sqrt(x); },
       [](double x) { return 0.5 / std::sqrt(x); },
       [](double x) { return -0.25 / (x * std::sqrt(x)); }, 2.3},
      {"exp", jet_exp, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); },
       [](double x) { return std::exp(x); }, -0.4},
      {"log", jet_log, [](double x) { return std::log(x); }, [](double x) { return 1 / x; },
       [](double x) { return -1 / (x * x); }, 0.8},
      {"atan", jet_atan, [](double x) { return std::atan(x); },
       [](double x) { return 1 / (1 + x * x); },
       [](double x) { return -2 * x / ((1 + x * x) * (1 + x * x)); }, 0.6},
      {"asin", jet_asin, [](double x) { return std::asin(x); },
       [](double x) { return 1 / std::sqrt(1 - x * x); },
       [](double x) { return x / std::pow(1 - x * x, 1.5); }, 0.35},
      {"asinh", jet_asinh, [](double x) { return std::asinh(x); },
       [](double x) { return 1 / std::sqrt(1 + x * x); },
       [](double x) { return -x / std::pow(1 + x * x, 1.5); }, -1.1},
      {"atanh", jet_atanh, [](double x) { return std::atanh(x); },
       [](double x) { return 1 / (1 - x * x); },
       [](double x) { return 2 * x / ((1 - x * x) * (1 - x * x)); }, -0.45},
      {"pow", jet_pow, [](double x) { return std::pow(x, -1.5); },
       [](double x) { return -1.5 * std::pow(x, -2.5); },
       [](double x) { return 3.75 * std::pow(x, -3.5); }, 1.7},
  };
  for (const Unary& c : cases) {
    // Chain through a linear inner map to exercise the composition rule.
    const Jet2 t = Jet2::variable(c.at / 2, 1, 0);
    const Jet2 r = c.jet(2.0 * t);
    EXPECT_NEAR(r.value(), c.f(c.at), 1e-14) << c.name;
    EXPECT_NEAR(r.grad(0), 2 * c.d1(c.at), 1e-13) << c.name;
    EXPECT_NEAR(r.hess(0, 0), 4 * c.d2(c.at), 1e-12) << c.name;
  }
}

TEST(Jet, ConstantsMix) {
  const Jet2 x = Jet2::variable(2.0, 3, 2);
  const Jet2 c(5.0);
  const Jet2 r = c * x + 1.0;
  EXPECT_EQ(r.nvars(), 3);
  EXPECT_DOUBLE_EQ(r.grad(2), 5.0);
  EXPECT_DOUBLE_EQ(r.grad(0), 0.0);
  EXPECT_TRUE(c.is_constant());
}

TEST(Jet, DomainErrors) {
  EXPECT_THROW(sqrt(Jet2::variable(-1.0, 1, 0)), EvaluationError);
  EXPECT_THROW(log(Jet2::variable(0.0, 1, 0)), EvaluationError);
  EXPECT_THROW(asin(Jet2::variable(1.5, 1, 0)), EvaluationError);
}

TEST(Jet, FieldAgainstFiniteDifferences) {
  const PointVectorFunction f = [](JetSpan x, JetSpan y) {
    Jet2 xx(0.0), xy(0.0), yy(0.0);
    for (size_t i = 0; i < x.size(); ++i) {
      xx += x[i] * x[i];
      xy += x[i] * y[i];
      yy += y[i] * y[i];
    }
    return sqrt(yy + xy * xy) * exp(0.3 * xx) + atan(xy);
  };
  Eigen::VectorXd x(3), y(3);
  x << 0.2, -0.1, 0.4;
  y << 1.0, 0.5, -0.7;
  const FieldDerivatives jet = eval_field(f, x, y);
  const FieldDerivatives fd = fd_oracle(f, x, y);
  EXPECT_LT(relative_deviation(jet, fd), 1e-5);
  EXPECT_LT((jet.fxx - jet.fxx.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((jet.fyy - jet.fyy.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Jet, SeedRejectsNonFinite) {
  Eigen::VectorXd x(2), y(2);
  x << 0.0, std::nan("");
  y << 1.0, 0.0;
  EXPECT_THROW(seed(EvalContext{2, true, true}, x, y), EvaluationError);
}

TEST(Jet, FunkSquaredAgainstFiniteDifferences) {
  const PointVectorFunction f = [](JetSpan x, JetSpan y) {
    Jet2 xx(0.0), xy(0.0), yy(0.0);
    for (size_t i = 0; i < x.size(); ++i) {
      xx += x[i] * x[i];
      xy += x[i] * y[i];
      yy += y[i] * y[i];
    }
    const Jet2 q = 1.0 - xx;
    const Jet2 F = (sqrt(q * yy + xy * xy) + xy) / q;
    return F * F;
  };
  Eigen::VectorXd x(3), y(3);
  x << 0.1, 0, 0;
  y << 1, 0.2, 0;
  // At h = 1e-5 second differences sit on a roundoff floor near 3e-6; h = 1e-4
  // balances truncation and roundoff.
  const FieldDerivatives jet = eval_field(f, x, y);
  EXPECT_LT(relative_deviation(jet, fd_oracle(f, x, y, 1e-5)), 1e-5);
  EXPECT_LT(relative_deviation(jet, fd_oracle(f, x, y, 1e-4)), 1e-6);
}

}  // namespace
