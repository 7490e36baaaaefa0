#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dflat/errors.hpp"

namespace dflat {

inline constexpr int kMaxJetVars = 12;
inline constexpr int kMaxJetHessian = kMaxJetVars * (kMaxJetVars + 1) / 2;

// Second-order truncated Taylor scalar over m independent variables.
//
// A Jet2 carries a value, its gradient and its (symmetric) Hessian with
// respect to the seeded variables. A jet with m == 0 is a constant and
// mixes freely with jets of any width; two non-constant operands must agree
// on m. The Hessian is stored packed (lower triangle) so symmetry holds by
// construction.
class Jet2 {
 public:
  Jet2() : Jet2(0.0) {}
  Jet2(double value) : m_(0), v_(value) {}  // NOLINT: constants convert implicitly

  static Jet2 variable(double value, int nvars, int index);

  Jet2(const Jet2& other) { copy_from(other); }
  Jet2& operator=(const Jet2& other) {
    if (this != &other) copy_from(other);
    return *this;
  }

  double value() const { return v_; }
  int nvars() const { return m_; }
  bool is_constant() const { return m_ == 0; }
  double grad(int i) const { return i < m_ ? g_[i] : 0.0; }
  double hess(int i, int j) const {
    if (i >= m_ || j >= m_) return 0.0;
    return h_[packed(i, j)];
  }

  Eigen::VectorXd gradient() const;
  Eigen::MatrixXd hessian() const;

  Jet2& operator+=(const Jet2& rhs);
  Jet2& operator-=(const Jet2& rhs);
  Jet2& operator*=(const Jet2& rhs);
  Jet2& operator/=(const Jet2& rhs);

  // f(a) for a scalar function with f(a.value) = f0, f' = f1, f'' = f2.
  friend Jet2 chain(const Jet2& a, double f0, double f1, double f2);
  friend Jet2 operator-(const Jet2& a);
  friend Jet2 operator+(const Jet2& a, const Jet2& b);
  friend Jet2 operator-(const Jet2& a, const Jet2& b);
  friend Jet2 operator*(const Jet2& a, const Jet2& b);
  friend Jet2 operator/(const Jet2& a, const Jet2& b);

  static constexpr int packed(int i, int j) {
    return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
  }
  static constexpr int packed_size(int m) { return m * (m + 1) / 2; }

 private:
  void copy_from(const Jet2& other);
  static Jet2 with_width(double value, int m);  // zeroed derivatives

  int m_;
  double v_;
  std::array<double, kMaxJetVars> g_;
  std::array<double, kMaxJetHessian> h_;
};

Jet2 sqrt(const Jet2& a);
Jet2 pow(const Jet2& a, double p);
Jet2 exp(const Jet2& a);
Jet2 log(const Jet2& a);
Jet2 atan(const Jet2& a);
Jet2 asin(const Jet2& a);
Jet2 asinh(const Jet2& a);
Jet2 atanh(const Jet2& a);
inline Jet2 square(const Jet2& a) { return a * a; }

using JetSpan = std::span<const Jet2>;

// Scalar function of a point x and a tangent vector y (both length n).
using PointVectorFunction = std::function<Jet2(JetSpan x, JetSpan y)>;

// Which of the 2n slots (x^1..x^n, y^1..y^n) are independent variables.
// Seeded slots are numbered x first, then y.
struct EvalContext {
  int dim = 3;
  bool seed_point = true;
  bool seed_vector = true;

  int nvars() const { return (seed_point ? dim : 0) + (seed_vector ? dim : 0); }
};

struct SeededInputs {
  std::vector<Jet2> x;
  std::vector<Jet2> y;
};

// One-hot seeding. Throws EvaluationError on non-finite coordinates.
SeededInputs seed(const EvalContext& ctx, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& y);

// Seeds only the point coordinates (m = n); used by tensor fields on x.
std::vector<Jet2> seed_point(const Eigen::VectorXd& x);

std::vector<Jet2> constants(const Eigen::VectorXd& v);

// All first and second partials of a scalar field of (x, y).
struct FieldDerivatives {
  double value = 0.0;
  Eigen::VectorXd fx;
  Eigen::VectorXd fy;
  Eigen::MatrixXd fxx;
  Eigen::MatrixXd fxy;  // fxy(k, l) = d^2 F / dx^k dy^l
  Eigen::MatrixXd fyy;
};

FieldDerivatives eval_field(const PointVectorFunction& f,
                            const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y);

// Central differences with step h; the cross-check for eval_field.
FieldDerivatives fd_oracle(const PointVectorFunction& f,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           double h = 1e-5);

// Largest blockwise relative deviation between two derivative sets. Each
// block (value, fx, fy, fxx, fxy, fyy) is compared in max-norm against the
// larger of its own magnitude and |F|.
double relative_deviation(const FieldDerivatives& a,
                          const FieldDerivatives& b);

}  // namespace dflat
