#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dflat/jet.hpp"

namespace dflat {

// Invariants of the constants (k1, k2, k3) under the transformation group:
//   delta1 = k2^2 + 4 k3, delta2 = k2 - 2 k1, delta3 = k1^2 - k1 k2 - k3,
// which always satisfy delta2^2 - 4 delta3 = delta1.
struct InvariantTriple {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
};

// Constants of the ODE
//   s (k2 - k3 s^2)(phi phi' - s phi'^2 - s phi phi'')
//     - (phi'^2 + phi phi'') + k1 phi (phi - s phi') = 0
// together with the initial slope eps = phi'(0) (phi(0) = 1).
struct KParams {
  KParams() : KParams(0.0, 0.0, 0.0, 0.5) {}
  KParams(double k1, double k2, double k3, double eps);

  double k1;
  double k2;
  double k3;
  double eps;
};

InvariantTriple invariants(const KParams& k);

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double s) const { return s > lo && s < hi; }
  bool contains(const Interval& other) const {
    return other.lo >= lo && other.hi <= hi;
  }
};

struct PhiValues {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// phi(s) on an open interval, evaluable through jets so that any number of
// derivatives up to two flow through compositions such as alpha phi(beta/alpha).
class PhiFunction {
 public:
  using Fn = std::function<Jet2(const Jet2& s)>;

  PhiFunction(Fn fn, Interval domain, std::string label);

  // Throws DomainError when s lies outside the domain.
  Jet2 operator()(const Jet2& s) const;
  PhiValues eval(double s) const;

  const Interval& domain() const { return domain_; }
  const std::string& label() const { return label_; }

  // Evenly spaced interior grid with `count` points.
  std::vector<double> grid(int count) const;

 private:
  Fn fn_;
  Interval domain_;
  std::string label_;
};

// Normalized left-hand side of the ODE at s:
//   LHS / (phi^2 + phi'^2 + phi''^2 + 1).
double ode_residual(const PhiFunction& phi, const KParams& k, double s);
double ode_residual(const PhiValues& p, const KParams& k, double s);

// Max normalized residual over a grid.
double max_ode_residual(const PhiFunction& phi, const KParams& k,
                         const std::vector<double>& grid);

// g_u(phi)(s) = sqrt(1 + u s^2) phi(s / sqrt(1 + u s^2)).
PhiFunction apply_gu(const PhiFunction& phi, double u);
// As above, throwing DomainError (carrying the achievable interval) when the
// transformed function is not defined on all of `required`.
PhiFunction apply_gu(const PhiFunction& phi, double u, const Interval& required);

// h_v(phi)(s) = phi(v s), v != 0.
PhiFunction apply_hv(const PhiFunction& phi, double v);

// Element g_u o h_v of the transformation group, represented by (u, v)
// with product (u1, v1)(u2, v2) = (u1 + v1^2 u2, v1 v2).
struct TransformElement {
  double u = 0.0;
  double v = 1.0;

  TransformElement compose(const TransformElement& rhs) const;
  TransformElement inverse() const;
  PhiFunction apply(const PhiFunction& phi) const;
  KParams transform(const KParams& k) const;
};

// Parameter transport carrying solutions to solutions.
KParams transform_k_gu(const KParams& k, double u);
KParams transform_k_hv(const KParams& k, double v);

// The five branches of the factor f(s) solving the reduced equation
//   (1 + d2 s^2 + d3 s^4) u'' = s (d2 + d3 s^2) u',  u' = 2 eps f, f(0) = 1.
enum class FCase { kConstant, kSqrt, kPositiveDiscriminant, kZeroDiscriminant, kNegativeDiscriminant };

inline constexpr double kBranchTolerance = 1e-12;

struct FClassification {
  FCase branch;
  bool near_boundary = false;  // parameters within tolerance of a degenerate case
};

FClassification classify_f(const InvariantTriple& d);
std::string to_string(FCase c);

double f_factor(const InvariantTriple& d, double s);
Jet2 f_factor(const InvariantTriple& d, const Jet2& s);

// Closed-form branch evaluated as if `branch` applied; used to adjudicate
// individual branch formulas against a quadrature of log f.
Jet2 f_factor_branch(FCase branch, const InvariantTriple& d, const Jet2& s);

// Natural domain: the first sign change of `admissible` on each side of 0,
// located by bisection and shrunk by 5%. Searches |s| <= limit.
Interval natural_domain(const std::function<bool(double)>& admissible,
                        double limit);

inline constexpr double kPhiSearchLimit = 2.0;

// General solution with phi(0) = 1, phi'(0) = eps:
//   phi(s) = sqrt((1 + k1 s^2)(1 + 2 eps int_0^{s/sqrt(1+k1 s^2)} f)).
PhiFunction general_solution(const KParams& k,
                             double search_limit = kPhiSearchLimit);
double solve_phi(const KParams& k, double s);

// Closed-form and quadrature-only members of the elementary-solution list.
enum class ElementaryCase {
  kLinear,          // k = 0: sqrt(1 + 2 eps s)
  kArcsin,          // k1 = 0, k2 < 0, k3 = 0
  kArcsinh,         // k1 = 0, k2 > 0, k3 = 0
  kQuadratic,       // k3 = 0, k1 + k2 = 0
  kEvenSeries,      // k1 != 0, k2 = k1 / (2n), k3 = 0
  kArctanSeries,    // k1 > 0, k2 = k1 / (2n + 1), k3 = 0
  kArctanhSeries,   // k1 < 0, k2 = k1 / (2n + 1), k3 = 0
  kOddSeries,       // k1 != 0, k2 = -k1 / (2n + 1), k3 = 0
  kArcsinSeries,    // k1 > 0, k2 = -k1 / (2n), k3 = 0
  kArcsinhSeries,   // k1 < 0, k2 = -k1 / (2n), k3 = 0
  kQuarticRoot,     // k1 = k2 = 0, k3 != 0 (quadrature)
  kGaussian,        // k1 != 0, k2 = k3 = 0 (quadrature)
};

std::string to_string(ElementaryCase c);
std::vector<ElementaryCase> all_elementary_cases();

inline constexpr int kMaxSeriesIndex = 12;

struct ElementaryMatch {
  ElementaryCase which;
  int n = 0;  // series index, 0 when not applicable
};

// First matching case for k (checked in the order of the enum, series
// index n <= 12). Throws DomainError when nothing matches.
ElementaryMatch match_elementary(const KParams& k);

PhiFunction elementary_solution(const KParams& k,
                                double search_limit = kPhiSearchLimit);
double elementary_solution(ElementaryCase which, const KParams& k, int n,
                           double s);

// Exact double factorial; m!! = 1 for m <= 0.
long long double_factorial(int m);

// Independent reference: integrates the reduced equation for u with an
// adaptive Dormand-Prince stepper (tolerance 1e-10) from u(0) = 1,
// u'(0) = 2 eps and maps back through g_{k1}. Throws DomainError with the
// reachable extent when a singularity lies inside the grid.
std::vector<double> ode_oracle(const KParams& k,
                               const std::vector<double>& s_grid);

}  // namespace dflat
