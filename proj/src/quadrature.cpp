#include "dflat/quadrature.hpp"

#include <cmath>

#include "dflat/linalg.hpp"

namespace dflat {
namespace {

constexpr int kMaxDepth = 48;

template <class T, class F>
T simpson_step(const F& f, double a, double b, const T& fa, const T& fm,
               const T& fb, const T& whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const T flm = f(lm);
  const T frm = f(rm);
  const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const T delta = left + right - whole;
  if (std::abs(value_of(delta)) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    throw EvaluationError("quadrature", "adaptive Simpson did not converge");
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class T, class F>
T simpson(const F& f, double a, double b, double tol) {
  if (a == b) return T(0.0);
  const double m = 0.5 * (a + b);
  const T fa = f(a);
  const T fm = f(m);
  const T fb = f(b);
  const T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, kMaxDepth);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol) {
  return simpson<double>(f, a, b, abs_tol);
}

Jet2 integrate_to(const Jet2& upper, const JetIntegrand& integrand,
                  double abs_tol) {
  const double s0 = upper.value();
  const auto at_node = [&integrand](double t) { return integrand(Jet2(t)); };
  const Jet2 interior = simpson<Jet2>(at_node, 0.0, s0, abs_tol);
  if (upper.is_constant()) return interior;

  // Second-order Taylor expansion in the upper limit around s0:
  //   I(s0 + d) = I(s0) + g(s0) d + g_t(s0) d^2 / 2,
  // with g(s0) kept as a jet so parameter dependence stays mixed in.
  const Jet2 at_limit = integrand(Jet2(s0));
  const Jet2 total = integrand(upper);
  int pivot = 0;
  for (int j = 1; j < upper.nvars(); ++j) {
    if (std::abs(upper.grad(j)) > std::abs(upper.grad(pivot))) pivot = j;
  }
  const double dg = upper.grad(pivot);
  const double g_t =
      dg != 0.0 ? (total.grad(pivot) - at_limit.grad(pivot)) / dg : 0.0;
  const Jet2 d = upper - s0;
  return interior + at_limit * d + 0.5 * g_t * (d * d);
}

}  // namespace dflat
