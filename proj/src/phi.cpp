#include "dflat/phi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "dflat/errors.hpp"
#include "dflat/quadrature.hpp"

namespace dflat {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

KParams::KParams(double k1_, double k2_, double k3_, double eps_)
    : k1(k1_), k2(k2_), k3(k3_), eps(eps_) {
  if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(k3) ||
      !std::isfinite(eps))
    throw ConfigError("KParams: non-finite constant");
  if (eps == 0.0) throw ConfigError("KParams: eps = phi'(0) must be nonzero");
  const InvariantTriple d = invariants(*this);
  const double lhs = d.delta2 * d.delta2 - 4.0 * d.delta3;
  const double scale = std::max({1.0, k1 * k1, k2 * k2, std::abs(k3)});
  if (std::abs(lhs - d.delta1) > 1e-13 * scale)
    throw EvaluationError("invariants", "delta2^2 - 4 delta3 != delta1");
}

InvariantTriple invariants(const KParams& k) {
  return {k.k2 * k.k2 + 4.0 * k.k3, k.k2 - 2.0 * k.k1,
          k.k1 * k.k1 - k.k1 * k.k2 - k.k3};
}

PhiFunction::PhiFunction(Fn fn, Interval domain, std::string label)
    : fn_(std::move(fn)), domain_(domain), label_(std::move(label)) {
  if (!(domain_.lo < 0.0 && domain_.hi > 0.0))
    throw DomainError(label_ + ": domain must contain 0", domain_.lo, domain_.hi);
}

Jet2 PhiFunction::operator()(const Jet2& s) const {
  if (!domain_.contains(s.value()))
    throw DomainError(label_ + ": s = " + fmt(s.value()) + " outside domain",
                      domain_.lo, domain_.hi);
  return fn_(s);
}

PhiValues PhiFunction::eval(double s) const {
  const Jet2 r = (*this)(Jet2::variable(s, 1, 0));
  return {r.value(), r.grad(0), r.hess(0, 0)};
}

std::vector<double> PhiFunction::grid(int count) const {
  // Infinite ends are capped so grids stay in a region where the checks
  // are meaningful.
  const double lo = std::max(domain_.lo, -kPhiSearchLimit);
  const double hi = std::min(domain_.hi, kPhiSearchLimit);
  std::vector<double> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(lo + (hi - lo) * (i + 1.0) / (count + 1.0));
  return out;
}

double ode_residual(const PhiValues& p, const KParams& k, double s) {
  const double f = p.value, f1 = p.d1, f2 = p.d2;
  const double lhs = s * (k.k2 - k.k3 * s * s) * (f * f1 - s * f1 * f1 - s * f * f2) -
                     (f1 * f1 + f * f2) + k.k1 * f * (f - s * f1);
  return lhs / (f * f + f1 * f1 + f2 * f2 + 1.0);
}

double ode_residual(const PhiFunction& phi, const KParams& k, double s) {
  return ode_residual(phi.eval(s), k, s);
}

double max_ode_residual(const PhiFunction& phi, const KParams& k,
                         const std::vector<double>& grid) {
  double worst = 0.0;
  for (double s : grid) worst = std::max(worst, std::abs(ode_residual(phi, k, s)));
  return worst;
}

namespace {

// Preimage of t under s -> s / sqrt(1 + u s^2).
double gu_preimage(double t, double u) {
  if (std::isinf(t)) {
    if (u < 0.0) return std::copysign(1.0 / std::sqrt(-u), t);
    return t;
  }
  const double q = 1.0 - u * t * t;
  if (q <= 0.0) return std::copysign(std::numeric_limits<double>::infinity(), t);
  return t / std::sqrt(q);
}

}  // namespace

PhiFunction apply_gu(const PhiFunction& phi, double u) {
  const Interval dom{gu_preimage(phi.domain().lo, u), gu_preimage(phi.domain().hi, u)};
  return PhiFunction(
      [phi, u](const Jet2& s) {
        const Jet2 q = 1.0 + u * s * s;
        if (q.value() <= 0.0)
          throw DomainError("g_u: 1 + u s^2 <= 0 at s = " + fmt(s.value()));
        const Jet2 r = sqrt(q);
        return r * phi(s / r);
      },
      dom, "g_" + fmt(u) + "(" + phi.label() + ")");
}

PhiFunction apply_gu(const PhiFunction& phi, double u, const Interval& required) {
  PhiFunction out = apply_gu(phi, u);
  if (!(out.domain().lo <= required.lo && out.domain().hi >= required.hi))
    throw DomainError("g_u: transformed domain does not cover the requested interval",
                      out.domain().lo, out.domain().hi);
  return out;
}

PhiFunction apply_hv(const PhiFunction& phi, double v) {
  if (v == 0.0 || !std::isfinite(v)) throw ConfigError("h_v: v must be nonzero");
  double lo = phi.domain().lo / v;
  double hi = phi.domain().hi / v;
  if (v < 0.0) std::swap(lo, hi);
  return PhiFunction([phi, v](const Jet2& s) { return phi(v * s); }, Interval{lo, hi},
                     "h_" + fmt(v) + "(" + phi.label() + ")");
}

TransformElement TransformElement::compose(const TransformElement& rhs) const {
  return {u + v * v * rhs.u, v * rhs.v};
}

TransformElement TransformElement::inverse() const {
  if (v == 0.0) throw ConfigError("TransformElement: v must be nonzero");
  return {-u / (v * v), 1.0 / v};
}

PhiFunction TransformElement::apply(const PhiFunction& phi) const {
  return apply_gu(apply_hv(phi, v), u);
}

KParams TransformElement::transform(const KParams& k) const {
  return transform_k_gu(transform_k_hv(k, v), u);
}

KParams transform_k_gu(const KParams& k, double u) {
  return KParams(k.k1 + u, k.k2 + 2.0 * u, k.k3 - k.k2 * u - u * u, k.eps);
}

KParams transform_k_hv(const KParams& k, double v) {
  if (v == 0.0) throw ConfigError("h_v: v must be nonzero");
  return KParams(v * v * k.k1, v * v * k.k2, v * v * v * v * k.k3, v * k.eps);
}

FClassification classify_f(const InvariantTriple& d) {
  const double tol = kBranchTolerance;
  FClassification c{FCase::kConstant, false};
  const bool d3_zero = std::abs(d.delta3) <= tol;
  const bool d1_zero = std::abs(d.delta1) <= tol;
  c.near_boundary = (d3_zero && d.delta3 != 0.0) || (d1_zero && d.delta1 != 0.0);
  if (d3_zero) {
    c.branch = d1_zero ? FCase::kConstant : FCase::kSqrt;
  } else if (d1_zero) {
    c.branch = FCase::kZeroDiscriminant;
  } else {
    c.branch = d.delta1 > 0.0 ? FCase::kPositiveDiscriminant : FCase::kNegativeDiscriminant;
  }
  return c;
}

std::string to_string(FCase c) {
  switch (c) {
    case FCase::kConstant: return "constant";
    case FCase::kSqrt: return "sqrt";
    case FCase::kPositiveDiscriminant: return "positive-discriminant";
    case FCase::kZeroDiscriminant: return "zero-discriminant";
    case FCase::kNegativeDiscriminant: return "negative-discriminant";
  }
  return "?";
}

namespace {

Jet2 positive_part(const Jet2& v, const char* what, double s) {
  if (v.value() <= 0.0)
    throw DomainError(std::string("f: radicand ") + what + " <= 0 at s = " + fmt(s));
  return v;
}

}  // namespace

Jet2 f_factor_branch(FCase branch, const InvariantTriple& d, const Jet2& s) {
  const Jet2 s2 = s * s;
  const double sv = s.value();
  switch (branch) {
    case FCase::kConstant:
      return Jet2(1.0);
    case FCase::kSqrt:
      return sqrt(positive_part(1.0 + d.delta2 * s2, "1 + d2 s^2", sv));
    case FCase::kPositiveDiscriminant: {
      const double r = std::sqrt(d.delta1);
      const Jet2 quartic =
          positive_part(1.0 + d.delta2 * s2 + d.delta3 * s2 * s2, "1 + d2 s^2 + d3 s^4", sv);
      const Jet2 num = positive_part(2.0 + (d.delta2 + r) * s2, "2 + (d2 + sqrt d1) s^2", sv);
      const Jet2 den = positive_part(2.0 + (d.delta2 - r) * s2, "2 + (d2 - sqrt d1) s^2", sv);
      return pow(quartic, 0.25) * pow(num / den, d.delta2 / (4.0 * r));
    }
    case FCase::kZeroDiscriminant: {
      const Jet2 half = positive_part(1.0 + 0.5 * d.delta2 * s2, "1 + d2 s^2 / 2", sv);
      return sqrt(half) * exp(0.5 - 1.0 / (2.0 + d.delta2 * s2));
    }
    case FCase::kNegativeDiscriminant: {
      const double r = std::sqrt(-d.delta1);
      const Jet2 quartic =
          positive_part(1.0 + d.delta2 * s2 + d.delta3 * s2 * s2, "1 + d2 s^2 + d3 s^4", sv);
      const Jet2 angle = atan((d.delta2 + 2.0 * d.delta3 * s2) / r) - std::atan(d.delta2 / r);
      return pow(quartic, 0.25) * exp(d.delta2 / (2.0 * r) * angle);
    }
  }
  throw ConfigError("f: unknown branch");
}

Jet2 f_factor(const InvariantTriple& d, const Jet2& s) {
  return f_factor_branch(classify_f(d).branch, d, s);
}

double f_factor(const InvariantTriple& d, double s) {
  return f_factor(d, Jet2(s)).value();
}

Interval natural_domain(const std::function<bool(double)>& admissible,
                        double limit) {
  if (!admissible(0.0)) throw DomainError("natural_domain: 0 is not admissible");
  constexpr int kSteps = 400;
  constexpr double kShrink = 0.95;
  const double step = limit / kSteps;
  Interval out;
  for (int side : {-1, 1}) {
    double good = 0.0;
    double bound = limit;
    for (int i = 1; i <= kSteps; ++i) {
      const double s = side * i * step;
      if (!admissible(s)) {
        double a = good, b = s;
        for (int it = 0; it < 60; ++it) {
          const double m = 0.5 * (a + b);
          (admissible(m) ? a : b) = m;
        }
        bound = kShrink * std::abs(a);
        break;
      }
      good = s;
    }
    if (side < 0)
      out.lo = -bound;
    else
      out.hi = bound;
  }
  return out;
}

namespace {

bool admissible_value(const PhiFunction::Fn& fn, double s) {
  try {
    const double v = fn(Jet2(s)).value();
    return std::isfinite(v) && v > 0.0;
  } catch (const std::runtime_error&) {
    return false;
  }
}

PhiFunction with_natural_domain(PhiFunction::Fn fn, double limit, std::string label) {
  const Interval dom =
      natural_domain([&fn](double s) { return admissible_value(fn, s); }, limit);
  return PhiFunction(std::move(fn), dom, std::move(label));
}

Jet2 checked_sqrt(const Jet2& radicand, const char* what, double s) {
  if (!(radicand.value() > 0.0))
    throw DomainError(std::string(what) + ": radicand <= 0 at s = " + fmt(s));
  return sqrt(radicand);
}

PhiFunction::Fn integral_form_fn(const KParams& k) {
  const InvariantTriple d = invariants(k);
  return [k, d](const Jet2& s) {
    const Jet2 q = 1.0 + k.k1 * s * s;
    if (q.value() <= 0.0)
      throw DomainError("solve_phi: 1 + k1 s^2 <= 0 at s = " + fmt(s.value()));
    const Jet2 sigma = s / sqrt(q);
    const Jet2 integral =
        integrate_to(sigma, [&d](const Jet2& t) { return f_factor(d, t); });
    return checked_sqrt(q * (1.0 + 2.0 * k.eps * integral), "solve_phi", s.value());
  };
}

std::string describe(const KParams& k) {
  return "k=(" + fmt(k.k1) + "," + fmt(k.k2) + "," + fmt(k.k3) + "),eps=" + fmt(k.eps);
}

}  // namespace

PhiFunction general_solution(const KParams& k, double search_limit) {
  std::string label = "integral_form[" + describe(k) + "]";
  if (classify_f(invariants(k)).near_boundary) label += "[near-degenerate branch]";
  return with_natural_domain(integral_form_fn(k), search_limit, std::move(label));
}

double solve_phi(const KParams& k, double s) { return integral_form_fn(k)(Jet2(s)).value(); }

std::string to_string(ElementaryCase c) {
  switch (c) {
    case ElementaryCase::kLinear: return "linear";
    case ElementaryCase::kArcsin: return "arcsin";
    case ElementaryCase::kArcsinh: return "arcsinh";
    case ElementaryCase::kQuadratic: return "quadratic";
    case ElementaryCase::kEvenSeries: return "even-series";
    case ElementaryCase::kArctanSeries: return "arctan-series";
    case ElementaryCase::kArctanhSeries: return "arctanh-series";
    case ElementaryCase::kOddSeries: return "odd-series";
    case ElementaryCase::kArcsinSeries: return "arcsin-series";
    case ElementaryCase::kArcsinhSeries: return "arcsinh-series";
    case ElementaryCase::kQuarticRoot: return "quartic-root";
    case ElementaryCase::kGaussian: return "gaussian";
  }
  return "?";
}

std::vector<ElementaryCase> all_elementary_cases() {
  return {ElementaryCase::kLinear,        ElementaryCase::kArcsin,
          ElementaryCase::kArcsinh,       ElementaryCase::kQuadratic,
          ElementaryCase::kEvenSeries,    ElementaryCase::kArctanSeries,
          ElementaryCase::kArctanhSeries, ElementaryCase::kOddSeries,
          ElementaryCase::kArcsinSeries,  ElementaryCase::kArcsinhSeries,
          ElementaryCase::kQuarticRoot,   ElementaryCase::kGaussian};
}

long long double_factorial(int m) {
  long long r = 1;
  for (; m > 0; m -= 2) r *= m;
  return r;
}

namespace {

using Wide = __int128;

// (a * b * c) / (d * e) reduced exactly, then rounded once.
double exact_ratio(long long a, long long b, long long c, long long d, long long e) {
  Wide num = Wide(a) * b * c;
  Wide den = Wide(d) * e;
  auto gcd = [](Wide x, Wide y) {
    if (x < 0) x = -x;
    while (y != 0) {
      const Wide t = x % y;
      x = y;
      y = t;
    }
    return x;
  };
  const Wide g = gcd(num, den);
  if (g != 0) {
    num /= g;
    den /= g;
  }
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

long long df(int m) { return double_factorial(m); }

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }
bool zero(double a) { return std::abs(a) <= 1e-12; }

bool case_applies(ElementaryCase c, const KParams& k, int n) {
  const bool k3_zero = zero(k.k3);
  switch (c) {
    case ElementaryCase::kLinear:
      return zero(k.k1) && zero(k.k2) && k3_zero;
    case ElementaryCase::kArcsin:
      return zero(k.k1) && k.k2 < 0.0 && !zero(k.k2) && k3_zero;
    case ElementaryCase::kArcsinh:
      return zero(k.k1) && k.k2 > 0.0 && !zero(k.k2) && k3_zero;
    case ElementaryCase::kQuadratic:
      return k3_zero && zero(k.k1 + k.k2);
    case ElementaryCase::kEvenSeries:
      return n >= 1 && !zero(k.k1) && k3_zero && near(k.k2, k.k1 / (2.0 * n));
    case ElementaryCase::kArctanSeries:
      return n >= 1 && k.k1 > 0.0 && !zero(k.k1) && k3_zero &&
             near(k.k2, k.k1 / (2.0 * n + 1.0));
    case ElementaryCase::kArctanhSeries:
      return n >= 1 && k.k1 < 0.0 && !zero(k.k1) && k3_zero &&
             near(k.k2, k.k1 / (2.0 * n + 1.0));
    case ElementaryCase::kOddSeries:
      return n >= 1 && !zero(k.k1) && k3_zero && near(k.k2, -k.k1 / (2.0 * n + 1.0));
    case ElementaryCase::kArcsinSeries:
      return n >= 1 && k.k1 > 0.0 && !zero(k.k1) && k3_zero && near(k.k2, -k.k1 / (2.0 * n));
    case ElementaryCase::kArcsinhSeries:
      return n >= 1 && k.k1 < 0.0 && !zero(k.k1) && k3_zero && near(k.k2, -k.k1 / (2.0 * n));
    case ElementaryCase::kQuarticRoot:
      return zero(k.k1) && zero(k.k2) && !k3_zero;
    case ElementaryCase::kGaussian:
      return !zero(k.k1) && zero(k.k2) && k3_zero;
  }
  return false;
}

bool uses_series_index(ElementaryCase c) {
  switch (c) {
    case ElementaryCase::kEvenSeries:
    case ElementaryCase::kArctanSeries:
    case ElementaryCase::kArctanhSeries:
    case ElementaryCase::kOddSeries:
    case ElementaryCase::kArcsinSeries:
    case ElementaryCase::kArcsinhSeries:
      return true;
    default:
      return false;
  }
}

// Bracket shared by the arctan/arctanh/arcsin/arcsinh series:
//   (2n+1)!!/(2n)!! - sum_{k=1}^{n-1} 2(n-k)(2n-1)!!(2k-2)!! / ((2n)!!(2k+1)!!) w^{sign k}
Jet2 odd_bracket(int n, const Jet2& w, int sign) {
  Jet2 acc = exact_ratio(df(2 * n + 1), 1, 1, df(2 * n), 1);
  for (int j = 1; j <= n - 1; ++j) {
    const double c = exact_ratio(2LL * (n - j), df(2 * n - 1), df(2 * j - 2), df(2 * n),
                                 df(2 * j + 1));
    acc -= c * pow(w, sign * j);
  }
  return acc;
}

Jet2 elementary_jet(ElementaryCase c, const KParams& k, int n, const Jet2& s) {
  const double eps = k.eps;
  const double sv = s.value();
  const Jet2 s2 = s * s;
  switch (c) {
    case ElementaryCase::kLinear:
      return checked_sqrt(1.0 + 2.0 * eps * s, "linear", sv);
    case ElementaryCase::kArcsin: {
      const double r = std::sqrt(-k.k2);
      const Jet2 w = checked_sqrt(1.0 + k.k2 * s2, "arcsin", sv);
      return checked_sqrt(1.0 + eps * (s * w + asin(r * s) / r), "arcsin", sv);
    }
    case ElementaryCase::kArcsinh: {
      const double r = std::sqrt(k.k2);
      const Jet2 w = sqrt(1.0 + k.k2 * s2);
      return checked_sqrt(1.0 + eps * (s * w + asinh(r * s) / r), "arcsinh", sv);
    }
    case ElementaryCase::kQuadratic:
      return checked_sqrt(1.0 + 2.0 * eps * s + k.k1 * s2, "quadratic", sv);
    case ElementaryCase::kEvenSeries: {
      const Jet2 w = 1.0 + k.k2 * s2;
      Jet2 bracket = exact_ratio(df(2 * n), 1, 1, df(2 * n - 1), 1);
      for (int j = 1; j <= n - 1; ++j) {
        const double cj = exact_ratio(2LL * (n - j), df(2 * n - 2), df(2 * j - 3),
                                      df(2 * n - 1), df(2 * j));
        bracket -= cj * pow(w, -j);
      }
      return checked_sqrt(1.0 + k.k1 * s2 + eps * s * checked_sqrt(w, "even-series", sv) * bracket,
                          "even-series", sv);
    }
    case ElementaryCase::kArctanSeries:
    case ElementaryCase::kArctanhSeries: {
      const Jet2 w = 1.0 + k.k2 * s2;
      const double lead = exact_ratio(df(2 * n - 1), 1, 1, df(2 * n), 1);
      Jet2 angle;
      if (c == ElementaryCase::kArctanSeries) {
        const double r = std::sqrt(k.k2);
        angle = atan(r * s) / r;
      } else {
        const double r = std::sqrt(-k.k2);
        if (std::abs(r * sv) >= 1.0)
          throw DomainError("arctanh-series: |sqrt(-k2) s| >= 1 at s = " + fmt(sv));
        angle = atanh(r * s) / r;
      }
      const Jet2 rad = (1.0 + k.k1 * s2) * (1.0 + lead * eps * angle) +
                       eps * s * odd_bracket(n, w, -1);
      return checked_sqrt(rad, to_string(c).c_str(), sv);
    }
    case ElementaryCase::kOddSeries: {
      const Jet2 w = 1.0 + k.k2 * s2;
      Jet2 bracket = exact_ratio(df(2 * n + 2), 1, 1, df(2 * n + 1), 1);
      for (int j = 1; j <= n; ++j) {
        const double cj = exact_ratio(2LL * (n - j + 1), df(2 * n), df(2 * j - 3),
                                      df(2 * n + 1), df(2 * j));
        bracket -= cj * pow(w, j);
      }
      return checked_sqrt(1.0 + k.k1 * s2 + eps * s * bracket, "odd-series", sv);
    }
    case ElementaryCase::kArcsinSeries:
    case ElementaryCase::kArcsinhSeries: {
      const Jet2 w = 1.0 + k.k2 * s2;
      const double lead = exact_ratio(df(2 * n - 1), 1, 1, df(2 * n), 1);
      Jet2 angle;
      if (c == ElementaryCase::kArcsinSeries) {
        const double r = std::sqrt(-k.k2);
        if (std::abs(r * sv) >= 1.0)
          throw DomainError("arcsin-series: |sqrt(-k2) s| >= 1 at s = " + fmt(sv));
        angle = asin(r * s) / r;
      } else {
        const double r = std::sqrt(k.k2);
        angle = asinh(r * s) / r;
      }
      const Jet2 rad = (1.0 + k.k1 * s2) * (1.0 + lead * eps * angle) +
                       eps * s * checked_sqrt(w, to_string(c).c_str(), sv) *
                           odd_bracket(n, w, 1);
      return checked_sqrt(rad, to_string(c).c_str(), sv);
    }
    case ElementaryCase::kQuarticRoot: {
      const double k3 = k.k3;
      const Jet2 integral = integrate_to(s, [k3, sv](const Jet2& t) {
        const Jet2 q = 1.0 - k3 * t * t * t * t;
        if (q.value() <= 0.0)
          throw DomainError("quartic-root: 1 - k3 s^4 <= 0 at s = " + fmt(sv));
        return pow(q, 0.25);
      });
      return checked_sqrt(1.0 + 2.0 * eps * integral, "quartic-root", sv);
    }
    case ElementaryCase::kGaussian: {
      const double k1 = k.k1;
      const Jet2 q = 1.0 + k1 * s2;
      if (q.value() <= 0.0)
        throw DomainError("gaussian: 1 + k1 s^2 <= 0 at s = " + fmt(sv));
      const Jet2 integral = integrate_to(s, [k1, sv](const Jet2& t) {
        const Jet2 w = 1.0 + k1 * t * t;
        if (w.value() <= 0.0)
          throw DomainError("gaussian: 1 + k1 s^2 <= 0 at s = " + fmt(sv));
        return exp(-0.5 * k1 * t * t) / (w * w);
      });
      return checked_sqrt(q * (1.0 + 2.0 * eps * integral), "gaussian", sv);
    }
  }
  throw ConfigError("elementary_solution: unknown case");
}

}  // namespace

ElementaryMatch match_elementary(const KParams& k) {
  for (ElementaryCase c : all_elementary_cases()) {
    if (!uses_series_index(c)) {
      if (case_applies(c, k, 0)) return {c, 0};
      continue;
    }
    for (int n = 1; n <= kMaxSeriesIndex; ++n)
      if (case_applies(c, k, n)) return {c, n};
  }
  throw DomainError("elementary_solution: " + describe(k) +
                    " matches no listed elementary case");
}

PhiFunction elementary_solution(const KParams& k, double search_limit) {
  const ElementaryMatch m = match_elementary(k);
  PhiFunction::Fn fn = [k, m](const Jet2& s) { return elementary_jet(m.which, k, m.n, s); };
  std::string label = to_string(m.which);
  if (m.n > 0) label += "[n=" + std::to_string(m.n) + "]";
  return with_natural_domain(std::move(fn), search_limit, label + "[" + describe(k) + "]");
}

double elementary_solution(ElementaryCase which, const KParams& k, int n, double s) {
  if (uses_series_index(which) && (n < 1 || n > kMaxSeriesIndex))
    throw DomainError("elementary_solution: series index out of range", 1, kMaxSeriesIndex);
  if (!case_applies(which, k, n))
    throw DomainError("elementary_solution: " + describe(k) + " does not satisfy the " +
                      to_string(which) + " preconditions");
  return elementary_jet(which, k, n, Jet2(s)).value();
}

namespace {

using OdeState = std::array<double, 2>;

struct Singular {
  double at;
};

}  // namespace

std::vector<double> ode_oracle(const KParams& k, const std::vector<double>& s_grid) {
  namespace odeint = boost::numeric::odeint;
  const InvariantTriple d = invariants(k);
  const auto rhs = [&d](const OdeState& x, OdeState& dxdt, double t) {
    const double t2 = t * t;
    const double den = 1.0 + d.delta2 * t2 + d.delta3 * t2 * t2;
    if (den <= 0.0) throw Singular{t};
    dxdt[0] = x[1];
    dxdt[1] = t * (d.delta2 + d.delta3 * t2) * x[1] / den;
  };

  // sigma = s / sqrt(1 + k1 s^2), its inverse, and u on both sides of 0.
  const auto to_sigma = [&k](double s) {
    const double q = 1.0 + k.k1 * s * s;
    if (q <= 0.0)
      throw DomainError("ode_oracle: 1 + k1 s^2 <= 0 at s = " + fmt(s));
    return s / std::sqrt(q);
  };
  const auto to_s = [&k](double sigma) {
    const double q = 1.0 - k.k1 * sigma * sigma;
    return q > 0.0 ? sigma / std::sqrt(q)
                   : std::copysign(std::numeric_limits<double>::infinity(), sigma);
  };

  std::vector<double> out(s_grid.size());
  for (int side : {-1, 1}) {
    std::vector<std::pair<double, size_t>> targets;
    for (size_t i = 0; i < s_grid.size(); ++i) {
      const double sig = to_sigma(s_grid[i]);
      if (side < 0 ? sig < 0.0 : sig >= 0.0) targets.emplace_back(std::abs(sig), i);
    }
    std::sort(targets.begin(), targets.end());
    OdeState x{1.0, 2.0 * k.eps};
    double t = 0.0;
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<OdeState>>(1e-10, 1e-10);
    for (const auto& [target, idx] : targets) {
      const double goal = side * target;
      try {
        if (goal != t) {
          const auto signed_rhs = [&rhs](const OdeState& xs, OdeState& dx, double tt) {
            rhs(xs, dx, tt);
          };
          odeint::integrate_adaptive(stepper, signed_rhs, x, t, goal, side * 1e-3);
          t = goal;
        }
      } catch (const Singular&) {
        throw DomainError("ode_oracle: singular coefficient before s = " + fmt(s_grid[idx]),
                          side < 0 ? to_s(t) : 0.0, side < 0 ? 0.0 : to_s(t));
      }
      if (!(x[0] > 0.0))
        throw DomainError("ode_oracle: u <= 0 before s = " + fmt(s_grid[idx]),
                          side < 0 ? to_s(t) : 0.0, side < 0 ? 0.0 : to_s(t));
      const double s = s_grid[idx];
      out[idx] = std::sqrt(1.0 + k.k1 * s * s) * std::sqrt(x[0]);
    }
  }
  return out;
}

}  // namespace dflat
