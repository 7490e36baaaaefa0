#include "dflat/deform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

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

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// max |lhs - rhs| / max(|lhs|, |rhs|, scale), 0 when everything vanishes.
double relative_gap(const Mat& lhs, const Mat& rhs, double scale = 0.0) {
  const double den = std::max({max_abs(lhs), max_abs(rhs), scale});
  return den > 0.0 ? max_abs(lhs - rhs) / den : 0.0;
}

double relative_gap(double lhs, double rhs, double scale = 0.0) {
  const double den = std::max({std::abs(lhs), std::abs(rhs), scale});
  return den > 0.0 ? std::abs(lhs - rhs) / den : 0.0;
}

}  // namespace

ProfileValue evaluate(const ProfileFunction& f, double t) {
  const Jet2 v = f(Jet2::variable(t, 1, 0));
  return {v.value(), v.grad(0)};
}

DeformationProfile::DeformationProfile(const KParams& k) : k_(k) {
  const double m = kMargin;
  // Smallest positive root of P(t) = m, i.e. k3 t^2 - k2 t - (1 - m) = 0.
  t_max_ = std::numeric_limits<double>::infinity();
  if (std::abs(k.k3) <= kBranchTolerance) {
    if (k.k2 < 0.0) t_max_ = (1.0 - m) / -k.k2;
  } else {
    const double disc = k.k2 * k.k2 + 4.0 * k.k3 * (1.0 - m);
    if (disc >= 0.0) {
      const double r = std::sqrt(disc);
      for (double t : {(k.k2 - r) / (2.0 * k.k3), (k.k2 + r) / (2.0 * k.k3)})
        if (t > 0.0) t_max_ = std::min(t_max_, t);
    }
  }
  // kappa^2 + k2 kappa - k3 = -kappa' P holds identically for this kappa.
  for (double t : {0.0, 0.5 * std::min(t_max_, 1.0)}) {
    const ProfileIdentityResiduals r = verify_profile_identities(*this, t);
    if (r.kappa > 1e-12)
      throw EvaluationError("profile", "kappa identity violated at t = " + fmt(t));
  }
}

void DeformationProfile::check_range(double t) const {
  if (!(t < t_max_))
    throw DomainError("profile: t = " + fmt(t) + " outside admissible range [0, " +
                          fmt(t_max_) + ")",
                      0.0, t_max_);
}

Jet2 DeformationProfile::P(const Jet2& t) const {
  return 1.0 + k_.k2 * t - k_.k3 * t * t;
}

Jet2 DeformationProfile::kappa(const Jet2& t) const { return -k_.k2 + k_.k3 * t; }

Jet2 DeformationProfile::rho(const Jet2& t) const {
  check_range(t.value());
  const KParams k = k_;
  return -0.25 * integrate_to(t, [k](const Jet2& w) {
           return (k.k1 - k.k2 + k.k3 * w) / (1.0 + k.k2 * w - k.k3 * w * w);
         });
}

Jet2 DeformationProfile::nu(const Jet2& t) const {
  check_range(t.value());
  return -sqrt(P(t)) * exp(rho(t));
}

Jet2 DeformationProfile::eta(const Jet2& t) const { return exp(-rho(t)); }

BetaProfile DeformationProfile::as_beta_profile() const {
  const DeformationProfile self = *this;
  BetaProfile p;
  p.kappa = [self](const Jet2& t) { return self.kappa(t); };
  p.rho = [self](const Jet2& t) { return self.rho(t); };
  p.nu = [self](const Jet2& t) { return self.nu(t); };
  p.name = "k=(" + fmt(k_.k1) + "," + fmt(k_.k2) + "," + fmt(k_.k3) + ")";
  return p;
}

DeformationProfile profile_from_k(const KParams& k) { return DeformationProfile(k); }

ProfileIdentityResiduals verify_profile_identities(const DeformationProfile& p,
                                                   double t) {
  const KParams& k = p.k();
  const Jet2 tj = Jet2::variable(t, 1, 0);
  const Jet2 kap = p.kappa(tj);
  const double P = p.P(Jet2(t)).value();
  ProfileIdentityResiduals r;
  const double lhs = kap.value() * kap.value() + k.k2 * kap.value() - k.k3;
  r.kappa = relative_gap(lhs, -kap.grad(0) * P, 1.0);
  if (t < p.t_max()) {
    const Jet2 rho = p.rho(tj);
    r.rho_prime = relative_gap(rho.grad(0), -(k.k1 + kap.value()) / (4.0 * P), 1.0);
    const Jet2 nu = p.nu(tj);
    const double lhs_nu =
        (5.0 * kap.value() + k.k1 + 2.0 * k.k2) * nu.value() + 4.0 * P * nu.grad(0);
    r.nu = std::abs(lhs_nu) /
           std::max({std::abs(nu.value()), std::abs(4.0 * P * nu.grad(0)), 1.0});
  }
  return r;
}

int eta_case(const KParams& k) {
  const double tol = kBranchTolerance;
  if (std::abs(k.k3) <= tol) return std::abs(k.k2) <= tol ? 1 : 2;
  const double d1 = k.k2 * k.k2 + 4.0 * k.k3;
  if (std::abs(d1) <= tol) return 4;
  return d1 > 0.0 ? 3 : 5;
}

double eta_case_formula(int which, const KParams& k, double t) {
  const double k1 = k.k1, k2 = k.k2, k3 = k.k3;
  const double P = 1.0 + k2 * t - k3 * t * t;
  const double d1 = k2 * k2 + 4.0 * k3;
  auto need = [&](bool ok, const char* what) {
    if (!ok)
      throw DomainError(std::string("eta case ") + std::to_string(which) + ": " + what +
                        " at t = " + fmt(t));
  };
  switch (which) {
    case 1:
      return std::exp(k1 * t / 4.0);
    case 2:
      need(k2 != 0.0, "k2 = 0");
      need(1.0 + k2 * t > 0.0, "1 + k2 t <= 0");
      return std::pow(1.0 + k2 * t, (k1 - k2) / (4.0 * k2));
    case 3: {
      need(d1 > 0.0, "d1 <= 0");
      need(P > 0.0, "P <= 0");
      const double r = std::sqrt(d1);
      const double ratio = (r + k2) / (r - k2) * (r - k2 + 2.0 * k3 * t) / (r + k2 - 2.0 * k3 * t);
      need(ratio > 0.0, "nonpositive base");
      return std::pow(ratio, (2.0 * k1 - k2) / (8.0 * r)) / std::pow(P, 0.125);
    }
    case 4: {
      need(k2 != 0.0, "k2 = 0");
      need(2.0 + k2 * t > 0.0, "2 + k2 t <= 0");
      return std::pow(2.0, 0.25) *
             std::exp((k2 - 2.0 * k1) / (2.0 * k2) * (1.0 / (2.0 + k2 * t) - 0.5)) /
             std::pow(2.0 + k2 * t, 0.25);
    }
    case 5: {
      need(d1 < 0.0, "d1 >= 0");
      need(P > 0.0, "P <= 0");
      const double r = std::sqrt(-d1);
      return std::exp((2.0 * k1 - k2) / (4.0 * r) *
                      (std::atan((k2 - 2.0 * k3 * t) / r) - std::atan(k2 / r))) /
             std::pow(P, 0.125);
    }
    default:
      throw ConfigError("eta: case must be 1..5");
  }
}

double eta_case3_literal(const KParams& k, double t) {
  const double k1 = k.k1, k2 = k.k2, k3 = k.k3;
  const double d1 = k2 * k2 + 4.0 * k3;
  const double P = 1.0 + k2 * t - k3 * t * t;
  const double a = d1 + k2, b = d1 - k2, c = d1 - k2 + 2.0 * k3 * t, d = d1 + k2 - 2.0 * k3 * t;
  if (!(d1 > 0.0 && a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0 && P > 0.0))
    throw DomainError("eta case 3 (literal): radicand <= 0 at t = " + fmt(t));
  const double base = std::sqrt(a) / std::sqrt(b) * std::sqrt(c) / std::sqrt(d);
  return std::pow(base, (2.0 * k1 - k2) / (8.0 * std::sqrt(d1))) / std::pow(P, 0.125);
}

double eta_closed_form(const KParams& k, double t) {
  return eta_case_formula(eta_case(k), k, t);
}

double eta_quadrature(const KParams& k, double t) {
  const double I = adaptive_simpson(
      [&k](double w) {
        const double P = 1.0 + k.k2 * w - k.k3 * w * w;
        if (P <= 0.0) throw DomainError("eta quadrature: P <= 0 at t = " + fmt(w));
        return (k.k1 - k.k2 + k.k3 * w) / P;
      },
      0.0, t, 1e-13);
  return std::exp(0.25 * I);
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kTilde: return "tilde";
    case Stage::kHat: return "hat";
    case Stage::kBar: return "bar";
  }
  return "?";
}

DeformedPair tilde_deform(const MetricField& a, const OneFormField& b,
                          const ProfileFunction& kappa) {
  const int n = a.dim();
  ScalarField b2(n, [a, b](JetSpan x) { return norm_sq_jet(a(x), b(x)); });
  MetricField metric(
      n,
      [a, b, kappa](JetSpan x) {
        JetMatrix m = a(x);
        const std::vector<Jet2> bx = b(x);
        const Jet2 t = norm_sq_jet(m, bx);
        const Jet2 k = kappa(t);
        if (1.0 - k.value() * t.value() <= 0.0)
          throw DomainError("tilde deformation degenerate: 1 - kappa b^2 <= 0");
        const int dim = m.dim();
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) m(i, j) -= k * bx[i] * bx[j];
        return m;
      },
      a.name() + "~");
  return {metric, b, Stage::kTilde, b2};
}

DeformedPair hat_deform(const DeformedPair& tilde, const ProfileFunction& rho) {
  if (tilde.stage != Stage::kTilde) throw ConfigError("hat_deform expects a tilde pair");
  const MetricField base = tilde.metric;
  const ScalarField b2 = tilde.base_b2;
  MetricField metric(
      base.dim(),
      [base, b2, rho](JetSpan x) {
        JetMatrix m = base(x);
        const Jet2 r = rho(b2(x));
        if (!std::isfinite(r.value())) throw DomainError("hat deformation: rho not finite");
        const Jet2 scale = exp(2.0 * r);
        const int dim = m.dim();
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) m(i, j) *= scale;
        return m;
      },
      base.name() + "^");
  return {metric, tilde.form, Stage::kHat, b2};
}

DeformedPair bar_deform(const DeformedPair& hat, const ProfileFunction& nu) {
  if (hat.stage != Stage::kHat) throw ConfigError("bar_deform expects a hat pair");
  const OneFormField base = hat.form;
  const ScalarField b2 = hat.base_b2;
  OneFormField form(
      base.dim(),
      [base, b2, nu](JetSpan x) {
        std::vector<Jet2> b = base(x);
        const Jet2 v = nu(b2(x));
        if (v.value() == 0.0) throw DomainError("bar deformation: nu vanishes");
        for (Jet2& bi : b) bi *= v;
        return b;
      },
      base.name() + "-bar");
  // The metric is carried over unchanged.
  return {hat.metric, form, Stage::kBar, b2};
}

DeformedPair deform(const MetricField& a, const OneFormField& b, const BetaProfile& p) {
  return bar_deform(hat_deform(tilde_deform(a, b, p.kappa), p.rho), p.nu);
}

namespace {

Mat outer(const Vec& u, const Vec& v) { return u * v.transpose(); }

}  // namespace

TwoPathDeviation verify_tilde_stage(const MetricField& a, const OneFormField& b,
                                  const BetaProfile& p, const Vec& x,
                                  const Vec& y) {
  const CovariantData d = covariant_derivative(a, b, x, y);
  const Vec G = spray_riemann(a, x, y);
  const ProfileValue kap = evaluate(p.kappa, d.b2);
  const double k = kap.value, kp = kap.d1;
  const double q = 1.0 - k * d.b2;
  const double beta = d.beta;

  const Vec G_formula =
      G -
      k / (2.0 * q) *
          (2.0 * q * beta * d.s_upper0 + d.r00 * d.b_upper + 2.0 * k * d.s0 * beta * d.b_upper) +
      kp / (2.0 * q) *
          (q * beta * beta * (d.r_upper + d.s_upper) + k * d.r * beta * beta * d.b_upper -
           2.0 * (d.r0 + d.s0) * beta * d.b_upper);

  const Vec& bl = d.b_lower;
  const Vec rs = d.r_i + d.s_i;
  const Mat b_formula =
      d.bij + k / q * (d.b2 * d.r_ij + outer(bl, d.s_i) + outer(d.s_i, bl)) -
      kp / q * (d.r * outer(bl, bl) - d.b2 * outer(bl, rs) - d.b2 * outer(rs, bl));

  const DeformedPair t = tilde_deform(a, b, p.kappa);
  const Vec G_direct = spray_riemann(t.metric, x, y);
  const Mat b_direct = covariant_derivative(t.metric, t.form, x, y).bij;

  TwoPathDeviation out;
  out.spray = relative_gap(G_direct, G_formula, max_abs(G));
  out.form = relative_gap(b_direct, b_formula, max_abs(d.bij));
  return out;
}

TwoPathDeviation verify_hat_stage(const MetricField& a, const OneFormField& b,
                                  const BetaProfile& p, const Vec& x,
                                  const Vec& y) {
  const CovariantData d = covariant_derivative(a, b, x, y);
  const ProfileValue kap = evaluate(p.kappa, d.b2);
  const ProfileValue rho = evaluate(p.rho, d.b2);
  const double k = kap.value, rp = rho.d1;
  const double q = 1.0 - k * d.b2;
  const double beta = d.beta;

  const DeformedPair t = tilde_deform(a, b, p.kappa);
  const Vec G_tilde = spray_riemann(t.metric, x, y);
  const Mat b_tilde = covariant_derivative(t.metric, t.form, x, y).bij;

  const Vec G_formula =
      G_tilde + rp * (2.0 * (d.r0 + d.s0) * y -
                      (d.alpha_sq - k * beta * beta) *
                          (d.r_upper + d.s_upper + k / q * d.r * d.b_upper));
  const Vec& bl = d.b_lower;
  const Vec rs = d.r_i + d.s_i;
  const Mat b_formula =
      b_tilde - 2.0 * rp * (outer(bl, rs) + outer(rs, bl) - d.r / q * (d.a - k * outer(bl, bl)));

  const DeformedPair h = hat_deform(t, p.rho);
  const Vec G_direct = spray_riemann(h.metric, x, y);
  const Mat b_direct = covariant_derivative(h.metric, h.form, x, y).bij;

  TwoPathDeviation out;
  out.spray = relative_gap(G_direct, G_formula, max_abs(G_tilde));
  out.form = relative_gap(b_direct, b_formula, max_abs(b_tilde));
  return out;
}

TwoPathDeviation verify_bar_stage(const MetricField& a, const OneFormField& b,
                                  const BetaProfile& p, const Vec& x,
                                  const Vec& y) {
  const CovariantData d = covariant_derivative(a, b, x, y);
  const ProfileValue nu = evaluate(p.nu, d.b2);

  const DeformedPair h = hat_deform(tilde_deform(a, b, p.kappa), p.rho);
  const Vec G_hat = spray_riemann(h.metric, x, y);
  const Mat b_hat = covariant_derivative(h.metric, h.form, x, y).bij;
  const Mat b_formula = nu.value * b_hat + 2.0 * nu.d1 * outer(d.b_lower, d.r_i + d.s_i);

  const DeformedPair bar = bar_deform(h, p.nu);
  const Vec G_direct = spray_riemann(bar.metric, x, y);
  const Mat b_direct = covariant_derivative(bar.metric, bar.form, x, y).bij;

  TwoPathDeviation out;
  out.spray = relative_gap(G_direct, G_hat);
  out.form = relative_gap(b_direct, b_formula, std::abs(nu.value) * max_abs(b_hat));
  return out;
}

RiemannPair inverse_deform(const MetricField& abar, const OneFormField& bbar,
                           const KParams& k) {
  const DeformationProfile prof(k);
  const int n = abar.dim();
  MetricField metric(
      n,
      [abar, bbar, prof](JetSpan x) {
        JetMatrix m = abar(x);
        const std::vector<Jet2> bb = bbar(x);
        const Jet2 t = norm_sq_jet(m, bb);
        const Jet2 P = prof.P(t);
        if (P.value() <= 0.0)
          throw DomainError("inverse_deform: 1 + k2 b^2 - k3 b^4 <= 0", 0.0, prof.t_max());
        const Jet2 eta = prof.eta(t);
        const Jet2 coef = (prof.k().k2 - prof.k().k3 * t) / P;
        const Jet2 e2 = eta * eta;
        const int dim = m.dim();
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) m(i, j) = e2 * (m(i, j) - coef * bb[i] * bb[j]);
        return m;
      },
      "inverse[" + abar.name() + "]");
  OneFormField form(
      n,
      [abar, bbar, prof](JetSpan x) {
        std::vector<Jet2> bb = bbar(x);
        const Jet2 t = norm_sq_jet(abar(x), bb);
        const Jet2 P = prof.P(t);
        if (P.value() <= 0.0)
          throw DomainError("inverse_deform: 1 + k2 b^2 - k3 b^4 <= 0", 0.0, prof.t_max());
        const Jet2 factor = -prof.eta(t) / sqrt(P);
        for (Jet2& bi : bb) bi *= factor;
        return bb;
      },
      "inverse[" + bbar.name() + "]");
  return {metric, form};
}

RiemannPair forward_deform(const MetricField& a, const OneFormField& b,
                           const KParams& k) {
  const DeformedPair bar = deform(a, b, profile_from_k(k).as_beta_profile());
  return {bar.metric, bar.form};
}

double norm_preservation_defect(const MetricField& a, const OneFormField& b,
                                const KParams& k, const Vec& x) {
  const RiemannPair out = forward_deform(a, b, k);
  return std::abs(norm_sq(out.metric, out.form, x) - norm_sq(a, b, x));
}

FinslerFunction alpha_phi_metric(const MetricField& a, const OneFormField& b,
                                 const PhiFunction& phi, std::string name) {
  return FinslerFunction(
      a.dim(),
      [a, b, phi](JetSpan x, JetSpan y) {
        const Jet2 alpha = sqrt(quadratic_form(a(x), y));
        const Jet2 beta = contract(b(x), y);
        return alpha * phi(beta / alpha);
      },
      std::move(name));
}

double ConsequenceResiduals::max() const {
  return std::max({r_ij, s_upper0, s0, r_plus_s, bs_sym, r});
}

ConsequenceResiduals verify_structural_identities(const MetricField& a,
                                       const OneFormField& b, const Vec& theta,
                                       double tau, const KParams& k,
                                       const Vec& x, const Vec& y) {
  const CovariantData d = covariant_derivative(a, b, x, y);
  const Vec& bl = d.b_lower;
  const Vec theta_up = d.a_inv * theta;
  const double theta0 = theta.dot(y);
  const double bt = d.b_upper.dot(theta);
  const double P = 1.0 + k.k2 * d.b2 - k.k3 * d.b2 * d.b2;
  // Natural magnitudes: |b_{i|j}| times the lengths it is contracted with.
  const double T = max_abs(d.bij);
  const double nb = std::sqrt(d.b2);
  const double ny = y.norm();

  ConsequenceResiduals r;
  const Mat tb = outer(theta, bl) + outer(bl, theta);
  r.r_ij = relative_gap(d.r_ij,
                        tb + (3.0 * tau + 2.0 * tau * d.b2 - 2.0 * bt) * d.a +
                            tau * (3.0 * k.k2 - 2.0 - 3.0 * k.k3 * d.b2) * outer(bl, bl),
                        T);
  r.s_upper0 = relative_gap(d.s_upper0, d.beta * theta_up - theta0 * d.b_upper, T * ny);
  r.s0 = relative_gap(d.s0, bt * d.beta - d.b2 * theta0, T * nb * nb * ny);
  r.r_plus_s = relative_gap(d.r_i + d.s_i, 3.0 * tau * P * bl, T * nb);
  r.bs_sym = relative_gap(outer(bl, d.s_i) + outer(d.s_i, bl),
                          2.0 * bt * outer(bl, bl) - d.b2 * tb, T * nb * nb);
  r.r = relative_gap(d.r, 3.0 * tau * P * d.b2, T * nb * nb);
  return r;
}

double ChainResiduals::max() const {
  return std::max({tilde_statement, tilde_intermediate, hat_spray, bar_spray, bar_form});
}

ChainResiduals verify_deformation_chain(const MetricField& a,
                                     const OneFormField& b, const Vec& theta,
                                     double tau, const KParams& k,
                                     const Vec& x, const Vec& y) {
  const DeformationProfile prof(k);
  const BetaProfile bp = prof.as_beta_profile();
  const CovariantData d = covariant_derivative(a, b, x, y);
  const double b2 = d.b2;
  const double beta = d.beta;
  const double theta0 = theta.dot(y);
  const Vec theta_up = d.a_inv * theta;
  const double bt = d.b_upper.dot(theta);
  const double kap = prof.kappa(Jet2(b2)).value();
  const double P = prof.P(Jet2(b2)).value();
  const double q = 1.0 - kap * b2;
  const double rho = prof.rho(Jet2(b2)).value();
  const double nu = prof.nu(Jet2(b2)).value();

  ChainResiduals out;

  // Stage 1.
  const DeformedPair t = tilde_deform(a, b, bp.kappa);
  const Vec G_tilde = spray_riemann(t.metric, x, y);
  const double at2 = d.alpha_sq - kap * beta * beta;
  const Vec common = (2.0 * theta0 + tau * beta * (3.0 * k.k1 - 2.0)) * y + at2 * theta_up;
  const double coef_statement =
      (tau * (3.0 * k.k2 - 2.0 - 3.0 * k.k3 * b2) - 2.0 * (k.k2 - k.k3 * b2) * bt) / (2.0 * P);
  const double coef_intermediate = -(3.0 * tau * kap + 2.0 * tau - 2.0 * kap * bt) / (2.0 * q);
  const double s1 = std::max(max_abs(common), 0.0);
  out.tilde_statement =
      relative_gap(G_tilde, common + coef_statement * at2 * d.b_upper,
                   std::max(s1, std::abs(coef_statement * at2) * max_abs(d.b_upper)));
  out.tilde_intermediate =
      relative_gap(G_tilde, common + coef_intermediate * at2 * d.b_upper,
                   std::max(s1, std::abs(coef_intermediate * at2) * max_abs(d.b_upper)));

  // Stage 2.
  const DeformedPair h = hat_deform(t, bp.rho);
  const Vec G_hat = spray_riemann(h.metric, x, y);
  const Mat a_hat = h.metric.at(x);
  const Mat a_hat_inv = checked_inverse(a_hat);
  const Vec theta_hat =
      theta - 0.25 * tau * (4.0 - 3.0 * (k.k1 + k.k2 - k.k3 * b2)) * d.b_lower;
  const Vec theta_hat_up = a_hat_inv * theta_hat;
  const double alpha_hat2 = y.dot(a_hat * y);
  const Vec hat_first = 2.0 * theta_hat.dot(y) * y;
  const Vec hat_second = alpha_hat2 * theta_hat_up;
  out.hat_spray = relative_gap(G_hat, hat_first + hat_second,
                               std::max(max_abs(hat_first), max_abs(hat_second)));

  // Stage 3.
  const DeformedPair bar = bar_deform(h, bp.nu);
  const Vec G_bar = spray_riemann(bar.metric, x, y);
  out.bar_spray = relative_gap(G_bar, hat_first + hat_second,
                               std::max(max_abs(hat_first), max_abs(hat_second)));
  const CovariantData db = covariant_derivative(bar.metric, bar.form, x, y);
  const Vec& bbar = db.b_lower;
  const double bt_bar = bbar.dot(a_hat_inv * theta_hat);
  out.trivial_c_bar = -2.0 * bt_bar;
  // Carrying the a^_ij coefficient of r^_ij through unchanged when theta is
  // replaced by theta^ leaves c-bar + 2 b-bar_k theta-bar^k = 3 tau e^{-2 rho} nu.
  out.c_bar = out.trivial_c_bar + 3.0 * tau * std::exp(-2.0 * rho) * nu;
  out.c_bar_extra_factor = out.trivial_c_bar + 3.0 * tau * std::exp(-2.0 * rho) * nu / (2.0 * q) *
                                              (2.0 * q + (k.k1 - 1.0) * b2);
  const Mat lead = 2.0 * outer(theta_hat, bbar);
  const Mat tail = out.c_bar * db.a;
  out.bar_form = relative_gap(db.bij, lead + tail, std::max(max_abs(lead), max_abs(tail)));
  const Mat tail_extra = out.c_bar_extra_factor * db.a;
  out.bar_form_extra_factor = relative_gap(db.bij, lead + tail_extra,
                                      std::max(max_abs(lead), max_abs(tail_extra)));
  return out;
}

}  // namespace dflat
