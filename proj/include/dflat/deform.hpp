#pragma once

#include <functional>
#include <string>

#include "dflat/finsler.hpp"
#include "dflat/phi.hpp"
#include "dflat/riemann.hpp"

namespace dflat {

// A scalar function of t = b^2, evaluable through jets so that its
// derivatives in t (and through t in x) come for free.
using ProfileFunction = std::function<Jet2(const Jet2& t)>;

// Value and first derivative of a profile at a plain t.
struct ProfileValue {
  double value = 0.0;
  double d1 = 0.0;
};
ProfileValue evaluate(const ProfileFunction& f, double t);

// kappa, rho and nu of a beta-deformation triple.
struct BetaProfile {
  ProfileFunction kappa;
  ProfileFunction rho;
  ProfileFunction nu;
  std::string name = "profile";
};

// Profile determined by the ODE constants:
//   kappa = -k2 + k3 t,
//   rho   = -1/4 int_0^t (k1 - k2 + k3 w) / P(w) dw,  P = 1 + k2 t - k3 t^2,
//   nu    = -sqrt(P) e^rho,
//   eta   = e^-rho.
// rho is computed by quadrature; t is confined to [0, t_max) where
// P(t) > margin.
class DeformationProfile {
 public:
  static constexpr double kMargin = 1e-2;

  explicit DeformationProfile(const KParams& k);

  const KParams& k() const { return k_; }
  double t_max() const { return t_max_; }

  Jet2 P(const Jet2& t) const;
  Jet2 kappa(const Jet2& t) const;
  Jet2 rho(const Jet2& t) const;
  Jet2 nu(const Jet2& t) const;
  Jet2 eta(const Jet2& t) const;

  BetaProfile as_beta_profile() const;

 private:
  void check_range(double t) const;

  KParams k_;
  double t_max_;
};

DeformationProfile profile_from_k(const KParams& k);

// Five closed forms for eta. Case numbering: 1 (k3 = k2 = 0),
// 2 (k3 = 0, k2 != 0), 3 (k3 != 0, d1 > 0), 4 (k3 != 0, d1 = 0),
// 5 (k3 != 0, d1 < 0).
int eta_case(const KParams& k);
double eta_closed_form(const KParams& k, double t);
// The closed form of one case evaluated regardless of which case k is in.
// Case 3 is the form that matches the defining integral; its literal
// transcription with square roots on each factor is exposed separately.
double eta_case_formula(int which, const KParams& k, double t);
double eta_case3_literal(const KParams& k, double t);
double eta_quadrature(const KParams& k, double t);

enum class Stage { kTilde, kHat, kBar };
std::string to_string(Stage s);

// A deformed (metric, form) pair. base_b2 is b^2 of the undeformed pair,
// which every stage's profile is evaluated at.
struct DeformedPair {
  MetricField metric;
  OneFormField form;
  Stage stage;
  ScalarField base_b2;
};

// a~_ij = a_ij - kappa(b^2) b_i b_j, b~ = b.
DeformedPair tilde_deform(const MetricField& a, const OneFormField& b,
                          const ProfileFunction& kappa);
// a^_ij = e^{2 rho(b^2)} a~_ij, b^ = b~.
DeformedPair hat_deform(const DeformedPair& tilde, const ProfileFunction& rho);
// a-bar = a^, b-bar = nu(b^2) b^.
DeformedPair bar_deform(const DeformedPair& hat, const ProfileFunction& nu);

DeformedPair deform(const MetricField& a, const OneFormField& b,
                    const BetaProfile& p);

// Deviation between the spray / covariant derivative of a deformed pair
// computed directly and computed from the closed transformation formulas. Each is the
// max-norm difference over the larger of the two sides' magnitudes.
struct TwoPathDeviation {
  double spray = 0.0;
  double form = 0.0;
  double max() const { return spray > form ? spray : form; }
};

TwoPathDeviation verify_tilde_stage(const MetricField& a, const OneFormField& b,
                                  const BetaProfile& p, const Vec& x,
                                  const Vec& y);
TwoPathDeviation verify_hat_stage(const MetricField& a, const OneFormField& b,
                                  const BetaProfile& p, const Vec& x,
                                  const Vec& y);
TwoPathDeviation verify_bar_stage(const MetricField& a, const OneFormField& b,
                                  const BetaProfile& p, const Vec& x,
                                  const Vec& y);

struct RiemannPair {
  MetricField metric;
  OneFormField form;
};

// alpha = eta(bb^2) sqrt(abar^2 - (k2 - k3 bb^2)/P(bb^2) betabar^2),
// beta  = -eta(bb^2) P(bb^2)^{-1/2} betabar, bb = ||betabar||_abar.
RiemannPair inverse_deform(const MetricField& abar, const OneFormField& bbar,
                           const KParams& k);
// Composite of the three stages with the profile of k.
RiemannPair forward_deform(const MetricField& a, const OneFormField& b,
                           const KParams& k);

// |bbar^2 - b^2| at x for the forward deformation of (a, b).
double norm_preservation_defect(const MetricField& a, const OneFormField& b,
                                const KParams& k, const Vec& x);

// F = alpha phi(beta / alpha).
FinslerFunction alpha_phi_metric(const MetricField& a, const OneFormField& b,
                                 const PhiFunction& phi,
                                 std::string name = "alpha-phi");

// Residuals of the six consequences of the structural conditions:
// r_ij, s^i_0, s_0, r_i + s_i, b_i s_j + b_j s_i, r.
struct ConsequenceResiduals {
  double r_ij = 0.0;
  double s_upper0 = 0.0;
  double s0 = 0.0;
  double r_plus_s = 0.0;
  double bs_sym = 0.0;
  double r = 0.0;
  double max() const;
};

ConsequenceResiduals verify_structural_identities(const MetricField& a,
                                       const OneFormField& b, const Vec& theta,
                                       double tau, const KParams& k,
                                       const Vec& x, const Vec& y);

// The three specialization steps for a pair satisfying the structural
// conditions with (theta, tau) at x.
struct ChainResiduals {
  double tilde_statement = 0.0;  // G~ in the closed statement form
  double tilde_intermediate = 0.0;  // G~ in the expanded closed form
  double hat_spray = 0.0;        // G^ = 2 theta^ y + a^2 theta^^i
  double bar_spray = 0.0;        // G-bar = 2 theta-bar y + a-bar^2 theta-bar^i
  double bar_form = 0.0;         // b-bar_{i|j} = 2 theta-bar_i b-bar_j + c-bar a-bar_ij
  double c_bar = 0.0;            // -2 b-bar_k theta-bar^k + 3 tau e^{-2 rho} nu
  double trivial_c_bar = 0.0;    // -2 b-bar_k theta-bar^k
  // c-bar with the tau term scaled by {2(1 - kappa b^2) + (k1 - 1) b^2} / (2(1 - kappa b^2)),
  // and the bar_form residual it gives; agrees with c_bar only when k1 = 1 or
  // tau = 0. Not part of max().
  double c_bar_extra_factor = 0.0;
  double bar_form_extra_factor = 0.0;
  double max() const;
};

ChainResiduals verify_deformation_chain(const MetricField& a,
                                     const OneFormField& b, const Vec& theta,
                                     double tau, const KParams& k,
                                     const Vec& x, const Vec& y);

// Profile-level identities at t: kappa^2 + k2 kappa - k3 + kappa' P,
// rho' against its closed integrand, and the nu ODE.
struct ProfileIdentityResiduals {
  double kappa = 0.0;
  double rho_prime = 0.0;
  double nu = 0.0;
};

ProfileIdentityResiduals verify_profile_identities(const DeformationProfile& p,
                                                   double t);

}  // namespace dflat
