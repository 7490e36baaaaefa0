#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dflat/deform.hpp"
#include "dflat/finsler.hpp"
#include "dflat/phi.hpp"
#include "dflat/riemann.hpp"

namespace dflat {

// r_mu = 1/sqrt(-mu) for mu < 0, +inf otherwise.
double radius_mu(double mu);
// Sampling radius: 0.6 r_mu, or 0.6 when r_mu is infinite.
double working_radius(double mu);

// abar = sqrt((1 + mu|x|^2)|y|^2 - mu<x,y>^2) / (1 + mu|x|^2)^{3/4}.
MetricField flat_alpha(int dim, double mu);
// betabar = lambda <x,y> / (1 + mu|x|^2)^{5/4}.
OneFormField related_beta(int dim, double mu, double lambda);

// (sqrt((1 - |x|^2)|y|^2 + <x,y>^2) + <x,y>) / (1 - |x|^2) on the unit ball.
FinslerFunction funk(int dim);
// Randers metrics built from the flat pair, in closed form.
FinslerFunction randers_family(int dim, double mu, double lambda);

// F = (sqrt((1 - b^2) abar^2 + betabar^2) - betabar) / (1 - b^2),
// b^2 = ||betabar||^2_abar.
FinslerFunction navigation_form(const MetricField& abar, const OneFormField& bbar,
                                std::string name = "navigation");

// Navigation data of a Randers metric alpha + beta:
//   abar = sqrt(1 - b^2) sqrt(alpha^2 - beta^2), betabar = -(1 - b^2) beta.
RiemannPair navigation_data(const MetricField& a, const OneFormField& b);
FinslerFunction randers_metric(const MetricField& a, const OneFormField& b,
                               std::string name = "randers");

// F = alpha phi(beta/alpha) built by inverse_deform from the flat pair.
struct ExampleOptions {
  int dim = 3;
  double mu = -0.5;
  double lambda = 0.3;
  double kappa = 1.0;  // ex-5.2 / family-1.11
  double eps = 1.0;    // ex-5.2 / family-1.11
  int sign = 1;        // upper (+1) or lower (-1) sign in ex-5.5 / ex-5.6
};

struct Example {
  std::string id;
  KParams k;
  ExampleOptions options;
  MetricField abar;
  OneFormField bbar;
  RiemannPair pipeline;     // inverse_deform(abar, bbar, k)
  RiemannPair closed_form;  // closed-form (alpha, beta) for the example
  PhiFunction phi;          // general solution of the ODE for k
  FinslerFunction F;
  ChartDomain domain;
  std::string note;
};

std::vector<std::string> example_ids();
Example make_example(const std::string& id, const ExampleOptions& opts = {});

// max over x of the normalized gap between the pipeline and closed-form pairs.
double closed_form_gap(const Example& ex, const std::vector<Vec>& xs);

// Random smooth inputs for two-path checks. Metrics are B B^T + I/2 with B
// affine-plus-quadratic in x, forms are generically not closed, profiles are
// small polynomials / exponentials in t.
MetricField random_metric(int dim, std::uint64_t seed);
OneFormField random_form(int dim, std::uint64_t seed, double size = 0.4);
BetaProfile random_profile(std::uint64_t seed);

// Negative controls.
FinslerFunction control_scaled_euclidean(int dim);   // |y| (1 + x^1)^2
MetricField control_conformal_metric(int dim);       // (1 + |x|^2) delta
OneFormField control_nonclosed_form(int dim);        // not dually related to |y|

struct CatalogEntry {
  std::string id;
  std::string description;
  std::string expectation;
};

std::vector<CatalogEntry> catalog_entries();
std::optional<CatalogEntry> find_entry(const std::string& id);

}  // namespace dflat
