#include "dflat/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dflat/errors.hpp"
#include "dflat/quadrature.hpp"

namespace dflat {

namespace {

Jet2 dot(JetSpan u, JetSpan v) {
  Jet2 s(0.0);
  for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Jet2 flat_factor(JetSpan x, double mu) {
  const Jet2 A = 1.0 + mu * dot(x, x);
  if (A.value() <= 0.0)
    throw DomainError("flat pair: 1 + mu|x|^2 <= 0 (outside r_mu)", 0.0, radius_mu(mu));
  return A;
}

}  // namespace

double radius_mu(double mu) {
  return mu < 0.0 ? 1.0 / std::sqrt(-mu) : std::numeric_limits<double>::infinity();
}

double working_radius(double mu) {
  const double r = radius_mu(mu);
  return std::isfinite(r) ? 0.6 * r : 0.6;
}

MetricField flat_alpha(int dim, double mu) {
  return MetricField(
      dim,
      [mu](JetSpan x) {
        const Jet2 A = flat_factor(x, mu);
        const Jet2 scale = pow(A, -1.5);
        const int n = static_cast<int>(x.size());
        JetMatrix m(n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            m(i, j) = scale * ((i == j ? A : Jet2(0.0)) - mu * x[i] * x[j]);
        return m;
      },
      "flat_alpha(mu=" + fmt(mu) + ")");
}

OneFormField related_beta(int dim, double mu, double lambda) {
  return OneFormField(
      dim,
      [mu, lambda](JetSpan x) {
        const Jet2 scale = lambda * pow(flat_factor(x, mu), -1.25);
        std::vector<Jet2> b(x.begin(), x.end());
        for (Jet2& bi : b) bi *= scale;
        return b;
      },
      "related_beta(mu=" + fmt(mu) + ",lambda=" + fmt(lambda) + ")");
}

FinslerFunction funk(int dim) {
  return FinslerFunction(
      dim,
      [](JetSpan x, JetSpan y) {
        const Jet2 q = 1.0 - dot(x, x);
        if (q.value() <= 0.0) throw DomainError("funk: |x| >= 1", -1.0, 1.0);
        const Jet2 xy = dot(x, y);
        return (sqrt(q * dot(y, y) + xy * xy) + xy) / q;
      },
      "funk");
}

FinslerFunction randers_family(int dim, double mu, double lambda) {
  return FinslerFunction(
      dim,
      [mu, lambda](JetSpan x, JetSpan y) {
        const Jet2 xx = dot(x, x);
        const Jet2 A = flat_factor(x, mu);
        const Jet2 B = 1.0 + (mu + lambda * lambda) * xx;
        if (B.value() <= 0.0) throw DomainError("randers family: 1 + (mu + lambda^2)|x|^2 <= 0");
        const Jet2 xy = dot(x, y);
        const Jet2 root = pow(B, 0.25);
        return root * sqrt(A * dot(y, y) - mu * xy * xy) / A + lambda * xy / (A * root);
      },
      "randers_family(mu=" + fmt(mu) + ",lambda=" + fmt(lambda) + ")");
}

FinslerFunction navigation_form(const MetricField& abar, const OneFormField& bbar,
                                std::string name) {
  return FinslerFunction(
      abar.dim(),
      [abar, bbar](JetSpan x, JetSpan y) {
        const JetMatrix a = abar(x);
        const std::vector<Jet2> b = bbar(x);
        const Jet2 q = 1.0 - norm_sq_jet(a, b);
        if (q.value() <= 0.0) throw DomainError("navigation form: b^2 >= 1");
        const Jet2 beta = contract(b, y);
        return (sqrt(q * quadratic_form(a, y) + beta * beta) - beta) / q;
      },
      std::move(name));
}

RiemannPair navigation_data(const MetricField& a, const OneFormField& b) {
  MetricField metric(
      a.dim(),
      [a, b](JetSpan x) {
        JetMatrix m = a(x);
        const std::vector<Jet2> bx = b(x);
        const Jet2 q = 1.0 - norm_sq_jet(m, bx);
        if (q.value() <= 0.0) throw DomainError("navigation data: b^2 >= 1");
        const int n = m.dim();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) m(i, j) = q * (m(i, j) - bx[i] * bx[j]);
        return m;
      },
      "nav[" + a.name() + "]");
  OneFormField form(
      a.dim(),
      [a, b](JetSpan x) {
        std::vector<Jet2> bx = b(x);
        const Jet2 q = 1.0 - norm_sq_jet(a(x), bx);
        for (Jet2& bi : bx) bi *= -q;
        return bx;
      },
      "nav[" + b.name() + "]");
  return {metric, form};
}

FinslerFunction randers_metric(const MetricField& a, const OneFormField& b,
                               std::string name) {
  return FinslerFunction(
      a.dim(),
      [a, b](JetSpan x, JetSpan y) {
        return sqrt(quadratic_form(a(x), y)) + contract(b(x), y);
      },
      std::move(name));
}

std::vector<std::string> example_ids() {
  return {"ex-5.1", "ex-5.2", "ex-5.3", "ex-5.4", "ex-5.5", "ex-5.6", "family-1.11"};
}

namespace {

// Scales abar by c(t) and adds d(t) betabar betabar, then scales betabar by e(t),
// all functions of t = ||betabar||^2_abar.
using Coefficients = std::function<void(const Jet2& t, Jet2& c, Jet2& d, Jet2& e)>;

RiemannPair closed_pair(const MetricField& abar, const OneFormField& bbar,
                        Coefficients coef, const std::string& name) {
  MetricField metric(
      abar.dim(),
      [abar, bbar, coef](JetSpan x) {
        JetMatrix m = abar(x);
        const std::vector<Jet2> b = bbar(x);
        Jet2 c, d, e;
        coef(norm_sq_jet(m, b), c, d, e);
        const int n = m.dim();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) m(i, j) = c * m(i, j) + d * b[i] * b[j];
        return m;
      },
      name + ".alpha");
  OneFormField form(
      abar.dim(),
      [abar, bbar, coef](JetSpan x) {
        std::vector<Jet2> b = bbar(x);
        Jet2 c, d, e;
        coef(norm_sq_jet(abar(x), b), c, d, e);
        for (Jet2& bi : b) bi *= e;
        return b;
      },
      name + ".beta");
  return {metric, form};
}

Jet2 positive(const Jet2& v, const char* what) {
  if (!(v.value() > 0.0)) throw DomainError(std::string("closed form: ") + what + " <= 0");
  return v;
}

// alpha^2 = q^{-2p} (q abar^2 + w betabar^2), beta = -q^{-p} betabar.
Coefficients power_form(std::function<Jet2(const Jet2&)> q_of, std::function<Jet2(const Jet2&)> w_of,
                        double p) {
  return [q_of, w_of, p](const Jet2& t, Jet2& c, Jet2& d, Jet2& e) {
    const Jet2 q = positive(q_of(t), "base");
    const Jet2 s = pow(q, -2.0 * p);
    c = s * q;
    d = s * w_of(t);
    e = -pow(q, -p);
  };
}

}  // namespace

Example make_example(const std::string& id, const ExampleOptions& o) {
  if (o.sign != 1 && o.sign != -1) throw ConfigError("example sign must be +1 or -1");
  const double sg = o.sign;
  KParams k;
  Coefficients coef;
  std::string note;
  if (id == "ex-5.1") {
    k = KParams(0, 0, 0, 0.5);
    coef = [](const Jet2&, Jet2& c, Jet2& d, Jet2& e) {
      c = Jet2(1.0);
      d = Jet2(0.0);
      e = Jet2(-1.0);
    };
    note = "phi = sqrt(1 + s); the family is usually written with +lambda where the pipeline gives beta = -betabar";
  } else if (id == "ex-5.2" || id == "family-1.11") {
    const double kap = o.kappa;
    k = KParams(kap, -kap, 0, o.eps);
    coef = power_form([kap](const Jet2& t) { return 1.0 - kap * t; },
                      [kap](const Jet2&) { return Jet2(kap); }, 1.0);
    note = "phi = sqrt(1 + 2 eps s + kappa s^2)";
  } else if (id == "ex-5.3") {
    k = KParams(0, -1, 0, 1);
    coef = power_form([](const Jet2& t) { return 1.0 - t; },
                      [](const Jet2&) { return Jet2(1.0); }, 0.75);
    note = "phi = sqrt(1 + s sqrt(1 - s^2) + arcsin s)";
  } else if (id == "ex-5.4") {
    k = KParams(0, 1, 0, 1);
    coef = power_form([](const Jet2& t) { return 1.0 + t; },
                      [](const Jet2&) { return Jet2(-1.0); }, 0.75);
    note = "phi = sqrt(1 + s sqrt(1 + s^2) + arcsinh s)";
  } else if (id == "ex-5.5") {
    k = KParams(0, 0, sg, 0.5);
    coef = power_form([sg](const Jet2& t) { return 1.0 - sg * t * t; },
                      [sg](const Jet2& t) { return sg * t; }, 0.625);
    note =
        "phi = sqrt(1 + int_0^s (1 - k3 sigma^4)^{1/4}); F is built as alpha phi(beta/alpha)";
  } else if (id == "ex-5.6") {
    k = KParams(sg, 0, 0, 0.5);
    coef = [sg](const Jet2& t, Jet2& c, Jet2& d, Jet2& e) {
      const Jet2 f = exp(sg * t / 4.0);
      c = f * f;
      d = Jet2(0.0);
      e = -f;
    };
    note =
        "phi = sqrt((1 + k1 s^2)(1 + int_0^s e^{-k1 sigma^2/2} / (1 + k1 sigma^2)^2))";
  } else {
    throw ConfigError("unknown example id: " + id);
  }

  const MetricField abar = flat_alpha(o.dim, o.mu);
  const OneFormField bbar = related_beta(o.dim, o.mu, o.lambda);
  const RiemannPair pipeline = inverse_deform(abar, bbar, k);
  const RiemannPair closed = closed_pair(abar, bbar, coef, id);
  const PhiFunction phi = general_solution(k);
  const FinslerFunction F = alpha_phi_metric(pipeline.metric, pipeline.form, phi, id);

  ChartDomain dom = ball_domain(o.dim, working_radius(o.mu));
  const DeformationProfile prof(k);
  const Interval range = phi.domain();
  dom.margin = [abar, bbar, prof, range](const Vec& x) {
    double t;
    try {
      t = norm_sq(abar, bbar, x);
    } catch (const std::exception&) {
      return -1.0;
    }
    const double P = prof.P(Jet2(t)).value() - DeformationProfile::kMargin;
    const double b = std::sqrt(t);
    // |beta/alpha| <= b, so b must sit inside phi's domain.
    return std::min({P, range.hi - b, b - range.lo});
  };
  return {id, k, o, abar, bbar, pipeline, closed, phi, F, dom, note};
}

double closed_form_gap(const Example& ex, const std::vector<Vec>& xs) {
  double gap = 0.0;
  for (const Vec& x : xs) {
    const Mat a1 = ex.pipeline.metric.at(x), a2 = ex.closed_form.metric.at(x);
    const Vec b1 = ex.pipeline.form.at(x), b2 = ex.closed_form.form.at(x);
    const double sa = std::max(a1.cwiseAbs().maxCoeff(), 1e-300);
    const double sb = std::max(b1.cwiseAbs().maxCoeff(), b2.cwiseAbs().maxCoeff());
    gap = std::max(gap, (a1 - a2).cwiseAbs().maxCoeff() / sa);
    if (sb > 0.0) gap = std::max(gap, (b1 - b2).cwiseAbs().maxCoeff() / sb);
  }
  return gap;
}

MetricField random_metric(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // B(x) = I + sum_k C_k x_k + sum_k D_k x_k^2
  std::vector<Mat> C(dim, Mat(dim, dim)), D(dim, Mat(dim, dim));
  for (int k = 0; k < dim; ++k)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        C[k](i, j) = 0.3 * u(rng);
        D[k](i, j) = 0.15 * u(rng);
      }
  return MetricField(
      dim,
      [C, D, dim](JetSpan x) {
        SquareMatrix<Jet2> B(dim);
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) {
            Jet2 v(i == j ? 1.0 : 0.0);
            for (int k = 0; k < dim; ++k) v += C[k](i, j) * x[k] + D[k](i, j) * x[k] * x[k];
            B(i, j) = v;
          }
        JetMatrix m(dim);
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j <= i; ++j) {
            Jet2 v(i == j ? 0.5 : 0.0);
            for (int l = 0; l < dim; ++l) v += B(i, l) * B(j, l);
            m(i, j) = v;
            m(j, i) = v;
          }
        return m;
      },
      "random_metric(" + std::to_string(seed) + ")");
}

OneFormField random_form(int dim, std::uint64_t seed, double size) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec c(dim), e(dim), f(dim);
  Mat L(dim, dim);
  for (int i = 0; i < dim; ++i) {
    c(i) = size * u(rng);
    e(i) = 0.5 * size * u(rng);
    f(i) = 0.5 * u(rng);
    for (int j = 0; j < dim; ++j) L(i, j) = size * u(rng);
  }
  return OneFormField(
      dim,
      [c, e, f, L, dim](JetSpan x) {
        Jet2 fx(0.0);
        for (int k = 0; k < dim; ++k) fx += f(k) * x[k];
        const Jet2 ex = exp(fx);
        std::vector<Jet2> b(dim);
        for (int i = 0; i < dim; ++i) {
          Jet2 v(c(i));
          for (int j = 0; j < dim; ++j) v += L(i, j) * x[j];
          b[i] = v + e(i) * ex * x[(i + 1) % dim];
        }
        return b;
      },
      "random_form(" + std::to_string(seed) + ")");
}

BetaProfile random_profile(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double k0 = 0.5 * u(rng), k1 = 0.5 * u(rng);
  const double r1 = 0.5 * u(rng), r2 = 0.5 * u(rng);
  const double n1 = 0.5 * u(rng), n2 = 0.5 * u(rng);
  BetaProfile p;
  p.kappa = [k0, k1](const Jet2& t) { return k0 + k1 * t; };
  p.rho = [r1, r2](const Jet2& t) { return r1 * t + r2 * t * t; };
  p.nu = [n1, n2](const Jet2& t) { return -(1.0 + n1 * t) * exp(n2 * t); };
  p.name = "random_profile(" + std::to_string(seed) + ")";
  return p;
}

FinslerFunction control_scaled_euclidean(int dim) {
  return FinslerFunction(
      dim,
      [](JetSpan x, JetSpan y) {
        const Jet2 w = 1.0 + x[0];
        return sqrt(dot(y, y)) * w * w;
      },
      "control:|y|(1+x1)^2");
}

MetricField control_conformal_metric(int dim) {
  return MetricField(
      dim,
      [](JetSpan x) {
        const int n = static_cast<int>(x.size());
        const Jet2 w = 1.0 + dot(x, x);
        JetMatrix m(n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) m(i, j) = i == j ? w : Jet2(0.0);
        return m;
      },
      "control:(1+|x|^2)delta");
}

OneFormField control_nonclosed_form(int dim) {
  return OneFormField(
      dim,
      [](JetSpan x) {
        const int n = static_cast<int>(x.size());
        std::vector<Jet2> b(n, Jet2(0.0));
        // b = (0.2 + x2, -x1 + 0.5 x1 x3, 0.3 x1^2, 0, ...)
        b[0] = 0.2 + x[1];
        b[1] = -1.0 * x[0] + 0.5 * x[0] * x[n - 1];
        b[n - 1] += 0.3 * x[0] * x[0];
        return b;
      },
      "control:nonclosed");
}

std::vector<CatalogEntry> catalog_entries() {
  return {
      {"funk", "Funk metric on the unit ball", "dually flat"},
      {"randers-family", "Randers metrics from the flat pair (mu, lambda)", "dually flat"},
      {"navigation", "navigation form of (flat_alpha(mu), related_beta(mu, lambda))", "dually flat"},
      {"family-1.4", "flat_alpha(mu)", "spray 2 theta y + alpha^2 theta^i"},
      {"family-1.5", "related_beta(mu, lambda) against flat_alpha(mu)", "dually related"},
      {"ex-5.1", "sqrt(alpha (alpha + beta)), k = 0, eps = 1/2", "dually flat"},
      {"ex-5.2", "sqrt(alpha^2 + 2 eps alpha beta + kappa beta^2)", "dually flat"},
      {"ex-5.3", "arcsin solution, k = (0, -1, 0), eps = 1", "dually flat"},
      {"ex-5.4", "arcsinh solution, k = (0, 1, 0), eps = 1", "dually flat"},
      {"ex-5.5", "quartic-root integral, k = (0, 0, sign), eps = 1/2", "dually flat"},
      {"ex-5.6", "Gaussian integral, k = (sign, 0, 0), eps = 1/2", "dually flat"},
      {"family-1.11", "ex-5.2 swept over kappa in {-1, 0.5, 1}", "dually flat"},
      {"negative-control", "non-flat metrics and a non-related form", "fails"},
      {"deformation-stages", "two-path checks of the three deformation stages", "agreement"},
      {"ode", "elementary and integral-form solutions of the ODE", "residual small"},
      {"group", "transformation group laws and parameter transport", "exact"},
      {"eta", "closed-form deformation factors against quadrature", "agreement"},
      {"reversibility", "inverse/forward round trip and norm preservation", "identity"},
      {"engine", "jets against finite differences, Finsler vs Riemannian spray", "agreement"},
  };
}

std::optional<CatalogEntry> find_entry(const std::string& id) {
  for (const CatalogEntry& e : catalog_entries())
    if (e.id == id) return e;
  return std::nullopt;
}

}  // namespace dflat
