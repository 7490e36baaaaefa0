#include "dflat/finsler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "dflat/errors.hpp"
#include "dflat/phi.hpp"

namespace dflat {

double FinslerFunction::at(const Vec& x, const Vec& y) const {
  return fn_(constants(x), constants(y)).value();
}

PointVectorFunction FinslerFunction::squared() const {
  auto fn = fn_;
  return [fn](JetSpan x, JetSpan y) { return square(fn(x, y)); };
}

FinslerFunction riemannian_norm(const MetricField& g) {
  return FinslerFunction(
      g.dim(),
      [g](JetSpan x, JetSpan y) { return sqrt(quadratic_form(g(x), y)); },
      g.name() + ":alpha");
}

Mat fundamental_tensor(const FinslerFunction& F, const Vec& x, const Vec& y) {
  const int n = F.dim();
  const EvalContext ctx{n, false, true};
  const SeededInputs in = seed(ctx, x, y);
  const Jet2 half = 0.5 * square(F(in.x, in.y));
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = half.hess(i, j);
  return g;
}

Vec spray_finsler(const FinslerFunction& F, const Vec& x, const Vec& y) {
  const FieldDerivatives d = eval_field(F.squared(), x, y);
  const Mat g = 0.5 * d.fyy;
  const Mat g_inv = checked_inverse(g);
  const Vec rhs = d.fxy.transpose() * y - d.fx;
  return 0.25 * g_inv * rhs;
}

DualFlatResidual dual_flat_residual(const FinslerFunction& F, const Vec& x,
                                    const Vec& y) {
  const FieldDerivatives d = eval_field(F.squared(), x, y);
  const Vec mixed = d.fxy.transpose() * y;  // [F^2]_{x^k y^l} y^k
  const Vec grad = 2.0 * d.fx;
  DualFlatResidual out;
  out.scale = std::max({mixed.cwiseAbs().sum(), grad.cwiseAbs().sum(),
                        std::abs(d.value)});
  out.residual = mixed - grad;
  if (out.scale > 0.0) out.residual /= out.scale;
  return out;
}

DualFlatReport verify_dually_flat(const FinslerFunction& F,
                                  const ChartDomain& domain, int samples,
                                  double tol, std::uint64_t seed) {
  if (samples <= 0) throw ConfigError("verify_dually_flat: samples must be positive");
  Sampler sampler(seed);
  const auto xs = sampler.points(domain, samples);
  DualFlatReport report;
  report.samples = samples;
  report.tolerance = tol;
  report.seed = seed;
  double sum = 0.0;
  for (const Vec& x : xs) {
    const Vec y = sampler.tangent(F.dim());
    const double r = dual_flat_residual(F, x, y).max_abs();
    report.max_residual = std::max(report.max_residual, r);
    sum += r;
  }
  report.mean_residual = sum / samples;
  report.pass = report.max_residual < tol;
  return report;
}

namespace {

void require_rank(const Eigen::ColPivHouseholderQR<Mat>& qr, int cols,
                  const char* who) {
  if (qr.rank() < cols)
    throw SingularMatrixError(std::string(who) +
                              ": rank-deficient system; add vectors in general position");
}

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

SprayFormFit fit_spray_form(const MetricField& g, const Vec& x,
                            const std::vector<Vec>& ys) {
  const int n = g.dim();
  if (static_cast<int>(ys.size()) < 2 * n)
    throw ConfigError("fit_spray_form: need at least 2n sample vectors");
  const Christoffel gamma = christoffel(g, x);
  const Mat a = g.at(x);
  const Mat a_inv = checked_inverse(a);

  const int rows = n * static_cast<int>(ys.size());
  Mat A(rows, n);
  Vec rhs(rows);
  std::vector<Vec> sprays;
  for (size_t s = 0; s < ys.size(); ++s) {
    const Vec& y = ys[s];
    Vec G = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) G[i] += 0.5 * gamma(i, j, k) * y[j] * y[k];
    const double alpha_sq = y.dot(a * y);
    for (int i = 0; i < n; ++i) {
      const int row = static_cast<int>(s) * n + i;
      for (int k = 0; k < n; ++k)
        A(row, k) = 2.0 * y[k] * y[i] + alpha_sq * a_inv(i, k);
      rhs[row] = G[i];
    }
    sprays.push_back(G);
  }
  const Eigen::ColPivHouseholderQR<Mat> qr(A);
  require_rank(qr, n, "fit_spray_form");
  SprayFormFit fit;
  fit.theta_lower = qr.solve(rhs);
  fit.theta_upper = a_inv * fit.theta_lower;
  fit.residual = ratio(max_abs(Vec(A * fit.theta_lower - rhs)), max_abs(rhs));
  return fit;
}

DualRelationFit fit_dually_related(const MetricField& g,
                                   const OneFormField& beta, const Vec& x,
                                   const std::vector<Vec>& ys) {
  const int n = g.dim();
  const SprayFormFit spray = fit_spray_form(g, x, ys);
  const CovariantData d = covariant_derivative(g, beta, x, Vec::Zero(n));

  Mat m = d.bij;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) -= 2.0 * spray.theta_lower[j] * d.b_lower[i];

  DualRelationFit fit;
  fit.theta = spray.theta_lower;
  fit.spray_residual = spray.residual;
  fit.c = (m.array() * d.a.array()).sum() / d.a.squaredNorm();
  const double scale =
      std::max({max_abs(d.bij), 2.0 * max_abs(spray.theta_lower) * max_abs(d.b_lower),
                std::abs(fit.c) * max_abs(d.a)});
  fit.residual = ratio(max_abs(Mat(m - fit.c * d.a)), scale);
  return fit;
}

double StructuralResiduals::max() const { return std::max({spray, r00, s_i0}); }

namespace {

// Terms of the three structural conditions at (x, y), linear in (theta, tau).
struct StructuralTerms {
  Vec spray;             // G^i of alpha
  Mat spray_theta;       // n x n: coefficient of theta_k in row i
  Vec spray_tau;         // coefficient of tau
  double r00 = 0.0;
  Vec r00_theta;
  double r00_tau = 0.0;
  Vec s_i0;
  Mat s_theta;
  double scale_r = 0.0;  // |r_ij| |y|^2
  double scale_s = 0.0;  // |b_ij| |y|
};

StructuralTerms structural_terms(const MetricField& alpha,
                               const OneFormField& beta, const KParams& k,
                               const Vec& x, const Vec& y) {
  const int n = alpha.dim();
  const CovariantData d = covariant_derivative(alpha, beta, x, y);
  const double b = d.beta;
  const double a2 = d.alpha_sq;
  StructuralTerms t;
  t.spray = spray_riemann(alpha, x, y);
  t.spray_theta.resize(n, n);
  t.spray_tau.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      t.spray_theta(i, j) = 2.0 * y[j] * y[i] + a2 * d.a_inv(i, j);
    t.spray_tau[i] = (3.0 * k.k1 - 2.0) * b * y[i] - a2 * d.b_upper[i] +
                     1.5 * k.k3 * b * b * d.b_upper[i];
  }
  t.r00 = d.r00;
  t.r00_theta = 2.0 * b * y - 2.0 * a2 * d.b_upper;
  t.r00_tau = (3.0 + 2.0 * d.b2) * a2 + (3.0 * k.k2 - 2.0 - 3.0 * k.k3 * d.b2) * b * b;
  t.s_i0 = d.s_i0;
  t.s_theta.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      t.s_theta(i, j) = (i == j ? b : 0.0) - y[j] * d.b_lower[i];
  t.scale_r = max_abs(d.r_ij) * y.squaredNorm();
  t.scale_s = max_abs(d.bij) * y.norm();
  return t;
}

StructuralResiduals evaluate_terms(const StructuralTerms& t, const Vec& theta,
                                  double tau) {
  StructuralResiduals r;
  const Vec theta_part = t.spray_theta * theta;
  const Vec tau_part = tau * t.spray_tau;
  r.spray = ratio(max_abs(Vec(t.spray - theta_part - tau_part)),
                  std::max({max_abs(t.spray), max_abs(theta_part), max_abs(tau_part)}));

  const double r_theta = t.r00_theta.dot(theta);
  const double r_tau = tau * t.r00_tau;
  r.r00 = ratio(std::abs(t.r00 - r_theta - r_tau),
                std::max({std::abs(t.r00), t.scale_r, std::abs(r_theta), std::abs(r_tau)}));

  const Vec s_rhs = t.s_theta * theta;
  r.s_i0 = ratio(max_abs(Vec(t.s_i0 - s_rhs)),
                 std::max({max_abs(t.s_i0), t.scale_s, max_abs(s_rhs)}));
  return r;
}

}  // namespace

StructuralResiduals structural_residuals(const MetricField& alpha,
                                       const OneFormField& beta,
                                       const Vec& theta, double tau,
                                       const KParams& k, const Vec& x,
                                       const Vec& y) {
  return evaluate_terms(structural_terms(alpha, beta, k, x, y), theta, tau);
}

StructuralFit fit_structural(const MetricField& alpha, const OneFormField& beta,
                           const KParams& k, const Vec& x,
                           const std::vector<Vec>& ys) {
  const int n = alpha.dim();
  if (static_cast<int>(ys.size()) < 3 * n)
    throw ConfigError("fit_structural: need at least 3n sample vectors");
  std::vector<StructuralTerms> terms;
  for (const Vec& y : ys) terms.push_back(structural_terms(alpha, beta, k, x, y));

  // Rows per vector: n spray rows, one r_00 row, n s_i0 rows. Each block is
  // divided by |y|^2 so samples of different length weigh alike.
  const int per = 2 * n + 1;
  const int rows = per * static_cast<int>(ys.size());
  Mat A = Mat::Zero(rows, n + 1);
  Vec rhs(rows);
  for (size_t s = 0; s < ys.size(); ++s) {
    const StructuralTerms& t = terms[s];
    const double w = 1.0 / ys[s].squaredNorm();
    const int base = static_cast<int>(s) * per;
    for (int i = 0; i < n; ++i) {
      A.block(base + i, 0, 1, n) = w * t.spray_theta.row(i);
      A(base + i, n) = w * t.spray_tau[i];
      rhs[base + i] = w * t.spray[i];
    }
    A.block(base + n, 0, 1, n) = w * t.r00_theta.transpose();
    A(base + n, n) = w * t.r00_tau;
    rhs[base + n] = w * t.r00;
    for (int i = 0; i < n; ++i) {
      A.block(base + n + 1 + i, 0, 1, n) = w * t.s_theta.row(i);
      rhs[base + n + 1 + i] = w * t.s_i0[i];
    }
  }
  const Eigen::ColPivHouseholderQR<Mat> qr(A);
  require_rank(qr, n + 1, "fit_structural");
  const Vec z = qr.solve(rhs);

  StructuralFit fit;
  fit.theta = z.head(n);
  fit.tau = z[n];
  for (const StructuralTerms& t : terms)
    fit.fit_residual =
        std::max(fit.fit_residual, evaluate_terms(t, fit.theta, fit.tau).max());
  return fit;
}

ConvexityProbe strong_convexity_probe(const FinslerFunction& F,
                                      const ChartDomain& domain, int samples,
                                      std::uint64_t seed) {
  Sampler sampler(seed);
  const auto xs = sampler.points(domain, samples);
  ConvexityProbe probe;
  probe.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const Vec& x : xs) {
    const Vec y = sampler.tangent(F.dim());
    try {
      const Mat g = fundamental_tensor(F, x, y);
      const Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      if (!std::isfinite(lo)) {
        ++probe.failures;
        continue;
      }
      if (lo < probe.min_eigenvalue) {
        probe.min_eigenvalue = lo;
        probe.worst_x = x;
        probe.worst_y = y;
      }
    } catch (const EvaluationError&) {
      ++probe.failures;
    }
  }
  return probe;
}

double homogeneity_defect(const FinslerFunction& F, const ChartDomain& domain,
                          int samples, double lambda, std::uint64_t seed) {
  Sampler sampler(seed);
  const auto xs = sampler.points(domain, samples);
  double worst = 0.0;
  for (const Vec& x : xs) {
    const Vec y = sampler.tangent(F.dim());
    const double f = F.at(x, y);
    worst = std::max(worst, std::abs(F.at(x, lambda * y) - lambda * f) / f);
  }
  return worst;
}

}  // namespace dflat
