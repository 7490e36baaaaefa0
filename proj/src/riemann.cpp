#include "dflat/riemann.hpp"

#include <cmath>

#include "dflat/errors.hpp"

namespace dflat {

Mat MetricField::at(const Vec& x) const { return fn_(constants(x)).values(); }

Vec OneFormField::at(const Vec& x) const {
  const auto b = fn_(constants(x));
  Vec out(b.size());
  for (size_t i = 0; i < b.size(); ++i) out[i] = b[i].value();
  return out;
}

double ScalarField::at(const Vec& x) const { return fn_(constants(x)).value(); }

MetricField euclidean_metric(int dim) {
  return MetricField(
      dim, [dim](JetSpan) { return JetMatrix::identity(dim); }, "euclidean");
}

OneFormField zero_form(int dim) {
  return OneFormField(
      dim, [dim](JetSpan) { return std::vector<Jet2>(dim, Jet2(0.0)); }, "zero");
}

Jet2 quadratic_form(const JetMatrix& a, JetSpan y) {
  const int n = a.dim();
  Jet2 acc(0.0);
  for (int i = 0; i < n; ++i) {
    Jet2 row(0.0);
    for (int j = 0; j < n; ++j) row += a(i, j) * y[j];
    acc += row * y[i];
  }
  return acc;
}

Jet2 contract(JetSpan b, JetSpan y) {
  Jet2 acc(0.0);
  for (size_t i = 0; i < b.size(); ++i) acc += b[i] * y[i];
  return acc;
}

std::vector<Jet2> raise(const JetMatrix& a_inv, JetSpan b) {
  const int n = a_inv.dim();
  std::vector<Jet2> out(n, Jet2(0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] += a_inv(i, j) * b[j];
  return out;
}

Jet2 norm_sq_jet(const JetMatrix& a, JetSpan b) {
  return quadratic_form(inverse(a), b);
}

namespace {

// d_k a_ij at x, indexed da[k](i, j).
std::vector<Mat> metric_derivatives(const JetMatrix& a) {
  const int n = a.dim();
  std::vector<Mat> da(n, Mat::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) da[k](i, j) = a(i, j).grad(k);
  return da;
}

Christoffel christoffel_from(const Mat& a_inv, const std::vector<Mat>& da) {
  const int n = static_cast<int>(a_inv.rows());
  // Christoffel symbols of the first kind: [jk, l].
  std::vector<double> first(static_cast<size_t>(n) * n * n);
  auto idx = [n](int l, int j, int k) { return (l * n + j) * n + k; };
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        first[idx(l, j, k)] =
            0.5 * (da[j](l, k) + da[k](l, j) - da[l](j, k));
  Christoffel gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) acc += a_inv(i, l) * first[idx(l, j, k)];
        gamma(i, j, k) = gamma(i, k, j) = acc;
      }
  return gamma;
}

}  // namespace

Christoffel christoffel(const MetricField& g, const Vec& x) {
  const JetMatrix a = g(seed_point(x));
  const Mat a_inv = checked_inverse(a.values());
  return christoffel_from(a_inv, metric_derivatives(a));
}

Vec spray_riemann(const MetricField& g, const Vec& x, const Vec& y) {
  const Christoffel gamma = christoffel(g, x);
  const int n = g.dim();
  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out[i] += 0.5 * gamma(i, j, k) * y[j] * y[k];
  return out;
}

CovariantData covariant_derivative(const MetricField& g,
                                   const OneFormField& beta, const Vec& x,
                                   const Vec& y) {
  const int n = g.dim();
  const auto xs = seed_point(x);
  const JetMatrix a = g(xs);
  const std::vector<Jet2> b = beta(xs);

  CovariantData d;
  d.a = a.values();
  d.a_inv = checked_inverse(d.a);
  const Christoffel gamma = christoffel_from(d.a_inv, metric_derivatives(a));

  d.b_lower.resize(n);
  for (int i = 0; i < n; ++i) d.b_lower[i] = b[i].value();
  d.bij.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = b[i].grad(j);
      for (int k = 0; k < n; ++k) acc -= gamma(k, i, j) * d.b_lower[k];
      d.bij(i, j) = acc;
    }
  d.r_ij = 0.5 * (d.bij + d.bij.transpose());
  d.s_ij = 0.5 * (d.bij - d.bij.transpose());

  d.b_upper = d.a_inv * d.b_lower;
  d.b2 = d.b_lower.dot(d.b_upper);
  d.beta = d.b_lower.dot(y);
  d.alpha_sq = y.dot(d.a * y);

  d.r00 = y.dot(d.r_ij * y);
  d.r_i = d.r_ij.transpose() * d.b_upper;
  d.r_upper = d.a_inv * d.r_i;
  d.r0 = d.r_i.dot(y);
  d.r = d.r_i.dot(d.b_upper);

  d.s_i0 = d.s_ij * y;
  d.s_upper0 = d.a_inv * d.s_i0;
  d.s_i = d.s_ij.transpose() * d.b_upper;
  d.s_upper = d.a_inv * d.s_i;
  d.s0 = d.s_i.dot(y);
  return d;
}

double norm_sq(const MetricField& g, const OneFormField& beta, const Vec& x) {
  const Mat a = g.at(x);
  const Vec b = beta.at(x);
  return b.dot(checked_inverse(a) * b);
}

bool ChartDomain::admits(const Vec& x) const {
  if ((x - center).norm() > radius) return false;
  return !margin || margin(x) >= min_margin;
}

ChartDomain ball_domain(int dim, double radius) {
  ChartDomain d;
  d.center = Vec::Zero(dim);
  d.radius = radius;
  return d;
}

double Sampler::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng_);
}

Vec Sampler::ball_point(const ChartDomain& domain) {
  const int n = static_cast<int>(domain.center.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec dir(n);
  do {
    for (int i = 0; i < n; ++i) dir[i] = normal(rng_);
  } while (dir.norm() == 0.0);
  dir.normalize();
  const double radius = domain.radius * std::pow(uniform(0.0, 1.0), 1.0 / n);
  return domain.center + radius * dir;
}

std::vector<Vec> Sampler::points(const ChartDomain& domain, int count) {
  std::vector<Vec> out;
  out.reserve(count);
  int attempts = 0;
  int rejected = 0;
  const int max_attempts = 2 * count + 50;
  while (static_cast<int>(out.size()) < count) {
    if (attempts >= max_attempts) break;
    ++attempts;
    Vec x = ball_point(domain);
    if (domain.margin && domain.margin(x) < domain.min_margin) {
      ++rejected;
      continue;
    }
    out.push_back(std::move(x));
  }
  if (static_cast<int>(out.size()) < count || rejected > 0.2 * attempts) {
    throw ConfigError("sampling domain rejected " + std::to_string(rejected) +
                      " of " + std::to_string(attempts) +
                      " draws; domain misconfigured");
  }
  return out;
}

Vec Sampler::tangent(int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng_);
  } while (v.norm() < 1e-3);
  v.normalize();
  return uniform(0.5, 2.0) * v;
}

std::vector<Vec> Sampler::tangents(int dim, int count) {
  std::vector<Vec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(tangent(dim));
  return out;
}

}  // namespace dflat
