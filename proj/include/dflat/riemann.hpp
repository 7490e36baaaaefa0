#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dflat/jet.hpp"
#include "dflat/linalg.hpp"

namespace dflat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// a_ij(x) on a chart, evaluable through jets.
class MetricField {
 public:
  using Fn = std::function<JetMatrix(JetSpan x)>;

  MetricField(int dim, Fn fn, std::string name = "metric")
      : dim_(dim), fn_(std::move(fn)), name_(std::move(name)) {}

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  JetMatrix operator()(JetSpan x) const { return fn_(x); }
  Mat at(const Vec& x) const;

 private:
  int dim_;
  Fn fn_;
  std::string name_;
};

// b_i(x) on a chart, evaluable through jets.
class OneFormField {
 public:
  using Fn = std::function<std::vector<Jet2>(JetSpan x)>;

  OneFormField(int dim, Fn fn, std::string name = "form")
      : dim_(dim), fn_(std::move(fn)), name_(std::move(name)) {}

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  std::vector<Jet2> operator()(JetSpan x) const { return fn_(x); }
  Vec at(const Vec& x) const;

 private:
  int dim_;
  Fn fn_;
  std::string name_;
};

class ScalarField {
 public:
  using Fn = std::function<Jet2(JetSpan x)>;

  ScalarField(int dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

  int dim() const { return dim_; }
  Jet2 operator()(JetSpan x) const { return fn_(x); }
  double at(const Vec& x) const;

 private:
  int dim_;
  Fn fn_;
};

MetricField euclidean_metric(int dim);
OneFormField zero_form(int dim);

// Jet-level helpers shared by every module that builds fields.
Jet2 quadratic_form(const JetMatrix& a, JetSpan y);       // a_ij y^i y^j
Jet2 contract(JetSpan b, JetSpan y);                      // b_i y^i
Jet2 norm_sq_jet(const JetMatrix& a, JetSpan b);          // a^ij b_i b_j
std::vector<Jet2> raise(const JetMatrix& a_inv, JetSpan b);

// Gamma^i_jk, symmetric in (j, k).
class Christoffel {
 public:
  explicit Christoffel(int n) : n_(n), data_(static_cast<size_t>(n) * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int i, int j, int k) { return data_[(i * n_ + j) * n_ + k]; }
  double operator()(int i, int j, int k) const { return data_[(i * n_ + j) * n_ + k]; }

 private:
  int n_;
  std::vector<double> data_;
};

Christoffel christoffel(const MetricField& g, const Vec& x);

// G^i = 1/2 Gamma^i_jk y^j y^k.
Vec spray_riemann(const MetricField& g, const Vec& x, const Vec& y);

// Covariant derivative b_{i|j} = d_j b_i - Gamma^k_ij b_k of a 1-form and
// the standard contractions. Indices are raised with a^ij; a trailing 0
// means contraction with y; a dropped index means contraction with b^i on
// the first slot (s_j = b^i s_ij).
struct CovariantData {
  Mat bij;        // bij(i, j) = b_{i|j}
  Mat r_ij;       // symmetrization
  Mat s_ij;       // antisymmetrization
  Vec b_lower;    // b_i
  Vec b_upper;    // b^i
  double b2 = 0;  // a^ij b_i b_j
  double beta = 0;        // b_i y^i
  double alpha_sq = 0;    // a_ij y^i y^j
  double r00 = 0;
  Vec r_i;        // b^k r_ki
  Vec r_upper;    // r^i
  double r0 = 0;
  double r = 0;
  Vec s_i0;       // s_ij y^j
  Vec s_upper0;   // s^i_0
  Vec s_i;        // b^k s_ki
  Vec s_upper;    // s^i
  double s0 = 0;
  Mat a;          // a_ij at x
  Mat a_inv;      // a^ij at x
};

CovariantData covariant_derivative(const MetricField& g,
                                   const OneFormField& beta, const Vec& x,
                                   const Vec& y);

double norm_sq(const MetricField& g, const OneFormField& beta, const Vec& x);

// Sampling region: a ball, further restricted by a margin function. A point
// is admissible when margin(x) >= min_margin.
struct ChartDomain {
  Vec center;
  double radius = 1.0;
  std::function<double(const Vec&)> margin;  // empty: no extra restriction
  double min_margin = 1e-3;

  bool admits(const Vec& x) const;
};

ChartDomain ball_domain(int dim, double radius);

// Deterministic sampler for points in a ChartDomain and tangent vectors.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  // Rejection sampling; throws ConfigError when more than 20% of the draws
  // are rejected by the margin predicate.
  std::vector<Vec> points(const ChartDomain& domain, int count);

  // Uniform direction on the unit sphere scaled by a factor in [0.5, 2].
  Vec tangent(int dim);
  std::vector<Vec> tangents(int dim, int count);

  double uniform(double lo, double hi);
  std::mt19937_64& engine() { return rng_; }

 private:
  Vec ball_point(const ChartDomain& domain);
  std::mt19937_64 rng_;
};

}  // namespace dflat
