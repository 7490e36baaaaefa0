#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dflat/jet.hpp"
#include "dflat/riemann.hpp"

namespace dflat {

// F(x, y), positively 1-homogeneous in y.
class FinslerFunction {
 public:
  FinslerFunction(int dim, PointVectorFunction fn, std::string name = "F")
      : dim_(dim), fn_(std::move(fn)), name_(std::move(name)) {}

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  Jet2 operator()(JetSpan x, JetSpan y) const { return fn_(x, y); }
  double at(const Vec& x, const Vec& y) const;
  const PointVectorFunction& function() const { return fn_; }

  // F^2 as a scalar field of (x, y).
  PointVectorFunction squared() const;

 private:
  int dim_;
  PointVectorFunction fn_;
  std::string name_;
};

// alpha = sqrt(a_ij(x) y^i y^j).
FinslerFunction riemannian_norm(const MetricField& g);

// g_ij = [F^2 / 2]_{y^i y^j}.
Mat fundamental_tensor(const FinslerFunction& F, const Vec& x, const Vec& y);

// G^i = 1/4 g^il ([F^2]_{x^k y^l} y^k - [F^2]_{x^l}).
Vec spray_finsler(const FinslerFunction& F, const Vec& x, const Vec& y);

struct DualFlatResidual {
  Vec residual;  // D_l / scale
  double scale = 0.0;
  double max_abs() const { return residual.cwiseAbs().maxCoeff(); }
};

// D_l = [F^2]_{x^k y^l} y^k - 2 [F^2]_{x^l}, divided by
// scale = max(sum_l |[F^2]_{x^k y^l} y^k|, sum_l |2 [F^2]_{x^l}|, F^2).
DualFlatResidual dual_flat_residual(const FinslerFunction& F, const Vec& x,
                                    const Vec& y);

struct DualFlatReport {
  int samples = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  std::string scale = "max(sum|[F^2]_{x^k y^l} y^k|, sum|2[F^2]_{x^l}|, F^2)";
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

DualFlatReport verify_dually_flat(const FinslerFunction& F,
                                  const ChartDomain& domain, int samples,
                                  double tol, std::uint64_t seed);

// Least-squares fit of G^i = 2 theta y^i + alpha^2 theta^i over the given
// vectors. The residual is the max deviation divided by max |G^i| over the
// samples (0 when the spray vanishes identically).
struct SprayFormFit {
  Vec theta_lower;
  Vec theta_upper;
  double residual = 0.0;
};

SprayFormFit fit_spray_form(const MetricField& g, const Vec& x,
                            const std::vector<Vec>& ys);

// b_{i|j} - 2 theta_j b_i = c a_ij, c fitted by least squares.
struct DualRelationFit {
  Vec theta;  // theta_i, from the spray form
  double c = 0.0;
  double residual = 0.0;
  double spray_residual = 0.0;
};

DualRelationFit fit_dually_related(const MetricField& g,
                                   const OneFormField& beta, const Vec& x,
                                   const std::vector<Vec>& ys);

struct KParams;

// Residuals of the three structural conditions on (alpha, beta, theta, tau)
// characterizing dual flatness of alpha*phi(beta/alpha): the spray condition,
// the r_00 condition and the s_i0 condition.
struct StructuralResiduals {
  double spray = 0.0;
  double r00 = 0.0;
  double s_i0 = 0.0;
  double max() const;
};

StructuralResiduals structural_residuals(const MetricField& alpha,
                                       const OneFormField& beta,
                                       const Vec& theta, double tau,
                                       const KParams& k, const Vec& x,
                                       const Vec& y);

// Joint linear least squares for (theta_i, tau) at x from >= 3n vectors.
struct StructuralFit {
  Vec theta;
  double tau = 0.0;
  double fit_residual = 0.0;  // worst normalized residual over the ys
};

StructuralFit fit_structural(const MetricField& alpha, const OneFormField& beta,
                           const KParams& k, const Vec& x,
                           const std::vector<Vec>& ys);

struct ConvexityProbe {
  double min_eigenvalue = 0.0;
  Vec worst_x;
  Vec worst_y;
  int failures = 0;  // points where g_ij could not be evaluated
};

ConvexityProbe strong_convexity_probe(const FinslerFunction& F,
                                      const ChartDomain& domain, int samples,
                                      std::uint64_t seed);

// max |F(x, lambda y) - lambda F(x, y)| / F(x, y) over sampled points.
double homogeneity_defect(const FinslerFunction& F, const ChartDomain& domain,
                          int samples, double lambda, std::uint64_t seed);

}  // namespace dflat
