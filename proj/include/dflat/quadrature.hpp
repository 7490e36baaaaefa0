#pragma once

#include <functional>

#include "dflat/jet.hpp"

namespace dflat {

inline constexpr double kQuadratureTolerance = 1e-10;

using JetIntegrand = std::function<Jet2(const Jet2& t)>;

// Adaptive Simpson with Richardson correction on [a, b] (b < a allowed).
// Throws EvaluationError if the recursion exhausts its depth without
// meeting `abs_tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol = kQuadratureTolerance);

// Integral from 0 to `upper` of a jet-valued integrand.
//
// The interior is integrated at fixed nodes with the integrand evaluated on
// constant abscissae, so any dependence of the integrand on seeded variables
// is differentiated under the integral sign. The dependence through the
// upper limit enters through the Leibniz boundary terms, which need the
// integrand and its t-derivative at `upper`.
Jet2 integrate_to(const Jet2& upper, const JetIntegrand& integrand,
                  double abs_tol = kQuadratureTolerance);

}  // namespace dflat
