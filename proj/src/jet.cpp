#include "dflat/jet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dflat {
namespace {

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << "argument " << v;
  return os.str();
}

int common_width(const Jet2& a, const Jet2& b) {
  if (a.nvars() != 0 && b.nvars() != 0 && a.nvars() != b.nvars()) {
    throw EvaluationError("jet", "operands seeded over different variable sets");
  }
  return std::max(a.nvars(), b.nvars());
}

}  // namespace

Jet2 Jet2::with_width(double value, int m) {
  Jet2 r(value);
  r.m_ = m;
  std::fill_n(r.g_.begin(), m, 0.0);
  std::fill_n(r.h_.begin(), packed_size(m), 0.0);
  return r;
}

void Jet2::copy_from(const Jet2& other) {
  m_ = other.m_;
  v_ = other.v_;
  std::copy_n(other.g_.begin(), m_, g_.begin());
  std::copy_n(other.h_.begin(), packed_size(m_), h_.begin());
}

Jet2 Jet2::variable(double value, int nvars, int index) {
  if (nvars < 1 || nvars > kMaxJetVars || index < 0 || index >= nvars) {
    throw EvaluationError("seed", "variable index out of range");
  }
  if (!std::isfinite(value)) throw EvaluationError("seed", describe(value));
  Jet2 r = with_width(value, nvars);
  r.g_[index] = 1.0;
  return r;
}

Eigen::VectorXd Jet2::gradient() const {
  Eigen::VectorXd g(m_);
  for (int i = 0; i < m_; ++i) g[i] = g_[i];
  return g;
}

Eigen::MatrixXd Jet2::hessian() const {
  Eigen::MatrixXd h(m_, m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j <= i; ++j) h(i, j) = h(j, i) = h_[packed(i, j)];
  return h;
}

Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r(f0);
  r.m_ = a.m_;
  for (int i = 0; i < a.m_; ++i) r.g_[i] = f1 * a.g_[i];
  for (int i = 0; i < a.m_; ++i) {
    const int row = i * (i + 1) / 2;
    for (int j = 0; j <= i; ++j) {
      r.h_[row + j] = f1 * a.h_[row + j] + f2 * a.g_[i] * a.g_[j];
    }
  }
  return r;
}

Jet2 operator-(const Jet2& a) { return chain(a, -a.v_, -1.0, 0.0); }

Jet2& Jet2::operator+=(const Jet2& rhs) {
  const int m = common_width(*this, rhs);
  if (rhs.m_ == 0) {
    v_ += rhs.v_;
    return *this;
  }
  if (m_ == 0) {
    const double v = v_;
    *this = rhs;
    v_ += v;
    return *this;
  }
  v_ += rhs.v_;
  for (int i = 0; i < m; ++i) g_[i] += rhs.g_[i];
  for (int k = 0; k < packed_size(m); ++k) h_[k] += rhs.h_[k];
  return *this;
}

Jet2& Jet2::operator-=(const Jet2& rhs) { return *this += -rhs; }

Jet2& Jet2::operator*=(const Jet2& rhs) {
  const int m = common_width(*this, rhs);
  if (rhs.m_ == 0) {
    *this = chain(*this, v_ * rhs.v_, rhs.v_, 0.0);
    return *this;
  }
  if (m_ == 0) {
    *this = chain(rhs, v_ * rhs.v_, v_, 0.0);
    return *this;
  }
  const double a = v_;
  const double b = rhs.v_;
  for (int i = 0; i < m; ++i) {
    const int row = i * (i + 1) / 2;
    for (int j = 0; j <= i; ++j) {
      h_[row + j] = a * rhs.h_[row + j] + b * h_[row + j] +
                    g_[i] * rhs.g_[j] + g_[j] * rhs.g_[i];
    }
  }
  for (int i = 0; i < m; ++i) g_[i] = a * rhs.g_[i] + b * g_[i];
  v_ = a * b;
  return *this;
}

Jet2& Jet2::operator/=(const Jet2& rhs) {
  const double b = rhs.v_;
  if (b == 0.0) throw EvaluationError("division", "division by zero");
  if (rhs.m_ == 0) {
    *this = chain(*this, v_ / b, 1.0 / b, 0.0);
    return *this;
  }
  return *this *= chain(rhs, 1.0 / b, -1.0 / (b * b), 2.0 / (b * b * b));
}

Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r += b;
  return r;
}
Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r -= b;
  return r;
}
Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r *= b;
  return r;
}
Jet2 operator/(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r /= b;
  return r;
}

Jet2 sqrt(const Jet2& a) {
  const double v = a.value();
  if (v < 0.0 || (v == 0.0 && !a.is_constant())) {
    throw EvaluationError("sqrt", describe(v));
  }
  if (a.is_constant()) return Jet2(std::sqrt(v));
  const double s = std::sqrt(v);
  return chain(a, s, 0.5 / s, -0.25 / (s * v));
}

Jet2 pow(const Jet2& a, double p) {
  const double v = a.value();
  const bool integral = p == std::floor(p);
  if ((v < 0.0 && !integral) || (v == 0.0 && !a.is_constant() && p < 2.0 && p != 1.0 && p != 0.0)) {
    throw EvaluationError("pow", describe(v));
  }
  if (p == 0.0) return Jet2(1.0);
  if (a.is_constant()) return Jet2(std::pow(v, p));
  const double f0 = std::pow(v, p);
  const double f1 = p * std::pow(v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(v, p - 2.0);
  return chain(a, f0, f1, f2);
}

Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.value());
  if (!std::isfinite(e)) throw EvaluationError("exp", describe(a.value()));
  return chain(a, e, e, e);
}

Jet2 log(const Jet2& a) {
  const double v = a.value();
  if (v <= 0.0) throw EvaluationError("log", describe(v));
  return chain(a, std::log(v), 1.0 / v, -1.0 / (v * v));
}

Jet2 atan(const Jet2& a) {
  const double v = a.value();
  const double d = 1.0 / (1.0 + v * v);
  return chain(a, std::atan(v), d, -2.0 * v * d * d);
}

Jet2 asin(const Jet2& a) {
  const double v = a.value();
  if (std::abs(v) > 1.0 || (std::abs(v) == 1.0 && !a.is_constant())) {
    throw EvaluationError("asin", describe(v));
  }
  if (a.is_constant()) return Jet2(std::asin(v));
  const double q = 1.0 - v * v;
  const double d = 1.0 / std::sqrt(q);
  return chain(a, std::asin(v), d, v * d / q);
}

Jet2 asinh(const Jet2& a) {
  const double v = a.value();
  const double q = 1.0 + v * v;
  const double d = 1.0 / std::sqrt(q);
  return chain(a, std::asinh(v), d, -v * d / q);
}

Jet2 atanh(const Jet2& a) {
  const double v = a.value();
  if (std::abs(v) >= 1.0) throw EvaluationError("atanh", describe(v));
  const double d = 1.0 / (1.0 - v * v);
  return chain(a, std::atanh(v), d, 2.0 * v * d * d);
}

SeededInputs seed(const EvalContext& ctx, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& y) {
  const int n = ctx.dim;
  if (n < 1 || x.size() != n || y.size() != n) {
    throw EvaluationError("seed", "dimension mismatch");
  }
  const int m = ctx.nvars();
  if (m > kMaxJetVars) throw EvaluationError("seed", "too many variables");
  SeededInputs out;
  out.x.reserve(n);
  out.y.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw EvaluationError("seed", "non-finite coordinate");
    }
  }
  int slot = 0;
  for (int i = 0; i < n; ++i) {
    out.x.push_back(ctx.seed_point ? Jet2::variable(x[i], m, slot++) : Jet2(x[i]));
  }
  for (int i = 0; i < n; ++i) {
    out.y.push_back(ctx.seed_vector ? Jet2::variable(y[i], m, slot++) : Jet2(y[i]));
  }
  return out;
}

std::vector<Jet2> seed_point(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Jet2> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(Jet2::variable(x[i], n, i));
  return out;
}

std::vector<Jet2> constants(const Eigen::VectorXd& v) {
  return std::vector<Jet2>(v.data(), v.data() + v.size());
}

FieldDerivatives eval_field(const PointVectorFunction& f,
                            const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) {
  const int n = static_cast<int>(x.size());
  const EvalContext ctx{n, true, true};
  const SeededInputs in = seed(ctx, x, y);
  const Jet2 r = f(in.x, in.y);

  FieldDerivatives d;
  d.value = r.value();
  d.fx.resize(n);
  d.fy.resize(n);
  d.fxx.resize(n, n);
  d.fxy.resize(n, n);
  d.fyy.resize(n, n);
  for (int k = 0; k < n; ++k) {
    d.fx[k] = r.grad(k);
    d.fy[k] = r.grad(n + k);
    for (int l = 0; l < n; ++l) {
      d.fxx(k, l) = r.hess(k, l);
      d.fxy(k, l) = r.hess(k, n + l);
      d.fyy(k, l) = r.hess(n + k, n + l);
    }
  }
  return d;
}

FieldDerivatives fd_oracle(const PointVectorFunction& f,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           double h) {
  if (!(h > 0.0)) throw EvaluationError("fd", "step must be positive");
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd z(2 * n);
  z << x, y;
  auto at = [&](const Eigen::VectorXd& p) {
    const auto xs = constants(p.head(n));
    const auto ys = constants(p.tail(n));
    return f(xs, ys).value();
  };
  auto shifted = [&](int p, double dp, int q, double dq) {
    Eigen::VectorXd w = z;
    w[p] += dp;
    w[q] += dq;
    return at(w);
  };

  const double f0 = at(z);
  Eigen::VectorXd grad(2 * n);
  Eigen::MatrixXd hess(2 * n, 2 * n);
  for (int p = 0; p < 2 * n; ++p) {
    const double fp = shifted(p, h, p, 0.0);
    const double fm = shifted(p, -h, p, 0.0);
    grad[p] = (fp - fm) / (2.0 * h);
    hess(p, p) = (fp - 2.0 * f0 + fm) / (h * h);
    for (int q = 0; q < p; ++q) {
      const double fpp = shifted(p, h, q, h);
      const double fpm = shifted(p, h, q, -h);
      const double fmp = shifted(p, -h, q, h);
      const double fmm = shifted(p, -h, q, -h);
      hess(p, q) = hess(q, p) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }

  FieldDerivatives d;
  d.value = f0;
  d.fx = grad.head(n);
  d.fy = grad.tail(n);
  d.fxx = hess.topLeftCorner(n, n);
  d.fxy = hess.topRightCorner(n, n);
  d.fyy = hess.bottomRightCorner(n, n);
  return d;
}

double relative_deviation(const FieldDerivatives& a,
                          const FieldDerivatives& b) {
  const double fscale = std::max(std::abs(a.value), std::abs(b.value));
  auto block = [fscale](const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
    const double diff = (p - q).cwiseAbs().maxCoeff();
    const double scale =
        std::max({p.cwiseAbs().maxCoeff(), q.cwiseAbs().maxCoeff(), fscale});
    return scale > 0.0 ? diff / scale : diff;
  };
  double worst = fscale > 0.0 ? std::abs(a.value - b.value) / fscale
                              : std::abs(a.value - b.value);
  worst = std::max(worst, block(a.fx, b.fx));
  worst = std::max(worst, block(a.fy, b.fy));
  worst = std::max(worst, block(a.fxx, b.fxx));
  worst = std::max(worst, block(a.fxy, b.fxy));
  worst = std::max(worst, block(a.fyy, b.fyy));
  return worst;
}

}  // namespace dflat
