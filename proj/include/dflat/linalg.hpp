#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dflat/errors.hpp"
#include "dflat/jet.hpp"

namespace dflat {

inline double value_of(double v) { return v; }
inline double value_of(const Jet2& v) { return v.value(); }

// Dense row-major n x n matrix over double or Jet2.
template <class T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(int n) : n_(n), data_(static_cast<size_t>(n) * n, T(0.0)) {}

  static SquareMatrix identity(int n) {
    SquareMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1.0);
    return m;
  }

  int dim() const { return n_; }
  T& operator()(int i, int j) { return data_[static_cast<size_t>(i) * n_ + j]; }
  const T& operator()(int i, int j) const {
    return data_[static_cast<size_t>(i) * n_ + j];
  }

  Eigen::MatrixXd values() const {
    Eigen::MatrixXd m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = value_of((*this)(i, j));
    return m;
  }

 private:
  int n_ = 0;
  std::vector<T> data_;
};

using JetMatrix = SquareMatrix<Jet2>;

// Matrices with 1-norm condition number above this are treated as singular.
inline constexpr double kMaxConditionNumber = 1e10;

// Inverse by LU with partial pivoting (pivot chosen on the value part for
// jets). Throws SingularMatrixError for an exactly singular pivot or a
// condition number above kMaxConditionNumber.
template <class T>
SquareMatrix<T> inverse(const SquareMatrix<T>& a) {
  const int n = a.dim();
  SquareMatrix<T> lu = a;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;

  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::abs(value_of(lu(k, k)));
    for (int i = k + 1; i < n; ++i) {
      const double c = std::abs(value_of(lu(i, k)));
      if (c > best) {
        best = c;
        pivot = i;
      }
    }
    if (best == 0.0) throw SingularMatrixError("singular matrix (zero pivot)");
    if (pivot != k) {
      for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(pivot, j));
      std::swap(perm[k], perm[pivot]);
    }
    for (int i = k + 1; i < n; ++i) {
      lu(i, k) = lu(i, k) / lu(k, k);
      for (int j = k + 1; j < n; ++j) lu(i, j) -= lu(i, k) * lu(k, j);
    }
  }

  SquareMatrix<T> inv(n);
  std::vector<T> col(n);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < n; ++i) col[i] = T(perm[i] == c ? 1.0 : 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) col[i] -= lu(i, j) * col[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) col[i] -= lu(i, j) * col[j];
      col[i] = col[i] / lu(i, i);
    }
    for (int i = 0; i < n; ++i) inv(i, c) = col[i];
  }

  auto norm1 = [n](const auto& m) {
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::abs(value_of(m(i, j)));
      best = std::max(best, s);
    }
    return best;
  };
  if (norm1(a) * norm1(inv) > kMaxConditionNumber) {
    throw SingularMatrixError("matrix condition number above 1e10");
  }
  return inv;
}

// Eigen-facing convenience wrapper around the same LU routine.
inline Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  SquareMatrix<double> m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
  return inverse(m).values();
}

}  // namespace dflat
