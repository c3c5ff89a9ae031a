#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "relsens/error.hpp"

namespace relsens {

/// Dense square matrix, row-major. Sized for correlation/covariance work
/// (m is the number of random variables, typically < 100).
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  const std::vector<double>& data() const noexcept { return a_; }

  bool is_symmetric(double tol = 1e-12) const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
  }

  bool has_unit_diagonal(double tol = 1e-12) const {
    for (std::size_t i = 0; i < n_; ++i)
      if (std::abs((*this)(i, i) - 1.0) > tol) return false;
    return true;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.n_ == b.n_ && a.a_ == b.a_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Lower-triangular Cholesky factor with cached log-determinant. One factor
/// per covariance is reused across all density evaluations of a batch.
class CholeskyFactor {
 public:
  static CholeskyFactor compute(const Matrix& a) {
    const std::size_t n = a.size();
    if (!a.is_symmetric(1e-10)) {
      throw Error(ErrorCode::NotPositiveDefinite, "matrix is not symmetric");
    }
    CholeskyFactor f;
    f.l_ = Matrix(n);
    f.log_det_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = a(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= f.l_(i, k) * f.l_(j, k);
        if (i == j) {
          if (!(s > 0.0)) {
            throw Error(ErrorCode::NotPositiveDefinite,
                        "pivot " + std::to_string(i) + " is not positive");
          }
          f.l_(i, i) = std::sqrt(s);
          f.log_det_ += 2.0 * std::log(f.l_(i, i));
        } else {
          f.l_(i, j) = s / f.l_(j, j);
        }
      }
    }
    return f;
  }

  std::size_t size() const noexcept { return l_.size(); }
  const Matrix& lower() const noexcept { return l_; }
  double log_det() const noexcept { return log_det_; }

  /// Solves L y = b in place (forward substitution).
  void solve_lower(std::span<double> b) const {
    const std::size_t n = l_.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * b[k];
      b[i] = s / l_(i, i);
    }
  }

  /// u' A^{-1} u  =  || L^{-1} u ||^2, without forming the inverse.
  double quad_form(std::span<const double> u) const {
    std::vector<double> scratch(u.size());
    return quad_form(u, scratch);
  }

  /// Allocation-free variant for hot loops; scratch must hold size() doubles.
  double quad_form(std::span<const double> u, std::span<double> scratch) const {
    const std::size_t n = l_.size();
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = u[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * scratch[k];
      scratch[i] = s / l_(i, i);
      q += scratch[i] * scratch[i];
    }
    return q;
  }

  /// y = L x (used to correlate i.i.d. standard normal draws).
  void multiply_lower(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = l_.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += l_(i, k) * x[k];
      y[i] = s;
    }
  }

  bool is_identity(double tol = 0.0) const {
    const std::size_t n = l_.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double want = (i == j) ? 1.0 : 0.0;
        if (std::abs(l_(i, j) - want) > tol) return false;
      }
    return true;
  }

 private:
  Matrix l_;
  double log_det_ = 0.0;
};

}  // namespace relsens
