#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "relsens/distributions.hpp"
#include "relsens/error.hpp"
#include "relsens/linalg.hpp"
#include "relsens/normal.hpp"

namespace relsens {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for integrals weighted by the standard normal density:
/// integral f(z) phi(z) dz  ~=  sum_i w_i f(z_i). Nodes are the roots of the
/// probabilists' Hermite polynomial, found by Newton iteration on the
/// orthonormal three-term recurrence; weights are reciprocal Christoffel sums.
inline QuadratureRule gauss_hermite(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one node");
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);

  constexpr double kSqrt2 = 1.4142135623730950488;
  const std::size_t half = (n + 1) / 2;
  std::vector<double> positive_roots(half, 0.0);  // found largest-first
  double z = 0.0;

  for (std::size_t i = 0; i < half; ++i) {
    // initial guesses (largest root first), physicists' scaling times sqrt(2);
    // z enters holding the previously found root
    if (i == 0) {
      z = kSqrt2 * (std::sqrt(2.0 * n + 1.0) -
                    1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0));
    } else if (i == 1) {
      z -= 2.0 * 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * positive_roots[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * positive_roots[1];
    } else {
      z = 2.0 * z - positive_roots[i - 2];
    }

    double pn = 0.0, pn1 = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // orthonormal recurrence: p_{k+1} = (z p_k - sqrt(k) p_{k-1}) / sqrt(k+1)
      double pkm1 = 0.0, pk = 1.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double pkp1 =
            (z * pk - std::sqrt(static_cast<double>(k)) * pkm1) /
            std::sqrt(static_cast<double>(k + 1));
        pkm1 = pk;
        pk = pkp1;
      }
      pn = pk;
      pn1 = pkm1;
      const double deriv = std::sqrt(static_cast<double>(n)) * pn1;
      const double step = pn / deriv;
      z -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
    }

    // Christoffel weight: 1 / sum_{k<n} p_k(z)^2
    double pkm1 = 0.0, pk = 1.0, sum_sq = 1.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double pkp1 = (z * pk - std::sqrt(static_cast<double>(k)) * pkm1) /
                          std::sqrt(static_cast<double>(k + 1));
      pkm1 = pk;
      pk = pkp1;
      sum_sq += pk * pk;
    }
    const double w = 1.0 / sum_sq;

    positive_roots[i] = z;
    // ascending storage: negative roots first
    rule.nodes[i] = -z;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = z;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;  // enforce exact central root
  return rule;
}

/// Multivariate zero-mean normal log-density with a precomputed factor.
inline double joint_normal_log_pdf(const CholeskyFactor& factor,
                                   std::span<const double> u) {
  if (u.size() != factor.size()) {
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  }
  const double m = static_cast<double>(u.size());
  return -0.5 * (m * std::log(kTwoPi) + factor.log_det() + factor.quad_form(u));
}

inline double joint_normal_log_pdf(const Matrix& cov, std::span<const double> u) {
  return joint_normal_log_pdf(CholeskyFactor::compute(cov), u);
}

/// (2 pi)^{-m/2} |C|^{-1/2} exp(-u' C^{-1} u / 2)
inline double joint_normal_pdf(const Matrix& cov, std::span<const double> u) {
  return std::exp(joint_normal_log_pdf(cov, u));
}

inline double joint_normal_pdf(const CholeskyFactor& factor,
                               std::span<const double> u) {
  return std::exp(joint_normal_log_pdf(factor, u));
}

/// Solves the Nataf integral equation for one pair of marginals: finds the
/// Gaussian-copula correlation rho_u such that the correlation of
/// (Fa^{-1}(Phi(Z1)), Fb^{-1}(Phi(Z2))) under N(0, [[1,rho_u],[rho_u,1]])
/// equals rho_x. Gauss-Hermite quadrature plus bisection.
inline double nataf_adjust_pair(const MarginalDistribution& a,
                                const MarginalDistribution& b, double rho_x,
                                std::size_t quad_nodes = 32) {
  if (rho_x == 0.0) return 0.0;
  if (!(rho_x > -1.0 && rho_x < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "correlation must be in (-1,1)");
  }
  if (a.kind() == DistributionKind::Normal &&
      b.kind() == DistributionKind::Normal) {
    return rho_x;  // Gaussian marginals need no adjustment
  }

  const QuadratureRule rule = gauss_hermite(quad_nodes);
  const std::size_t n = rule.nodes.size();

  std::vector<double> ga(n);
  for (std::size_t i = 0; i < n; ++i) ga[i] = a.quantile_from_z(rule.nodes[i]);
  std::vector<double> gb_axis(n);
  for (std::size_t i = 0; i < n; ++i) gb_axis[i] = b.quantile_from_z(rule.nodes[i]);

  // quadrature-consistent moments (these equal the nominal moments for the
  // moment-parameterized kinds, but not for a truncated normal)
  double mu_a = 0.0, m2_a = 0.0, mu_b = 0.0, m2_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu_a += rule.weights[i] * ga[i];
    m2_a += rule.weights[i] * ga[i] * ga[i];
    mu_b += rule.weights[i] * gb_axis[i];
    m2_b += rule.weights[i] * gb_axis[i] * gb_axis[i];
  }
  const double sd_a = std::sqrt(m2_a - mu_a * mu_a);
  const double sd_b = std::sqrt(m2_b - mu_b * mu_b);
  if (!(sd_a > 0.0 && sd_b > 0.0)) {
    throw Error(ErrorCode::DegenerateVariance, "quadrature variance vanished");
  }

  const auto copula_corr = [&](double rho) {
    const double ortho = std::sqrt(1.0 - rho * rho);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        inner += rule.weights[j] *
                 b.quantile_from_z(rho * rule.nodes[i] + ortho * rule.nodes[j]);
      }
      e += rule.weights[i] * ga[i] * inner;
    }
    return (e - mu_a * mu_b) / (sd_a * sd_b);
  };

  double lo = -0.999999, hi = 0.999999;
  double f_lo = copula_corr(lo) - rho_x;
  double f_hi = copula_corr(hi) - rho_x;
  if (f_lo * f_hi > 0.0) {
    throw Error(ErrorCode::NoConvergence,
                "target correlation not attainable under the Gaussian copula");
  }
  for (int iter = 0; iter < 100 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = copula_corr(mid) - rho_x;
    if ((f_lo <= 0.0) == (f_mid <= 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Nataf / Gaussian-copula joint model. Maps between independent standard
/// normal space (u), correlated standard normal space (z, covariance rho_u),
/// and physical space (x).
class NatafTransform {
 public:
  static NatafTransform build(std::vector<MarginalDistribution> marginals,
                              const Matrix& rho_x,
                              std::size_t quad_nodes = 32) {
    const std::size_t m = marginals.size();
    if (m == 0) throw Error(ErrorCode::InvalidArgument, "no marginals given");
    if (rho_x.size() != m) {
      throw Error(ErrorCode::InvalidArgument, "correlation matrix size mismatch");
    }
    if (!rho_x.is_symmetric(1e-10) || !rho_x.has_unit_diagonal(1e-12)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "correlation matrix must be symmetric with unit diagonal");
    }
    (void)CholeskyFactor::compute(rho_x);  // validates positive definiteness

    NatafTransform t;
    t.marginals_ = std::move(marginals);
    t.rho_x_ = rho_x;
    t.rho_u_ = Matrix::identity(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double r = nataf_adjust_pair(t.marginals_[i], t.marginals_[j],
                                           rho_x(i, j), quad_nodes);
        t.rho_u_(i, j) = r;
        t.rho_u_(j, i) = r;
      }
    }
    t.chol_u_ = CholeskyFactor::compute(t.rho_u_);
    t.independent_ = t.chol_u_.is_identity();
    return t;
  }

  /// Independent marginals, identity correlation.
  static NatafTransform independent(std::vector<MarginalDistribution> marginals) {
    const std::size_t m = marginals.size();
    return build(std::move(marginals), Matrix::identity(m));
  }

  std::size_t dim() const noexcept { return marginals_.size(); }
  const std::vector<MarginalDistribution>& marginals() const noexcept {
    return marginals_;
  }
  const Matrix& rho_x() const noexcept { return rho_x_; }
  const Matrix& rho_u() const noexcept { return rho_u_; }
  const CholeskyFactor& chol_u() const noexcept { return chol_u_; }
  bool independent_inputs() const noexcept { return independent_; }

  /// Marginal map z -> x, applied per coordinate (z already carries the
  /// rho_u correlation structure).
  std::vector<double> z_to_x(std::span<const double> z) const {
    check_dim(z.size());
    std::vector<double> x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      x[i] = marginals_[i].quantile_from_z(z[i]);
    }
    return x;
  }

  std::vector<double> x_to_z(std::span<const double> x) const {
    check_dim(x.size());
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      z[i] = marginals_[i].z_from_x(x[i]);
    }
    return z;
  }

  /// Full map from independent standard normal u: z = L u, x_i = F_i^{-1}(Phi(z_i)).
  std::vector<double> u_to_x(std::span<const double> u) const {
    check_dim(u.size());
    if (independent_) return z_to_x(u);
    std::vector<double> z(u.size());
    chol_u_.multiply_lower(u, z);
    return z_to_x(z);
  }

  std::vector<double> x_to_u(std::span<const double> x) const {
    std::vector<double> z = x_to_z(x);
    if (!independent_) chol_u_.solve_lower(z);
    return z;
  }

 private:
  void check_dim(std::size_t n) const {
    if (n != marginals_.size()) {
      throw Error(ErrorCode::InvalidArgument, "vector dimension mismatch");
    }
  }

  std::vector<MarginalDistribution> marginals_;
  Matrix rho_x_;
  Matrix rho_u_;
  CholeskyFactor chol_u_;
  bool independent_ = true;
};

}  // namespace relsens
