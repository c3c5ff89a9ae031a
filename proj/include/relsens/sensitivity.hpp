#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "relsens/error.hpp"
#include "relsens/linalg.hpp"
#include "relsens/normal.hpp"
#include "relsens/sampling.hpp"

namespace relsens {

/// Central-difference scaling of one standard deviation:
/// d+ = sqrt(1 + delta_var), d- = 1 / d+ (exact reciprocal pair).
inline std::pair<double, double> scale_factors(double delta_var) {
  if (!(delta_var > 0.0)) {
    throw Error(ErrorCode::InvalidStep, "delta_var must be > 0");
  }
  const double d_plus = std::sqrt(1.0 + delta_var);
  return {d_plus, 1.0 / d_plus};
}

/// D c0 D with D = identity except D[i][i] = d: row and column i scale by d,
/// entry (i,i) by d^2, everything else is untouched. Positive definiteness
/// is preserved for d > 0.
inline Matrix modified_covariance(const Matrix& c0, std::size_t index, double d) {
  const std::size_t m = c0.size();
  if (index >= m) {
    throw Error(ErrorCode::IndexOutOfRange,
                "variable index " + std::to_string(index) + " out of range");
  }
  if (!(d > 0.0)) {
    throw Error(ErrorCode::InvalidStep, "scale factor must be > 0");
  }
  Matrix c = c0;
  for (std::size_t j = 0; j < m; ++j) {
    c(index, j) *= d;
    c(j, index) *= d;
  }
  return c;
}

/// Variance-based reliability sensitivities estimated from one sample batch.
struct SensitivityResult {
  std::vector<double> dpf_dvar;  // dPf / d(sigma^2_{U_k}) estimates
  std::vector<double> indices;   // S^rel, normalized by the signed sum
  double delta_var = 0.0;
  double d_plus = 0.0;
  double d_minus = 0.0;
  /// No failure samples: derivatives are all zero, indices undefined.
  bool all_safe = false;
  /// Sampling noise produced at least one negative derivative estimate;
  /// values are preserved, not clamped.
  bool has_negative = false;
  /// Signed derivative sum was not positive; indices are not interpretable
  /// as variance fractions.
  bool sum_not_positive = false;
};

/// Estimates dPf / d(sigma^2_{U_k}) for every variable by reweighting the
/// existing samples with perturbed-covariance densities:
///
///   dPf/dvar_k ~= 1/(2 N delta_var) sum_s [f_k+(u_s) - f_k-(u_s)] / f_den(u_s) I(g_s)
///
/// where f_k+- are zero-mean normal densities whose covariance is base_cov
/// with row/column k scaled by d+- , and f_den is the density the batch was
/// drawn from (the base density for plain Monte Carlo, the importance
/// sampling density otherwise). No limit-state evaluations are performed.
///
/// Density ratios are evaluated in log space with one Cholesky factor per
/// perturbed covariance (2m factorizations per call, reused across samples).
inline SensitivityResult reliability_sensitivities(const SampleBatch& batch,
                                                   double delta_var = 0.1,
                                                   unsigned threads = 0) {
  if (batch.n_samples == 0) {
    throw Error(ErrorCode::EmptyBatch, "batch has no samples");
  }
  const std::size_t n = batch.n_samples;
  const std::size_t m = batch.dim;

  SensitivityResult result;
  result.delta_var = delta_var;
  std::tie(result.d_plus, result.d_minus) = scale_factors(delta_var);
  result.dpf_dvar.assign(m, 0.0);
  result.indices.assign(m, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> failure_rows;
  for (std::size_t s = 0; s < n; ++s) {
    if (!std::isfinite(batch.g[s])) {
      throw Error(ErrorCode::NonFiniteValue,
                  "batch contains a non-finite limit state value");
    }
    if (batch.g[s] <= 0.0) failure_rows.push_back(s);
  }
  if (failure_rows.empty()) {
    result.all_safe = true;
    return result;
  }

  (void)CholeskyFactor::compute(batch.base_cov);  // pre: base covariance positive definite

  const double scale = 1.0 / (2.0 * static_cast<double>(n) * delta_var);
  const unsigned k_threads = detail::resolve_threads(threads, m);

  detail::parallel_chunks(m, k_threads, [&](std::size_t k_begin, std::size_t k_end) {
    for (std::size_t k = k_begin; k < k_end; ++k) {
      const CholeskyFactor chol_plus =
          CholeskyFactor::compute(modified_covariance(batch.base_cov, k, result.d_plus));
      const CholeskyFactor chol_minus =
          CholeskyFactor::compute(modified_covariance(batch.base_cov, k, result.d_minus));
      const double log_cp = detail::log_density_constant(m, chol_plus.log_det());
      const double log_cm = detail::log_density_constant(m, chol_minus.log_det());

      double acc = 0.0;
      std::vector<double> scratch(m);
      for (const std::size_t s : failure_rows) {
        const auto u = batch.u_row(s);
        const double lp = log_cp - 0.5 * chol_plus.quad_form(u, scratch);
        const double lm = log_cm - 0.5 * chol_minus.quad_form(u, scratch);
        const double den = batch.log_fs[s];
        acc += std::exp(lp - den) - std::exp(lm - den);
      }
      result.dpf_dvar[k] = scale * acc;
    }
  });

  double sum = 0.0;
  for (double v : result.dpf_dvar) {
    sum += v;
    if (v < 0.0) result.has_negative = true;
  }
  if (sum > 0.0 || sum < 0.0) {
    for (std::size_t k = 0; k < m; ++k) result.indices[k] = result.dpf_dvar[k] / sum;
  }
  result.sum_not_positive = !(sum > 0.0);
  return result;
}

/// Closed-form first-order (= total) indices of a linear model with
/// independent inputs: S_i = a_i^2 sigma_i^2 / sum_j a_j^2 sigma_j^2.
inline std::vector<double> linear_sobol(std::span<const double> a,
                                        std::span<const double> stds) {
  if (a.size() != stds.size()) {
    throw Error(ErrorCode::InvalidArgument, "size mismatch");
  }
  double sum = 0.0;
  std::vector<double> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    s[i] = a[i] * a[i] * stds[i] * stds[i];
    sum += s[i];
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::DegenerateVariance, "model variance is zero");
  }
  for (double& v : s) v /= sum;
  return s;
}

}  // namespace relsens
