#pragma once

#include <cmath>
#include <limits>

#include "relsens/error.hpp"

namespace relsens {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kSqrtTwoPi = 2.5066282746310005024157652848110;
inline constexpr double kInvSqrtTwoPi = 0.39894228040143267793994605993438;
inline constexpr double kSqrtHalf = 0.70710678118654752440084436210485;

/// Standard normal density.
inline double norm_pdf(double x) {
  return kInvSqrtTwoPi * std::exp(-0.5 * x * x);
}

inline double norm_log_pdf(double x) {
  return -0.5 * x * x - 0.91893853320467274178032973640562;  // log sqrt(2 pi)
}

/// Standard normal CDF via the complementary error function; relative
/// accuracy follows libm erfc (~1 ulp), which keeps the deep lower tail
/// usable down to denormal range.
inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * kSqrtHalf);
}

namespace detail {

// Acklam's rational approximation to the standard normal quantile,
// central + lower-tail branches. Callers map p > 1/2 through symmetry
// (1 - p is exact for p >= 1/2).
inline double acklam_quantile_lower_half(double p) {
  static constexpr double a[6] = {
      -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {
      -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[6] = {
      -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Inverse standard normal CDF. Rational approximation polished with one
/// Halley step against norm_cdf; relative error is near machine epsilon
/// over p in [1e-300, 1 - 1e-16].
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::InvalidProbability,
                "quantile requires p strictly inside (0,1), got p=" + std::to_string(p));
  }
  const bool upper = p > 0.5;
  const double pl = upper ? 1.0 - p : p;  // exact for p >= 1/2
  double x = detail::acklam_quantile_lower_half(pl);
  // Halley refinement; skipped where exp(x^2/2) would overflow (the
  // approximation alone is already ~1e-9 accurate out there).
  if (std::abs(x) < 37.0) {
    const double e = norm_cdf(x) - pl;
    const double u = e * kSqrtTwoPi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return upper ? -x : x;
}

}  // namespace relsens
