#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "relsens/error.hpp"
#include "relsens/normal.hpp"

namespace relsens {

enum class DistributionKind { Normal, Lognormal, Uniform, TruncatedNormal };

inline const char* kind_name(DistributionKind k) {
  switch (k) {
    case DistributionKind::Normal: return "normal";
    case DistributionKind::Lognormal: return "lognormal";
    case DistributionKind::Uniform: return "uniform";
    case DistributionKind::TruncatedNormal: return "truncated_normal";
  }
  return "unknown";
}

/// Univariate marginal parameterized by its first two moments. Immutable
/// after construction; evaluation methods are pure.
///
/// Lognormal uses moment matching: zeta^2 = ln(1 + (sigma/mu)^2),
/// lambda = ln(mu) - zeta^2/2. TruncatedNormal takes the pre-truncation
/// moments plus explicit bounds; no post-truncation moment matching.
class MarginalDistribution {
 public:
  static MarginalDistribution from_moments(DistributionKind kind, double mean,
                                           double std_dev) {
    if (!(std_dev > 0.0) || !std::isfinite(mean) || !std::isfinite(std_dev)) {
      throw Error(ErrorCode::InvalidMoments, "std_dev must be finite and > 0");
    }
    MarginalDistribution d;
    d.kind_ = kind;
    d.mean_ = mean;
    d.std_ = std_dev;
    switch (kind) {
      case DistributionKind::Normal:
        break;
      case DistributionKind::Lognormal: {
        if (!(mean > 0.0)) {
          throw Error(ErrorCode::InvalidMoments, "lognormal requires mean > 0");
        }
        const double cv = std_dev / mean;
        d.p2_ = std::sqrt(std::log1p(cv * cv));          // zeta
        d.p1_ = std::log(mean) - 0.5 * d.p2_ * d.p2_;    // lambda
        break;
      }
      case DistributionKind::Uniform: {
        const double half_width = std_dev * 1.7320508075688772935;  // sqrt(3)
        d.p1_ = mean - half_width;
        d.p2_ = mean + half_width;
        break;
      }
      case DistributionKind::TruncatedNormal:
        throw Error(ErrorCode::InvalidMoments,
                    "truncated normal needs explicit bounds; use truncated_normal()");
    }
    return d;
  }

  /// Truncated normal from pre-truncation moments and explicit bounds.
  static MarginalDistribution truncated_normal(double mean, double std_dev,
                                               double lower, double upper) {
    if (!(std_dev > 0.0)) {
      throw Error(ErrorCode::InvalidMoments, "std_dev must be > 0");
    }
    if (!(lower < upper)) {
      throw Error(ErrorCode::InvalidMoments, "truncation requires lower < upper");
    }
    MarginalDistribution d;
    d.kind_ = DistributionKind::TruncatedNormal;
    d.mean_ = mean;
    d.std_ = std_dev;
    d.p1_ = lower;
    d.p2_ = upper;
    d.trunc_p_lo_ = std::isinf(lower) ? 0.0 : norm_cdf((lower - mean) / std_dev);
    const double p_hi = std::isinf(upper) ? 1.0 : norm_cdf((upper - mean) / std_dev);
    d.trunc_mass_ = p_hi - d.trunc_p_lo_;
    if (!(d.trunc_mass_ > 0.0)) {
      throw Error(ErrorCode::InvalidMoments, "truncation interval has no probability mass");
    }
    return d;
  }

  DistributionKind kind() const noexcept { return kind_; }
  double mean() const noexcept { return mean_; }
  double std_dev() const noexcept { return std_; }

  /// Open support interval; cdf is 0 at lo and 1 at hi.
  std::pair<double, double> support() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case DistributionKind::Normal: return {-inf, inf};
      case DistributionKind::Lognormal: return {0.0, inf};
      case DistributionKind::Uniform: return {p1_, p2_};
      case DistributionKind::TruncatedNormal: return {p1_, p2_};
    }
    return {-inf, inf};
  }

  double pdf(double x) const {
    switch (kind_) {
      case DistributionKind::Normal:
        return norm_pdf((x - mean_) / std_) / std_;
      case DistributionKind::Lognormal:
        if (!(x > 0.0)) return 0.0;
        return norm_pdf((std::log(x) - p1_) / p2_) / (x * p2_);
      case DistributionKind::Uniform:
        return (x >= p1_ && x <= p2_) ? 1.0 / (p2_ - p1_) : 0.0;
      case DistributionKind::TruncatedNormal:
        if (x < p1_ || x > p2_) return 0.0;
        return norm_pdf((x - mean_) / std_) / (std_ * trunc_mass_);
    }
    return 0.0;
  }

  double cdf(double x) const {
    switch (kind_) {
      case DistributionKind::Normal:
        return norm_cdf((x - mean_) / std_);
      case DistributionKind::Lognormal:
        if (!(x > 0.0)) return 0.0;
        return norm_cdf((std::log(x) - p1_) / p2_);
      case DistributionKind::Uniform:
        if (x <= p1_) return 0.0;
        if (x >= p2_) return 1.0;
        return (x - p1_) / (p2_ - p1_);
      case DistributionKind::TruncatedNormal: {
        if (x <= p1_) return 0.0;
        if (x >= p2_) return 1.0;
        const double p = (norm_cdf((x - mean_) / std_) - trunc_p_lo_) / trunc_mass_;
        return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
      }
    }
    return 0.0;
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw Error(ErrorCode::InvalidProbability,
                  "quantile requires p in (0,1), got " + std::to_string(p));
    }
    switch (kind_) {
      case DistributionKind::Normal:
        return mean_ + std_ * norm_quantile(p);
      case DistributionKind::Lognormal:
        return std::exp(p1_ + p2_ * norm_quantile(p));
      case DistributionKind::Uniform:
        return p1_ + p * (p2_ - p1_);
      case DistributionKind::TruncatedNormal:
        return mean_ + std_ * norm_quantile(trunc_p_lo_ + p * trunc_mass_);
    }
    return 0.0;
  }

  /// quantile(Phi(z)) with exact shortcuts where the composition collapses;
  /// this is the per-coordinate marginal map used by the Nataf transform and
  /// keeps deep-tail draws (|z| ~ 6) out of the Phi round trip.
  double quantile_from_z(double z) const {
    switch (kind_) {
      case DistributionKind::Normal:
        return mean_ + std_ * z;
      case DistributionKind::Lognormal:
        return std::exp(p1_ + p2_ * z);
      case DistributionKind::Uniform:
        return p1_ + (p2_ - p1_) * norm_cdf(z);
      case DistributionKind::TruncatedNormal: {
        // clamp into the open interval so draws beyond |z| ~ 38, where
        // norm_cdf saturates, land on the bound instead of at p = 0 or 1
        double p = trunc_p_lo_ + norm_cdf(z) * trunc_mass_;
        constexpr double tiny = 1e-310;
        if (p < tiny) p = tiny;
        if (p > 1.0 - 1e-16) p = 1.0 - 1e-16;
        return mean_ + std_ * norm_quantile(p);
      }
    }
    return 0.0;
  }

  /// Inverse of quantile_from_z. Throws DomainError off the open support.
  double z_from_x(double x) const {
    switch (kind_) {
      case DistributionKind::Normal:
        return (x - mean_) / std_;
      case DistributionKind::Lognormal:
        if (!(x > 0.0)) {
          throw Error(ErrorCode::DomainError, "lognormal support is x > 0");
        }
        return (std::log(x) - p1_) / p2_;
      case DistributionKind::Uniform:
      case DistributionKind::TruncatedNormal: {
        const auto [lo, hi] = support();
        if (!(x > lo && x < hi)) {
          throw Error(ErrorCode::DomainError, "x outside open support");
        }
        return norm_quantile(cdf(x));
      }
    }
    return 0.0;
  }

 private:
  MarginalDistribution() = default;

  DistributionKind kind_ = DistributionKind::Normal;
  double mean_ = 0.0;
  double std_ = 1.0;
  double p1_ = 0.0;  // lambda | lower bound
  double p2_ = 0.0;  // zeta   | upper bound
  double trunc_p_lo_ = 0.0;
  double trunc_mass_ = 1.0;
};

}  // namespace relsens
