#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "relsens/error.hpp"
#include "relsens/limit_state.hpp"
#include "relsens/normal.hpp"
#include "relsens/transform.hpp"

namespace relsens {

struct FormResult {
  double beta = 0.0;
  double pf = 0.0;
  std::vector<double> u_star;  // design point, independent standard normal space
  std::vector<double> alpha;   // unit vector, u_star = beta * alpha
  bool converged = false;
  int iterations = 0;
};

struct FormOptions {
  int max_iterations = 100;
  double tol_u = 1e-6;       // ||u_{k+1} - u_k||
  double tol_g_rel = 1e-6;   // |g| relative to |g| at the u-space origin
  double fd_step = 1e-5;     // central-difference step in u-space
};

/// Closed-form FORM solution for g = a0 + sum a_i X_i with independent
/// normal inputs: beta = (a0 + sum a_i mu_i) / sqrt(sum a_i^2 sigma_i^2).
/// alpha is proportional to a_i sigma_i, oriented so that u* = beta alpha
/// lies on g = 0.
inline FormResult linear_form_analytic(double a0, std::span<const double> a,
                                       std::span<const double> means,
                                       std::span<const double> stds) {
  const std::size_t m = a.size();
  if (m == 0) throw Error(ErrorCode::EmptyCoefficients, "no coefficients");
  if (means.size() != m || stds.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "size mismatch");
  }
  double g_mean = a0;
  double var_g = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    g_mean += a[i] * means[i];
    var_g += a[i] * a[i] * stds[i] * stds[i];
  }
  if (!(var_g > 0.0)) {
    throw Error(ErrorCode::DegenerateVariance, "limit state variance is zero");
  }
  const double sd_g = std::sqrt(var_g);

  FormResult r;
  r.beta = g_mean / sd_g;
  r.pf = norm_cdf(-r.beta);
  r.alpha.resize(m);
  r.u_star.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    r.alpha[i] = -a[i] * stds[i] / sd_g;
    r.u_star[i] = r.beta * r.alpha[i];
  }
  r.converged = true;
  r.iterations = 0;
  return r;
}

/// alpha_i^2 / sum alpha_j^2; for a linear limit state these are the
/// variance-based first-order indices.
inline std::vector<double> alpha_to_linear_indices(std::span<const double> alpha) {
  double sum = 0.0;
  for (double v : alpha) sum += v * v;
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::ZeroVector, "alpha vector is zero");
  }
  std::vector<double> s(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) s[i] = alpha[i] * alpha[i] / sum;
  return s;
}

/// Analytic dPf / d(sigma^2_{U_i}) for the linear case:
///   (beta / 2) phi(beta) alpha_i^2 / sum alpha_j^2.
/// Normalizing these reproduces alpha_to_linear_indices exactly.
inline std::vector<double> analytic_dpf_dvar(double beta,
                                             std::span<const double> alpha) {
  double sum = 0.0;
  for (double v : alpha) sum += v * v;
  if (!(sum > 0.0)) throw Error(ErrorCode::ZeroVector, "alpha vector is zero");
  const double factor = 0.5 * beta * norm_pdf(beta);
  std::vector<double> d(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    d[i] = factor * alpha[i] * alpha[i] / sum;
  }
  return d;
}

/// Analytic dbeta / d(sigma^2_{U_i}) = -(beta / 2) alpha_i^2 / sum alpha_j^2.
inline std::vector<double> analytic_dbeta_dvar(double beta,
                                               std::span<const double> alpha) {
  double sum = 0.0;
  for (double v : alpha) sum += v * v;
  if (!(sum > 0.0)) throw Error(ErrorCode::ZeroVector, "alpha vector is zero");
  std::vector<double> d(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    d[i] = -0.5 * beta * alpha[i] * alpha[i] / sum;
  }
  return d;
}

namespace detail {

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

/// Design-point search: improved HLRF iteration with a merit-function line
/// search. The gradient is taken by central finite differences in u-space.
/// beta is signed positive when the u-space origin lies in the safe domain.
inline FormResult form_search(const LimitState& ls, const NatafTransform& t,
                              const FormOptions& opts = {}) {
  const std::size_t m = t.dim();
  if (ls.dim() != m) {
    throw Error(ErrorCode::InvalidArgument, "limit state / transform dimension mismatch");
  }

  const auto g_of_u = [&](std::span<const double> u) {
    return ls.evaluate(t.u_to_x(u));
  };

  std::vector<double> u(m, 0.0);
  const double g_origin = g_of_u(u);
  if (!std::isfinite(g_origin)) {
    throw Error(ErrorCode::NonFiniteLimitState, "g is not finite at the median point");
  }
  const double g_scale = std::max(std::abs(g_origin), 1e-12);

  std::vector<double> grad(m), u_next(m), u_trial(m), probe(m);
  const auto gradient_at = [&](std::span<const double> at) {
    for (std::size_t i = 0; i < m; ++i) {
      probe.assign(at.begin(), at.end());
      probe[i] = at[i] + opts.fd_step;
      const double g_hi = g_of_u(probe);
      probe[i] = at[i] - opts.fd_step;
      const double g_lo = g_of_u(probe);
      grad[i] = (g_hi - g_lo) / (2.0 * opts.fd_step);
      if (!std::isfinite(grad[i])) {
        throw Error(ErrorCode::GradientFailure,
                    "non-finite gradient component " + std::to_string(i));
      }
    }
  };

  double g_u = g_origin;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    gradient_at(u);
    double grad_sq = 0.0, grad_dot_u = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      grad_sq += grad[i] * grad[i];
      grad_dot_u += grad[i] * u[i];
    }
    if (!(grad_sq > 0.0)) {
      throw Error(ErrorCode::GradientFailure, "gradient vanished");
    }

    // HLRF step target
    const double scale = (grad_dot_u - g_u) / grad_sq;
    for (std::size_t i = 0; i < m; ++i) u_next[i] = scale * grad[i];

    // merit m(u) = ||u||^2/2 + c |g(u)| with c > ||u|| / ||grad||
    const double u_norm = detail::norm2(u);
    const double merit_c = 2.0 * u_norm / std::sqrt(grad_sq) + 10.0 / g_scale;
    const auto merit = [&](std::span<const double> v, double g_v) {
      double s = 0.0;
      for (double x : v) s += x * x;
      return 0.5 * s + merit_c * std::abs(g_v);
    };

    const double merit_0 = merit(u, g_u);
    double lambda = 1.0;
    double g_trial = 0.0;
    for (int halving = 0; halving < 24; ++halving) {
      for (std::size_t i = 0; i < m; ++i) {
        u_trial[i] = u[i] + lambda * (u_next[i] - u[i]);
      }
      g_trial = g_of_u(u_trial);
      if (std::isfinite(g_trial) && merit(u_trial, g_trial) < merit_0) break;
      lambda *= 0.5;
    }

    double step_norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = u_trial[i] - u[i];
      step_norm += d * d;
    }
    step_norm = std::sqrt(step_norm);
    u = u_trial;
    g_u = g_trial;

    if (step_norm < opts.tol_u && std::abs(g_u) < opts.tol_g_rel * g_scale) {
      ++iter;
      break;
    }
  }

  if (iter >= opts.max_iterations) {
    throw Error(ErrorCode::NoConvergence,
                "design point search did not converge in " +
                    std::to_string(opts.max_iterations) + " iterations");
  }

  gradient_at(u);
  const double grad_norm = detail::norm2(grad);
  if (!(grad_norm > 0.0)) {
    throw Error(ErrorCode::GradientFailure, "gradient vanished at the design point");
  }

  FormResult r;
  r.u_star = u;
  r.alpha.resize(m);
  for (std::size_t i = 0; i < m; ++i) r.alpha[i] = -grad[i] / grad_norm;
  const double sign = g_origin >= 0.0 ? 1.0 : -1.0;
  r.beta = sign * detail::norm2(u);
  r.pf = norm_cdf(-r.beta);
  r.converged = true;
  r.iterations = iter;
  return r;
}

}  // namespace relsens
