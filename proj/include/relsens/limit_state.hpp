#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relsens/error.hpp"

namespace relsens {

/// Scalar limit-state function g(x) over physical-space inputs.
/// Failure domain is {x : g(x) <= 0}.
struct LimitState {
  std::function<double(std::span<const double>)> evaluate;
  std::vector<std::string> input_names;
  /// (a0, a) when the function is known to be linear; lets FORM use the
  /// closed-form solution and tests cross-check the expression path.
  std::optional<std::pair<double, std::vector<double>>> linear_coefficients;

  std::size_t dim() const noexcept { return input_names.size(); }

  double operator()(std::span<const double> x) const { return evaluate(x); }
};

/// 1 iff g <= 0 (failure), per the indicator convention that the boundary
/// belongs to the failure domain.
inline int indicator(double g_value) {
  if (!std::isfinite(g_value)) {
    throw Error(ErrorCode::NonFiniteValue, "limit state value is not finite");
  }
  return g_value <= 0.0 ? 1 : 0;
}

inline std::vector<std::string> default_names(std::size_t m) {
  std::vector<std::string> names(m);
  for (std::size_t i = 0; i < m; ++i) names[i] = "x" + std::to_string(i + 1);
  return names;
}

/// g(x) = a0 + sum a_i x_i
inline LimitState linear_limit_state(double a0, std::vector<double> a,
                                     std::vector<std::string> names = {}) {
  if (a.empty()) {
    throw Error(ErrorCode::EmptyCoefficients, "linear limit state needs coefficients");
  }
  if (names.empty()) names = default_names(a.size());
  if (names.size() != a.size()) {
    throw Error(ErrorCode::InvalidArgument, "name/coefficient count mismatch");
  }
  LimitState ls;
  ls.input_names = std::move(names);
  ls.linear_coefficients = {a0, a};
  ls.evaluate = [a0, a = std::move(a)](std::span<const double> x) {
    double g = a0;
    for (std::size_t i = 0; i < a.size(); ++i) g += a[i] * x[i];
    return g;
  };
  return ls;
}

struct BearingFactors {
  double n_d0;
  double n_b0;
  double n_c0;
};

/// Terzaghi bearing capacity factors; phi in radians, phi > 0
/// (N_c0 is singular at phi = 0).
inline BearingFactors bearing_factors(double phi_rad) {
  if (!(phi_rad > 0.0)) {
    throw Error(ErrorCode::DomainError, "friction angle must be positive");
  }
  const double t = std::tan(phi_rad);
  const double n_d0 = std::pow(std::tan(0.78539816339744830962 + 0.5 * phi_rad), 2) *
                      std::exp(3.14159265358979323846 * t);
  return {n_d0, (n_d0 - 1.0) * t, (n_d0 - 1.0) / t};
}

/// Bearing failure of a shallow strip foundation:
///   g = R_sp - N_load,
///   R_sp = b (gamma_s d N_d0 + gamma_s b N_b0 + c N_c0)
/// over inputs (N_load [kN], phi [degrees], c [kN/m^2], gamma_s [kN/m^3]).
/// The friction angle arrives in degrees and is converted internally.
inline LimitState terzaghi_bearing(double footing_width, double footing_depth,
                                   std::vector<std::string> names = {}) {
  if (!(footing_width > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "footing width must be > 0");
  }
  if (!(footing_depth >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "footing depth must be >= 0");
  }
  if (names.empty()) names = {"N", "phi", "c", "gamma_s"};
  if (names.size() != 4) {
    throw Error(ErrorCode::InvalidArgument, "bearing limit state has 4 inputs");
  }
  LimitState ls;
  ls.input_names = std::move(names);
  ls.evaluate = [b = footing_width, d = footing_depth](std::span<const double> x) {
    const double n_load = x[0];
    const double phi_rad = x[1] * 0.017453292519943295;  // degrees in
    const double cohesion = x[2];
    const double soil_weight = x[3];
    if (!(phi_rad > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const auto [n_d0, n_b0, n_c0] = bearing_factors(phi_rad);
    const double r_sp =
        b * (soil_weight * d * n_d0 + soil_weight * b * n_b0 + cohesion * n_c0);
    return r_sp - n_load;
  };
  return ls;
}

}  // namespace relsens
