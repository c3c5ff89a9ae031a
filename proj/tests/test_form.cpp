#include <catch2/catch.hpp>

#include <cmath>

#include "relsens/expression.hpp"
#include "relsens/form.hpp"
#include "relsens/limit_state.hpp"
#include "relsens/transform.hpp"

using relsens::alpha_to_linear_indices;
using relsens::analytic_dbeta_dvar;
using relsens::analytic_dpf_dvar;
using relsens::DistributionKind;
using relsens::form_search;
using relsens::FormResult;
using relsens::linear_form_analytic;
using relsens::MarginalDistribution;
using relsens::NatafTransform;

namespace {

const std::vector<double> kA = {-0.8, -0.5, -0.3, -0.1, -0.1};
const std::vector<double> kOnes = {1.0, 1.0, 1.0, 1.0, 1.0};
const std::vector<double> kZeros = {0.0, 0.0, 0.0, 0.0, 0.0};

NatafTransform standard_normals(std::size_t m) {
  std::vector<MarginalDistribution> ms(
      m, MarginalDistribution::from_moments(DistributionKind::Normal, 0.0, 1.0));
  return NatafTransform::independent(std::move(ms));
}

NatafTransform bearing_model() {
  return NatafTransform::independent({
      MarginalDistribution::from_moments(DistributionKind::Normal, 200.0, 60.0),
      MarginalDistribution::from_moments(DistributionKind::Lognormal, 20.0, 4.0),
      MarginalDistribution::from_moments(DistributionKind::Lognormal, 40.0, 12.0),
      MarginalDistribution::from_moments(DistributionKind::Lognormal, 18.0, 1.8),
  });
}

}  // namespace

TEST_CASE("linear closed form: reference beta equals the threshold b") {
  for (double b : {2.0, 6.0}) {
    const auto r = linear_form_analytic(b, kA, kZeros, kOnes);
    REQUIRE(r.beta == Approx(b).epsilon(1e-12));
    REQUIRE(r.pf == Approx(relsens::norm_cdf(-b)).margin(1e-15));
  }
}

TEST_CASE("linear closed form: one-variable edge case") {
  const std::vector<double> a = {-1.0}, mu = {0.0}, sd = {1.0};
  const auto r = linear_form_analytic(0.0, a, mu, sd);
  REQUIRE(r.beta == 0.0);
  REQUIRE(r.pf == Approx(0.5).margin(1e-15));
}

TEST_CASE("linear closed form invariants: unit alpha, u* on the surface") {
  const auto r = linear_form_analytic(2.0, kA, kZeros, kOnes);
  double norm = 0.0, g_at_ustar = 2.0;
  for (std::size_t i = 0; i < 5; ++i) {
    norm += r.alpha[i] * r.alpha[i];
    g_at_ustar += kA[i] * r.u_star[i];
  }
  REQUIRE(std::sqrt(norm) == Approx(1.0).margin(1e-10));
  REQUIRE(g_at_ustar == Approx(0.0).margin(1e-12));
  REQUIRE(r.pf == Approx(relsens::norm_cdf(-r.beta)).margin(1e-12));
  // alpha proportional to a_i sigma_i
  for (std::size_t i = 1; i < 5; ++i) {
    REQUIRE(r.alpha[i] * kA[0] == Approx(r.alpha[0] * kA[i]).margin(1e-12));
  }
}

TEST_CASE("degenerate variance is rejected") {
  const std::vector<double> a = {0.0}, mu = {1.0}, sd = {1.0};
  REQUIRE_THROWS_AS(linear_form_analytic(1.0, a, mu, sd), relsens::Error);
}

TEST_CASE("alpha_to_linear_indices reproduces the linear-example reference") {
  const auto s = alpha_to_linear_indices(kA);
  const std::vector<double> want = {0.64, 0.25, 0.09, 0.01, 0.01};
  for (std::size_t i = 0; i < 5; ++i) REQUIRE(s[i] == Approx(want[i]).margin(1e-12));

  const std::vector<double> unit = {1.0, 0.0, 0.0};
  const auto s2 = alpha_to_linear_indices(unit);
  REQUIRE(s2[0] == 1.0);
  REQUIRE(s2[1] == 0.0);

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const std::vector<double> sym = {inv_sqrt2, inv_sqrt2};
  const auto s3 = alpha_to_linear_indices(sym);
  REQUIRE(s3[0] == Approx(0.5).margin(1e-15));
  REQUIRE(s3[1] == Approx(0.5).margin(1e-15));

  REQUIRE_THROWS_AS(alpha_to_linear_indices(std::vector<double>{0.0, 0.0}),
                    relsens::Error);
}

TEST_CASE("analytic dPf/dvar: proportions, zero beta, exact normalization identity") {
  const auto d = analytic_dpf_dvar(2.0, kA);
  const auto s = alpha_to_linear_indices(kA);
  double sum = 0.0;
  for (double v : d) sum += v;
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(d[i] / sum == Approx(s[i]).margin(1e-14));  // exact algebraic identity
  }

  const auto zero = analytic_dpf_dvar(0.0, kA);
  for (double v : zero) REQUIRE(v == 0.0);
}

TEST_CASE("analytic derivatives match central finite differences of the closed form") {
  // perturb sigma_i^2 by +-1e-5 around the linear example and difference
  const double h = 1e-5;
  const auto base = linear_form_analytic(2.0, kA, kZeros, kOnes);
  const auto d_beta = analytic_dbeta_dvar(base.beta, base.alpha);
  const auto d_pf = analytic_dpf_dvar(base.beta, base.alpha);

  for (std::size_t i = 0; i < 5; ++i) {
    auto sd_hi = kOnes, sd_lo = kOnes;
    sd_hi[i] = std::sqrt(1.0 + h);
    sd_lo[i] = std::sqrt(1.0 - h);
    const auto hi = linear_form_analytic(2.0, kA, kZeros, sd_hi);
    const auto lo = linear_form_analytic(2.0, kA, kZeros, sd_lo);
    const double fd_beta = (hi.beta - lo.beta) / (2.0 * h);
    const double fd_pf = (hi.pf - lo.pf) / (2.0 * h);
    REQUIRE(d_beta[i] == Approx(fd_beta).epsilon(1e-6));
    REQUIRE(d_pf[i] == Approx(fd_pf).epsilon(1e-6));
  }
}

TEST_CASE("derivative chain rule carries to non-unit input scales") {
  // with sigma_i != 1, d beta / d sigma_{X_i}^2 = (u-space derivative) / sigma_i^2
  const std::vector<double> a = {1.5, -0.7, 0.2};
  const std::vector<double> mu = {0.5, 1.0, -2.0};
  const std::vector<double> sd = {2.0, 0.5, 1.3};
  const auto base = linear_form_analytic(-4.0, a, mu, sd);
  const auto d_beta_u = analytic_dbeta_dvar(base.beta, base.alpha);

  const double h = 1e-6;
  for (std::size_t i = 0; i < 3; ++i) {
    auto sd_hi = sd, sd_lo = sd;
    sd_hi[i] = std::sqrt(sd[i] * sd[i] + h);
    sd_lo[i] = std::sqrt(sd[i] * sd[i] - h);
    const auto hi = linear_form_analytic(-4.0, a, mu, sd_hi);
    const auto lo = linear_form_analytic(-4.0, a, mu, sd_lo);
    const double fd = (hi.beta - lo.beta) / (2.0 * h);
    REQUIRE(d_beta_u[i] / (sd[i] * sd[i]) == Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("form_search solves a trivially separable case") {
  const auto ls = relsens::linear_limit_state(3.0, {-1.0, 0.0});
  const auto t = standard_normals(2);
  const auto r = form_search(ls, t);
  REQUIRE(r.converged);
  REQUIRE(r.beta == Approx(3.0).margin(1e-6));
  REQUIRE(r.u_star[0] == Approx(3.0).margin(1e-6));
  REQUIRE(r.u_star[1] == Approx(0.0).margin(1e-6));
  REQUIRE(r.alpha[0] == Approx(1.0).margin(1e-6));
  REQUIRE(r.alpha[1] == Approx(0.0).margin(1e-6));
}

TEST_CASE("form_search matches the analytic linear solution to 1e-6") {
  const auto ls = relsens::linear_limit_state(2.0, kA);
  const auto t = standard_normals(5);
  const auto search = form_search(ls, t);
  const auto closed = linear_form_analytic(2.0, kA, kZeros, kOnes);
  REQUIRE(search.beta == Approx(closed.beta).margin(1e-6));
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(search.alpha[i] == Approx(closed.alpha[i]).margin(1e-5));
    REQUIRE(search.u_star[i] == Approx(closed.u_star[i]).margin(1e-5));
  }
  REQUIRE(search.iterations <= 5);  // linear case converges immediately
}

TEST_CASE("form_search on the bearing example reproduces the frozen design point") {
  const auto ls = relsens::terzaghi_bearing(1.5, 1.0);
  const auto t = bearing_model();
  const auto r = form_search(ls, t);
  REQUIRE(r.converged);
  REQUIRE(r.beta == Approx(4.3102).margin(2e-3));

  const auto s = alpha_to_linear_indices(r.alpha);
  REQUIRE(s[0] == Approx(0.2910).margin(2e-3));
  REQUIRE(s[1] == Approx(0.2924).margin(2e-3));
  REQUIRE(s[2] == Approx(0.4090).margin(2e-3));
  REQUIRE(s[3] == Approx(0.0076).margin(2e-3));

  // design point sits on the limit state surface
  const double g_at_dp = ls(t.u_to_x(r.u_star));
  REQUIRE(std::abs(g_at_dp) < 1e-3);
  double norm = 0.0;
  for (double v : r.alpha) norm += v * v;
  REQUIRE(std::sqrt(norm) == Approx(1.0).margin(1e-10));
}

TEST_CASE("form_search rejects a model that is not finite at the median point") {
  const auto ls = relsens::parse_expression("ln(x)", {"x"});
  const auto t = standard_normals(1);  // median x = 0, ln(0) not finite
  try {
    form_search(ls, t);
    FAIL("expected NonFiniteLimitState");
  } catch (const relsens::Error& e) {
    REQUIRE(e.code() == relsens::ErrorCode::NonFiniteLimitState);
  }
}

TEST_CASE("form_search reports non-convergence instead of looping") {
  // g depends on ||u|| only through a flat plateau: gradient vanishes
  relsens::LimitState flat;
  flat.input_names = {"x"};
  flat.evaluate = [](std::span<const double>) { return 1.0; };
  const auto t = standard_normals(1);
  try {
    form_search(flat, t);
    FAIL("expected GradientFailure");
  } catch (const relsens::Error& e) {
    REQUIRE(e.code() == relsens::ErrorCode::GradientFailure);
  }

  // an iteration budget too small for the bearing problem
  const auto ls = relsens::terzaghi_bearing(1.5, 1.0);
  const auto bearing = bearing_model();
  relsens::FormOptions opts;
  opts.max_iterations = 2;
  try {
    form_search(ls, bearing, opts);
    FAIL("expected NoConvergence");
  } catch (const relsens::Error& e) {
    REQUIRE(e.code() == relsens::ErrorCode::NoConvergence);
  }
}
