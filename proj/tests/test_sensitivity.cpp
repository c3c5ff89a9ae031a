#include <catch2/catch.hpp>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "relsens/form.hpp"
#include "relsens/limit_state.hpp"
#include "relsens/sampling.hpp"
#include "relsens/sensitivity.hpp"

using relsens::DistributionKind;
using relsens::linear_limit_state;
using relsens::linear_sobol;
using relsens::MarginalDistribution;
using relsens::Matrix;
using relsens::modified_covariance;
using relsens::NatafTransform;
using relsens::reliability_sensitivities;
using relsens::SampleBatch;
using relsens::SamplingMethod;
using relsens::SamplingPlan;
using relsens::scale_factors;

namespace {

NatafTransform standard_normals(std::size_t m) {
  std::vector<MarginalDistribution> ms(
      m, MarginalDistribution::from_moments(DistributionKind::Normal, 0.0, 1.0));
  return NatafTransform::independent(std::move(ms));
}

const std::vector<double> kA = {-0.8, -0.5, -0.3, -0.1, -0.1};

SampleBatch linear_mc_batch(std::size_t n, std::uint64_t seed) {
  const auto t = standard_normals(5);
  const auto ls = linear_limit_state(2.0, kA);
  SamplingPlan plan;
  plan.method = SamplingMethod::MonteCarlo;
  plan.n_samples = n;
  plan.seed = seed;
  plan.threads = 1;
  return run_monte_carlo(ls, t, plan).first;
}

}  // namespace

TEST_CASE("scale factors are a reciprocal pair") {
  auto [dp, dm] = scale_factors(0.1);
  REQUIRE(dp == Approx(1.0488088481701516).epsilon(1e-15));
  REQUIRE(dm == Approx(0.95346258924559).epsilon(1e-12));
  REQUIRE(dp * dm == Approx(1.0).margin(1e-15));
  REQUIRE(dp * dp == Approx(1.1).margin(1e-15));

  auto [dp2, dm2] = scale_factors(0.01);
  REQUIRE(dp2 == Approx(1.0049875621120890).epsilon(1e-13));

  for (double dv : {0.01, 0.05, 0.1, 0.2, 1.7}) {
    auto [p, m] = scale_factors(dv);
    REQUIRE(p * m == Approx(1.0).margin(2e-16));
  }
  REQUIRE_THROWS_AS(scale_factors(0.0), relsens::Error);
  REQUIRE_THROWS_AS(scale_factors(-0.1), relsens::Error);
}

TEST_CASE("modified covariance scales exactly one row and column") {
  const Matrix c0 = Matrix::identity(3);
  const auto m = modified_covariance(c0, 0, std::sqrt(1.1));
  REQUIRE(m(0, 0) == Approx(1.1).margin(1e-15));
  REQUIRE(m(1, 1) == 1.0);
  REQUIRE(m(0, 1) == 0.0);

  // d = 1 leaves the matrix untouched
  REQUIRE(modified_covariance(c0, 1, 1.0) == c0);

  Matrix corr = Matrix::identity(2);
  corr(0, 1) = corr(1, 0) = 0.5;
  const auto scaled = modified_covariance(corr, 0, 2.0);
  REQUIRE(scaled(0, 0) == 4.0);
  REQUIRE(scaled(0, 1) == 1.0);
  REQUIRE(scaled(1, 0) == 1.0);
  REQUIRE(scaled(1, 1) == 1.0);
#ifdef RELSENS_HAVE_EIGEN
  for (double ev : oracle::sym_eigenvalues(scaled)) REQUIRE(ev > 0.0);
#endif

  REQUIRE_THROWS_AS(modified_covariance(c0, 3, 1.5), relsens::Error);
  REQUIRE_THROWS_AS(modified_covariance(c0, 0, 0.0), relsens::Error);
}

TEST_CASE("modified covariance equals the D C D product exactly") {
  Matrix c = Matrix::identity(4);
  c(0, 1) = c(1, 0) = 0.3;
  c(1, 2) = c(2, 1) = -0.2;
  c(0, 3) = c(3, 0) = 0.1;
  const double d = 1.37;
  const std::size_t k = 1;
  const auto got = modified_covariance(c, k, d);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double di = i == k ? d : 1.0;
      const double dj = j == k ? d : 1.0;
      REQUIRE(got(i, j) == di * c(i, j) * dj);  // exact product, no drift
    }
  }
}

TEST_CASE("single-variable batch normalizes to index one") {
  const auto t = standard_normals(1);
  const auto ls = linear_limit_state(0.5, {-1.0});
  SamplingPlan plan;
  plan.n_samples = 2000;
  plan.seed = 21;
  plan.threads = 1;
  auto [batch, est] = run_monte_carlo(ls, t, plan);
  REQUIRE(est.n_failures > 0);
  const auto sens = reliability_sensitivities(batch, 0.1);
  REQUIRE(sens.indices.size() == 1);
  REQUIRE(sens.indices[0] == 1.0);
  REQUIRE_FALSE(sens.all_safe);
}

TEST_CASE("all-safe batches are flagged, not normalized") {
  const auto t = standard_normals(2);
  const auto ls = linear_limit_state(50.0, {1.0, 1.0});
  SamplingPlan plan;
  plan.n_samples = 500;
  plan.seed = 4;
  plan.threads = 1;
  auto [batch, est] = run_monte_carlo(ls, t, plan);
  const auto sens = reliability_sensitivities(batch, 0.1);
  REQUIRE(sens.all_safe);
  for (double v : sens.dpf_dvar) REQUIRE(v == 0.0);
  for (double v : sens.indices) REQUIRE(std::isnan(v));
}

TEST_CASE("empty batches are rejected") {
  SampleBatch batch;
  REQUIRE_THROWS_AS(reliability_sensitivities(batch, 0.1), relsens::Error);
}

TEST_CASE("indices sum to one whenever the derivative sum is positive") {
  const auto batch = linear_mc_batch(20000, 8);
  for (double dv : {0.01, 0.1, 0.2}) {
    const auto sens = reliability_sensitivities(batch, dv);
    REQUIRE_FALSE(sens.all_safe);
    const double sum = std::accumulate(sens.indices.begin(), sens.indices.end(), 0.0);
    REQUIRE(sum == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("estimated indices approach the analytic linear reference") {
  const auto batch = linear_mc_batch(100000, 12);
  const auto sens = reliability_sensitivities(batch, 0.1);
  const std::vector<double> want = {0.64, 0.25, 0.09, 0.01, 0.01};
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(sens.indices[i] == Approx(want[i]).margin(0.04));
  }
}

TEST_CASE("derivative estimates match a direct per-sample recomputation") {
  // small batch, independent recomputation of the central-difference sum with
  // explicit diagonal densities
  const auto batch = linear_mc_batch(500, 3);
  const double dv = 0.1;
  const auto sens = reliability_sensitivities(batch, dv);
  const auto [dp, dm] = scale_factors(dv);
  for (std::size_t k = 0; k < 5; ++k) {
    double acc = 0.0;
    for (std::size_t s = 0; s < batch.n_samples; ++s) {
      if (batch.g[s] > 0.0) continue;
      const auto u = batch.u_row(s);
      const auto ratio = [&](double d) {
        // N(0, diag(1,..,d^2,..,1)) / N(0, I) for independent base
        return std::exp(-0.5 * u[k] * u[k] * (1.0 / (d * d) - 1.0)) / d;
      };
      acc += ratio(dp) - ratio(dm);
    }
    acc /= 2.0 * dv * static_cast<double>(batch.n_samples);
    REQUIRE(sens.dpf_dvar[k] == Approx(acc).margin(1e-14));
  }
}

TEST_CASE("perturbed densities integrate to one against the batch (mean weight)") {
  const auto batch = linear_mc_batch(40000, 31);
  const auto [dp, dm] = scale_factors(0.1);
  for (std::size_t k = 0; k < 5; ++k) {
    for (double d : {dp, dm}) {
      const auto cov = modified_covariance(batch.base_cov, k, d);
      const auto chol = relsens::CholeskyFactor::compute(cov);
      double mean_w = 0.0;
      for (std::size_t s = 0; s < batch.n_samples; ++s) {
        mean_w += std::exp(relsens::joint_normal_log_pdf(chol, batch.u_row(s)) -
                           batch.log_fs[s]);
      }
      mean_w /= static_cast<double>(batch.n_samples);
      REQUIRE(std::abs(mean_w - 1.0) < 4.0 / std::sqrt(40000.0));
    }
  }
}

TEST_CASE("permuting batch columns permutes the indices exactly") {
  const auto batch = linear_mc_batch(5000, 77);
  const auto sens = reliability_sensitivities(batch, 0.1);

  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  SampleBatch shuffled = batch;
  for (std::size_t s = 0; s < batch.n_samples; ++s) {
    for (std::size_t j = 0; j < 5; ++j) {
      shuffled.u[s * 5 + j] = batch.u[s * 5 + perm[j]];
    }
  }
  // identity base covariance is permutation invariant; the quadratic-form
  // summation order changes, so equality holds to rounding
  const auto sens_p = reliability_sensitivities(shuffled, 0.1);
  for (std::size_t j = 0; j < 5; ++j) {
    REQUIRE(sens_p.indices[j] == Approx(sens.indices[perm[j]]).epsilon(1e-13));
  }
}

TEST_CASE("importance sampling batch uses the sampling density as denominator") {
  const auto t = standard_normals(5);
  const auto ls = linear_limit_state(2.0, kA);
  const auto form = relsens::linear_form_analytic(
      2.0, kA, std::vector<double>(5, 0.0), std::vector<double>(5, 1.0));
  SamplingPlan plan;
  plan.method = SamplingMethod::ImportanceSampling;
  plan.n_samples = 20000;
  plan.seed = 9;
  plan.threads = 1;
  plan.is_center = form.u_star;
  auto [batch, est] = run_importance_sampling(ls, t, plan);
  const auto sens = reliability_sensitivities(batch, 0.1);
  const std::vector<double> want = {0.64, 0.25, 0.09, 0.01, 0.01};
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(sens.indices[i] == Approx(want[i]).margin(0.03));
  }
}

TEST_CASE("negative derivative estimates are preserved and flagged") {
  // tiny batch at a moderate failure level: component noise regularly drives
  // small coefficients negative; scan a few seeds for a deterministic witness
  bool found = false;
  for (std::uint64_t seed = 0; seed < 40 && !found; ++seed) {
    const auto batch = linear_mc_batch(300, seed);
    std::size_t failures = 0;
    for (double g : batch.g) failures += g <= 0.0;
    if (failures == 0) continue;
    const auto sens = reliability_sensitivities(batch, 0.1);
    double min_d = 0.0;
    for (double v : sens.dpf_dvar) min_d = std::min(min_d, v);
    if (min_d < 0.0) {
      REQUIRE(sens.has_negative);
      const double sum =
          std::accumulate(sens.dpf_dvar.begin(), sens.dpf_dvar.end(), 0.0);
      for (std::size_t i = 0; i < 5; ++i) {
        REQUIRE(sens.indices[i] == Approx(sens.dpf_dvar[i] / sum).margin(1e-15));
      }
      found = true;
    }
  }
  REQUIRE(found);
}

TEST_CASE("linear sobol closed form") {
  const std::vector<double> ones(5, 1.0);
  const auto s = linear_sobol(kA, ones);
  const std::vector<double> want = {0.64, 0.25, 0.09, 0.01, 0.01};
  for (std::size_t i = 0; i < 5; ++i) REQUIRE(s[i] == Approx(want[i]).margin(1e-12));
  REQUIRE(std::accumulate(s.begin(), s.end(), 0.0) == Approx(1.0).margin(1e-15));

  const std::vector<double> a = {1.0, 1.0};
  const std::vector<double> sd = {1.0, 2.0};
  const auto s2 = linear_sobol(a, sd);
  REQUIRE(s2[0] == Approx(0.2).margin(1e-15));
  REQUIRE(s2[1] == Approx(0.8).margin(1e-15));

  // identity with the alpha route: alpha_i = a_i sigma_i
  std::vector<double> alpha(2);
  for (std::size_t i = 0; i < 2; ++i) alpha[i] = a[i] * sd[i];
  const auto s3 = relsens::alpha_to_linear_indices(alpha);
  REQUIRE(s3[0] == Approx(s2[0]).margin(1e-15));
  REQUIRE(s3[1] == Approx(s2[1]).margin(1e-15));

  REQUIRE_THROWS_AS(linear_sobol(std::vector<double>{0.0}, std::vector<double>{1.0}),
                    relsens::Error);
}
