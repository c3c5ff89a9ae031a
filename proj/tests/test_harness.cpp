#include <catch2/catch.hpp>

#include <cmath>
#include <sstream>

#include "relsens/harness.hpp"
#include "relsens/limit_state.hpp"

using relsens::DistributionKind;
using relsens::linear_limit_state;
using relsens::MarginalDistribution;
using relsens::NatafTransform;
using relsens::run_study;
using relsens::SamplingMethod;
using relsens::StudyConfig;
using relsens::StudySummary;

namespace {

NatafTransform standard_normals(std::size_t m) {
  std::vector<MarginalDistribution> ms(
      m, MarginalDistribution::from_moments(DistributionKind::Normal, 0.0, 1.0));
  return NatafTransform::independent(std::move(ms));
}

const std::vector<double> kA = {-0.8, -0.5, -0.3, -0.1, -0.1};

StudySummary small_study(std::size_t runs, std::uint64_t base_seed,
                         unsigned threads = 2) {
  const auto t = standard_normals(5);
  const auto ls = linear_limit_state(2.0, kA);
  StudyConfig cfg;
  cfg.plans = {{SamplingMethod::MonteCarlo, 4000}};
  cfg.delta_vars = {0.1, 0.05};
  cfg.runs = runs;
  cfg.base_seed = base_seed;
  cfg.threads = threads;
  return run_study(ls, t, cfg);
}

}  // namespace

TEST_CASE("study aggregates per-cell means and stds") {
  const auto summary = small_study(20, 100);
  REQUIRE(summary.cells.size() == 2);  // one plan x two delta values
  for (const auto& cell : summary.cells) {
    REQUIRE(cell.runs == 20);
    REQUIRE(cell.run_beta.size() == 20);
    REQUIRE(cell.mean_beta == Approx(2.0).margin(0.1));
    REQUIRE(std::isfinite(cell.std_beta));
    double sum = 0.0;
    for (double v : cell.mean_indices) sum += v;
    REQUIRE(sum == Approx(1.0).margin(1e-9));
  }
  // the two delta cells reuse the same batches, so beta draws coincide
  REQUIRE(summary.cells[0].run_beta == summary.cells[1].run_beta);
}

TEST_CASE("study is reproducible and independent of run parallelism") {
  const auto a = small_study(10, 42, 1);
  const auto b = small_study(10, 42, 3);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t c = 0; c < a.cells.size(); ++c) {
    REQUIRE(a.cells[c].run_beta == b.cells[c].run_beta);
    REQUIRE(a.cells[c].mean_beta == b.cells[c].mean_beta);
    REQUIRE(a.cells[c].std_beta == b.cells[c].std_beta);
    REQUIRE(a.cells[c].run_indices == b.cells[c].run_indices);
  }
}

TEST_CASE("per-run seeds derive from base_seed + run index") {
  const auto t = standard_normals(5);
  const auto ls = linear_limit_state(2.0, kA);
  StudyConfig cfg;
  cfg.plans = {{SamplingMethod::MonteCarlo, 2000}};
  cfg.runs = 3;
  cfg.base_seed = 7;
  cfg.threads = 1;
  const auto summary = run_study(ls, t, cfg);

  relsens::SamplingPlan plan;
  plan.n_samples = 2000;
  plan.seed = 8;  // base_seed + run 1
  plan.threads = 1;
  auto [batch, est] = relsens::run_monte_carlo(ls, t, plan);
  REQUIRE(summary.cells[0].run_beta[1] == est.beta_hat);
}

TEST_CASE("single-run studies report an undefined std marker") {
  const auto summary = small_study(1, 5);
  REQUIRE(std::isnan(summary.cells[0].std_beta));
  for (double v : summary.cells[0].std_indices) REQUIRE(std::isnan(v));
}

TEST_CASE("a degenerate run aborts the study with the run id") {
  const auto t = standard_normals(2);
  const auto ls = linear_limit_state(40.0, {1.0, 1.0});  // no failures ever
  StudyConfig cfg;
  cfg.plans = {{SamplingMethod::MonteCarlo, 100}};
  cfg.runs = 4;
  cfg.base_seed = 0;
  cfg.threads = 2;
  try {
    run_study(ls, t, cfg);
    FAIL("expected AllSafe");
  } catch (const relsens::Error& e) {
    REQUIRE(e.code() == relsens::ErrorCode::AllSafe);
    REQUIRE(std::string(e.what()).find("run 0") != std::string::npos);
  }
}

TEST_CASE("json-lines round trip preserves the summary") {
  const auto summary = small_study(5, 11);
  std::stringstream buf;
  relsens::write_study_json_lines(buf, summary);
  const auto parsed = relsens::read_study_json_lines(buf);

  REQUIRE(parsed.dim == summary.dim);
  REQUIRE(parsed.variable_names == summary.variable_names);
  REQUIRE(parsed.cells.size() == summary.cells.size());
  for (std::size_t c = 0; c < summary.cells.size(); ++c) {
    const auto& a = summary.cells[c];
    const auto& b = parsed.cells[c];
    REQUIRE(a.method == b.method);
    REQUIRE(a.n_samples == b.n_samples);
    REQUIRE(a.delta_var == b.delta_var);
    REQUIRE(a.runs == b.runs);
    REQUIRE(a.mean_beta == b.mean_beta);  // lossless double round trip
    REQUIRE(a.std_beta == b.std_beta);
    REQUIRE(a.mean_indices == b.mean_indices);
    REQUIRE(a.std_indices == b.std_indices);
    REQUIRE(a.run_beta == b.run_beta);
    REQUIRE(a.run_indices == b.run_indices);
  }
}

TEST_CASE("text and CSV outputs carry identical numbers") {
  const auto summary = small_study(5, 13);
  std::stringstream text, csv;
  relsens::write_study_text(text, summary);
  relsens::write_study_csv(csv, summary);

  // every formatted mean/std number from the text table must appear in the
  // csv aggregate rows verbatim
  const std::string csv_str = csv.str();
  for (const auto& cell : summary.cells) {
    for (double v : {cell.mean_beta, cell.std_beta}) {
      REQUIRE(csv_str.find(relsens::detail::format_number(v)) != std::string::npos);
    }
    for (const auto& vec : {cell.mean_indices, cell.std_indices}) {
      for (double v : vec) {
        REQUIRE(csv_str.find(relsens::detail::format_number(v)) != std::string::npos);
      }
    }
    const std::string text_str = text.str();
    REQUIRE(text_str.find(relsens::detail::format_number(cell.mean_beta)) !=
            std::string::npos);
  }

  // csv header names the variables
  REQUIRE(csv_str.rfind("method,N,delta_var,run,beta_hat,S_x1", 0) == 0);
}

TEST_CASE("study rejects empty configurations") {
  const auto t = standard_normals(2);
  const auto ls = linear_limit_state(1.0, {1.0, 1.0});
  StudyConfig cfg;
  cfg.runs = 0;
  REQUIRE_THROWS_AS(run_study(ls, t, cfg), relsens::Error);
  cfg.runs = 1;
  cfg.plans = {};
  REQUIRE_THROWS_AS(run_study(ls, t, cfg), relsens::Error);
}
