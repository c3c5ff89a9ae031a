#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "relsens/error.hpp"
#include "relsens/sampling.hpp"
#include "relsens/sensitivity.hpp"

namespace relsens {

struct PlanTemplate {
  SamplingMethod method = SamplingMethod::MonteCarlo;
  std::size_t n_samples = 1000;
};

/// Repeated-run study over a grid of sampling plans and derivative steps.
/// Run r uses seed base_seed + r, so every table is reproducible.
struct StudyConfig {
  std::vector<PlanTemplate> plans;
  std::vector<double> delta_vars = {0.1};
  std::size_t runs = 100;
  std::uint64_t base_seed = 0;
  std::optional<std::vector<double>> is_center;
  std::optional<Matrix> is_cov;
  unsigned threads = 0;  // parallelism across runs
};

struct StudyCell {
  SamplingMethod method = SamplingMethod::MonteCarlo;
  std::size_t n_samples = 0;
  double delta_var = 0.0;
  std::size_t runs = 0;
  std::vector<double> run_beta;
  std::vector<std::vector<double>> run_indices;
  double mean_beta = 0.0;
  double std_beta = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> mean_indices;
  std::vector<double> std_indices;  // NaN entries when runs == 1
  double wall_seconds = 0.0;        // shared across cells of the same plan
};

struct StudySummary {
  std::size_t dim = 0;
  std::vector<std::string> variable_names;
  std::vector<StudyCell> cells;
};

namespace detail {

inline std::pair<double, double> mean_and_std(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace detail

/// Executes runs x plans, reusing each run's batch across all delta_var
/// values. A degenerate or failed run aborts the study with the run id; runs
/// are never silently dropped.
inline StudySummary run_study(const LimitState& ls, const NatafTransform& t,
                              const StudyConfig& cfg) {
  if (cfg.runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  if (cfg.plans.empty()) throw Error(ErrorCode::InvalidArgument, "no sampling plans");
  if (cfg.delta_vars.empty()) throw Error(ErrorCode::InvalidArgument, "no delta_var values");

  StudySummary summary;
  summary.dim = t.dim();
  summary.variable_names = ls.input_names;

  for (const PlanTemplate& tpl : cfg.plans) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t n_delta = cfg.delta_vars.size();

    std::vector<double> betas(cfg.runs);
    // indices_by_delta[d][r] is the index vector of run r at delta_vars[d]
    std::vector<std::vector<std::vector<double>>> indices_by_delta(
        n_delta, std::vector<std::vector<double>>(cfg.runs));
    std::vector<std::exception_ptr> failures(cfg.runs);

    const unsigned workers = detail::resolve_threads(cfg.threads, cfg.runs);
    detail::parallel_chunks(cfg.runs, workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        try {
          SamplingPlan plan;
          plan.method = tpl.method;
          plan.n_samples = tpl.n_samples;
          plan.seed = cfg.base_seed + r;
          plan.is_center = cfg.is_center;
          plan.is_cov = cfg.is_cov;
          plan.threads = 1;  // study-level parallelism only

          auto [batch, est] =
              tpl.method == SamplingMethod::MonteCarlo
                  ? run_monte_carlo(ls, t, plan)
                  : run_importance_sampling(ls, t, plan);
          if (est.degenerate) {
            throw Error(est.n_failures == 0 ? ErrorCode::AllSafe : ErrorCode::OutOfRange,
                        "degenerate failure probability estimate");
          }
          betas[r] = est.beta_hat;
          for (std::size_t d = 0; d < n_delta; ++d) {
            SensitivityResult sens =
                reliability_sensitivities(batch, cfg.delta_vars[d], 1);
            if (sens.all_safe || sens.sum_not_positive) {
              throw Error(ErrorCode::AllSafe, "sensitivity indices undefined");
            }
            indices_by_delta[d][r] = std::move(sens.indices);
          }
        } catch (...) {
          failures[r] = std::current_exception();
        }
      }
    });

    for (std::size_t r = 0; r < cfg.runs; ++r) {
      if (failures[r]) {
        try {
          std::rethrow_exception(failures[r]);
        } catch (const Error& e) {
          throw Error(e.code(), "run " + std::to_string(r) + " (seed " +
                                    std::to_string(cfg.base_seed + r) +
                                    "): " + e.what());
        }
      }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();

    for (std::size_t d = 0; d < n_delta; ++d) {
      StudyCell cell;
      cell.method = tpl.method;
      cell.n_samples = tpl.n_samples;
      cell.delta_var = cfg.delta_vars[d];
      cell.runs = cfg.runs;
      cell.run_beta = betas;
      cell.run_indices = indices_by_delta[d];
      std::tie(cell.mean_beta, cell.std_beta) = detail::mean_and_std(betas);
      cell.mean_indices.resize(summary.dim);
      cell.std_indices.resize(summary.dim);
      std::vector<double> column(cfg.runs);
      for (std::size_t j = 0; j < summary.dim; ++j) {
        for (std::size_t r = 0; r < cfg.runs; ++r) column[r] = cell.run_indices[r][j];
        std::tie(cell.mean_indices[j], cell.std_indices[j]) =
            detail::mean_and_std(column);
      }
      cell.wall_seconds = wall;
      summary.cells.push_back(std::move(cell));
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// rendering

namespace detail {

/// All human-readable output goes through one 6-significant-digit format so
/// text and CSV carry identical numbers.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "-";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

inline void write_study_text(std::ostream& out, const StudySummary& summary) {
  for (const StudyCell& cell : summary.cells) {
    out << "method=" << method_name(cell.method) << " N=" << cell.n_samples
        << " delta_var=" << detail::format_number(cell.delta_var)
        << " runs=" << cell.runs << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "  %-14s %12s", "", "beta");
    out << buf;
    for (std::size_t j = 0; j < summary.dim; ++j) {
      const std::string head = "S_" + (j < summary.variable_names.size()
                                           ? summary.variable_names[j]
                                           : std::to_string(j + 1));
      std::snprintf(buf, sizeof(buf), " %12s", head.c_str());
      out << buf;
    }
    out << "\n";
    const auto row = [&](const char* label, double beta,
                         std::span<const double> values) {
      std::snprintf(buf, sizeof(buf), "  %-14s %12s", label,
                    detail::format_number(beta).c_str());
      out << buf;
      for (double v : values) {
        std::snprintf(buf, sizeof(buf), " %12s", detail::format_number(v).c_str());
        out << buf;
      }
      out << "\n";
    };
    row("Mean values", cell.mean_beta, cell.mean_indices);
    row("Std deviation", cell.std_beta, cell.std_indices);
    out << "\n";
  }
}

/// CSV rows: method,N,delta_var,run,beta_hat,S_1..S_m. Per-run rows first,
/// then "mean" and "std" aggregate rows carrying the same numbers as the
/// text table.
inline void write_study_csv(std::ostream& out, const StudySummary& summary,
                            bool include_runs = true) {
  out << "method,N,delta_var,run,beta_hat";
  for (std::size_t j = 0; j < summary.dim; ++j) {
    out << ",S_" << (j < summary.variable_names.size() ? summary.variable_names[j]
                                                       : std::to_string(j + 1));
  }
  out << "\n";
  for (const StudyCell& cell : summary.cells) {
    const auto prefix = [&](std::ostream& o) {
      o << method_name(cell.method) << "," << cell.n_samples << ","
        << detail::format_number(cell.delta_var) << ",";
    };
    if (include_runs) {
      for (std::size_t r = 0; r < cell.runs; ++r) {
        prefix(out);
        out << r << "," << detail::format_number(cell.run_beta[r]);
        for (double v : cell.run_indices[r]) out << "," << detail::format_number(v);
        out << "\n";
      }
    }
    prefix(out);
    out << "mean," << detail::format_number(cell.mean_beta);
    for (double v : cell.mean_indices) out << "," << detail::format_number(v);
    out << "\n";
    prefix(out);
    out << "std," << detail::format_number(cell.std_beta);
    for (double v : cell.std_indices) out << "," << detail::format_number(v);
    out << "\n";
  }
}

namespace detail {

inline nlohmann::json json_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double json_to_double(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

}  // namespace detail

/// One JSON object per study cell; parses back losslessly with
/// read_study_json_lines.
inline void write_study_json_lines(std::ostream& out, const StudySummary& summary) {
  for (const StudyCell& cell : summary.cells) {
    nlohmann::json j;
    j["method"] = method_name(cell.method);
    j["n_samples"] = cell.n_samples;
    j["delta_var"] = cell.delta_var;
    j["runs"] = cell.runs;
    j["variables"] = summary.variable_names;
    j["mean_beta"] = cell.mean_beta;
    j["std_beta"] = detail::json_or_null(cell.std_beta);
    j["mean_indices"] = cell.mean_indices;
    nlohmann::json stds = nlohmann::json::array();
    for (double v : cell.std_indices) stds.push_back(detail::json_or_null(v));
    j["std_indices"] = stds;
    j["run_beta"] = cell.run_beta;
    j["run_indices"] = cell.run_indices;
    j["wall_seconds"] = cell.wall_seconds;
    out << j.dump() << "\n";
  }
}

inline StudySummary read_study_json_lines(std::istream& in) {
  StudySummary summary;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    StudyCell cell;
    cell.method = j.at("method").get<std::string>() == "mcs"
                      ? SamplingMethod::MonteCarlo
                      : SamplingMethod::ImportanceSampling;
    cell.n_samples = j.at("n_samples").get<std::size_t>();
    cell.delta_var = j.at("delta_var").get<double>();
    cell.runs = j.at("runs").get<std::size_t>();
    cell.mean_beta = j.at("mean_beta").get<double>();
    cell.std_beta = detail::json_to_double(j.at("std_beta"));
    cell.mean_indices = j.at("mean_indices").get<std::vector<double>>();
    for (const auto& v : j.at("std_indices")) {
      cell.std_indices.push_back(detail::json_to_double(v));
    }
    cell.run_beta = j.at("run_beta").get<std::vector<double>>();
    cell.run_indices = j.at("run_indices").get<std::vector<std::vector<double>>>();
    cell.wall_seconds = j.at("wall_seconds").get<double>();
    summary.variable_names = j.at("variables").get<std::vector<std::string>>();
    summary.dim = summary.variable_names.size();
    summary.cells.push_back(std::move(cell));
  }
  return summary;
}

}  // namespace relsens
