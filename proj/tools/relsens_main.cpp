// Command-line driver: FORM, Monte Carlo, importance sampling and
// repeated-run studies over a JSON model configuration.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 64 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relsens/relsens.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUsage = 64;

struct CommonOptions {
  std::string config_path;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta_var;
  std::optional<std::size_t> runs;
  std::string output_path;
  std::string format = "text";
  std::string export_samples_path;
  unsigned threads = 0;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts, bool sampling_cmd) {
  cmd->add_option("--config", opts.config_path, "model configuration file (JSON)")
      ->required();
  cmd->add_option("--seed", opts.seed, "override analysis.seed");
  cmd->add_option("--output", opts.output_path, "write results to a file instead of stdout");
  cmd->add_option("--format", opts.format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json-lines"}));
  cmd->add_option("--threads", opts.threads,
                  "worker threads (0 = RELSENS_THREADS or hardware)");
  if (sampling_cmd) {
    cmd->add_option("--samples", opts.samples, "override analysis.n_samples");
    cmd->add_option("--delta-var", opts.delta_var, "override analysis.delta_var");
    cmd->add_option("--runs", opts.runs, "override analysis.runs (study)");
    cmd->add_option("--export-samples", opts.export_samples_path,
                    "write per-sample (u, g, weight) CSV to this path");
  }
}

class OutputStream {
 public:
  explicit OutputStream(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) {
        throw relsens::Error(relsens::ErrorCode::InvalidArgument,
                             "cannot open output file '" + path + "'");
      }
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> resolve_is_center(const relsens::AnalysisConfig& cfg,
                                      const relsens::LimitState& ls,
                                      const relsens::NatafTransform& transform) {
  if (const auto* v = std::get_if<std::vector<double>>(&cfg.analysis.is_center)) {
    return *v;
  }
  const relsens::FormResult form = relsens::form_search(ls, transform);
  if (transform.independent_inputs()) return form.u_star;
  std::vector<double> center(transform.dim());
  transform.chol_u().multiply_lower(form.u_star, center);
  return center;
}

relsens::StudySummary single_run_summary(const relsens::SampleBatch& batch,
                                         const relsens::PfEstimate& est,
                                         const std::vector<double>& delta_vars,
                                         const std::vector<std::string>& names,
                                         std::vector<std::string>& warnings) {
  relsens::StudySummary summary;
  summary.dim = batch.dim;
  summary.variable_names = names;
  for (double delta : delta_vars) {
    const relsens::SensitivityResult sens =
        relsens::reliability_sensitivities(batch, delta, batch.plan.threads);
    if (sens.all_safe) {
      throw relsens::Error(relsens::ErrorCode::AllSafe,
                           "no failure samples; sensitivity indices undefined");
    }
    if (sens.has_negative) {
      warnings.push_back("delta_var " + relsens::detail::format_number(delta) +
                         ": at least one derivative estimate is negative "
                         "(sampling noise); indices keep their signs");
    }
    if (sens.sum_not_positive) {
      warnings.push_back("delta_var " + relsens::detail::format_number(delta) +
                         ": derivative sum is not positive; indices are not "
                         "variance fractions");
    }
    relsens::StudyCell cell;
    cell.method = batch.plan.method;
    cell.n_samples = batch.n_samples;
    cell.delta_var = delta;
    cell.runs = 1;
    cell.run_beta = {est.beta_hat};
    cell.run_indices = {sens.indices};
    cell.mean_beta = est.beta_hat;
    cell.mean_indices = sens.indices;
    cell.std_indices.assign(batch.dim, std::numeric_limits<double>::quiet_NaN());
    summary.cells.push_back(std::move(cell));
  }
  return summary;
}

void write_summary(std::ostream& out, const relsens::StudySummary& summary,
                   const std::string& format) {
  if (format == "csv") {
    relsens::write_study_csv(out, summary);
  } else if (format == "json-lines") {
    relsens::write_study_json_lines(out, summary);
  } else {
    relsens::write_study_text(out, summary);
  }
}

int run_form(const relsens::AnalysisConfig& cfg, const CommonOptions& opts) {
  const relsens::LimitState ls = relsens::build_limit_state(cfg);
  const relsens::NatafTransform transform = relsens::build_transform(cfg);
  const relsens::FormResult result = relsens::form_search(ls, transform);
  const std::vector<double> indices = relsens::alpha_to_linear_indices(result.alpha);

  OutputStream out(opts.output_path);
  if (opts.format == "json-lines") {
    nlohmann::json j;
    j["method"] = "form";
    j["beta"] = result.beta;
    j["pf"] = result.pf;
    j["u_star"] = result.u_star;
    j["alpha"] = result.alpha;
    j["indices"] = indices;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    out.get() << j.dump() << "\n";
    return kExitOk;
  }
  if (opts.format == "csv") {
    out.get() << "method,N,delta_var,run,beta_hat";
    for (const auto& name : ls.input_names) out.get() << ",S_" << name;
    out.get() << "\n";
    out.get() << "form,0,0,0," << relsens::detail::format_number(result.beta);
    for (double s : indices) out.get() << "," << relsens::detail::format_number(s);
    out.get() << "\n";
    return kExitOk;
  }
  auto& os = out.get();
  os << "FORM design point search\n";
  os << "  beta        " << relsens::detail::format_number(result.beta) << "\n";
  os << "  pf          " << relsens::detail::format_number(result.pf) << "\n";
  os << "  iterations  " << result.iterations << "\n";
  os << "  variable     u_star       alpha        index\n";
  char buf[128];
  for (std::size_t i = 0; i < ls.input_names.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "  %-10s %10s %12s %12s\n",
                  ls.input_names[i].c_str(),
                  relsens::detail::format_number(result.u_star[i]).c_str(),
                  relsens::detail::format_number(result.alpha[i]).c_str(),
                  relsens::detail::format_number(indices[i]).c_str());
    os << buf;
  }
  return kExitOk;
}

int run_sampling(const relsens::AnalysisConfig& cfg, const CommonOptions& opts,
                 relsens::SamplingMethod method) {
  const relsens::LimitState ls = relsens::build_limit_state(cfg);
  const relsens::NatafTransform transform = relsens::build_transform(cfg);

  relsens::SamplingPlan plan;
  plan.method = method;
  plan.n_samples = opts.samples.value_or(cfg.analysis.n_samples.front());
  plan.seed = opts.seed.value_or(cfg.analysis.seed);
  plan.threads = opts.threads;
  if (method == relsens::SamplingMethod::ImportanceSampling) {
    plan.is_center = resolve_is_center(cfg, ls, transform);
  }

  const std::vector<double> delta_vars =
      opts.delta_var ? std::vector<double>{*opts.delta_var} : cfg.analysis.delta_vars;

  auto [batch, est] = method == relsens::SamplingMethod::MonteCarlo
                          ? relsens::run_monte_carlo(ls, transform, plan)
                          : relsens::run_importance_sampling(ls, transform, plan);

  if (!opts.export_samples_path.empty()) {
    std::ofstream samples_out(opts.export_samples_path);
    if (!samples_out) {
      throw relsens::Error(relsens::ErrorCode::InvalidArgument,
                           "cannot open '" + opts.export_samples_path + "'");
    }
    relsens::export_samples_csv(samples_out, batch);
  }

  if (est.degenerate) {
    throw relsens::Error(est.n_failures == 0 ? relsens::ErrorCode::AllSafe
                                             : relsens::ErrorCode::OutOfRange,
                         "degenerate failure probability estimate (pf_hat = " +
                             std::to_string(est.pf_hat) + ")");
  }

  std::vector<std::string> warnings;
  const relsens::StudySummary summary =
      single_run_summary(batch, est, delta_vars, ls.input_names, warnings);

  OutputStream out(opts.output_path);
  if (opts.format == "text") {
    auto& os = out.get();
    os << (method == relsens::SamplingMethod::MonteCarlo ? "Monte Carlo simulation"
                                                         : "Importance sampling")
       << "\n";
    os << "  N           " << plan.n_samples << "\n";
    os << "  seed        " << plan.seed << "\n";
    os << "  pf_hat      " << relsens::detail::format_number(est.pf_hat) << "\n";
    os << "  beta_hat    " << relsens::detail::format_number(est.beta_hat) << "\n";
    os << "  std_error   " << relsens::detail::format_number(est.std_error) << "\n";
    os << "  failures    " << est.n_failures << "\n";
    for (const auto& w : warnings) os << "  warning: " << w << "\n";
    os << "\n";
  }
  write_summary(out.get(), summary, opts.format);
  return kExitOk;
}

int run_study_cmd(const relsens::AnalysisConfig& cfg, const CommonOptions& opts) {
  const relsens::LimitState ls = relsens::build_limit_state(cfg);
  const relsens::NatafTransform transform = relsens::build_transform(cfg);

  relsens::StudyConfig study;
  const std::string& method = cfg.analysis.method;
  if (method == "form") {
    throw relsens::Error(relsens::ErrorCode::InvalidConfig,
                         "analysis.method: study needs mcs or is");
  }
  const relsens::SamplingMethod sm = method == "mcs"
                                         ? relsens::SamplingMethod::MonteCarlo
                                         : relsens::SamplingMethod::ImportanceSampling;
  const std::vector<std::size_t> sample_counts =
      opts.samples ? std::vector<std::size_t>{*opts.samples} : cfg.analysis.n_samples;
  for (std::size_t n : sample_counts) study.plans.push_back({sm, n});
  study.delta_vars =
      opts.delta_var ? std::vector<double>{*opts.delta_var} : cfg.analysis.delta_vars;
  study.runs = opts.runs.value_or(cfg.analysis.runs);
  study.base_seed = opts.seed.value_or(cfg.analysis.seed);
  study.threads = opts.threads;
  if (sm == relsens::SamplingMethod::ImportanceSampling) {
    study.is_center = resolve_is_center(cfg, ls, transform);
  }

  const relsens::StudySummary summary = relsens::run_study(ls, transform, study);
  OutputStream out(opts.output_path);
  write_summary(out.get(), summary, opts.format);
  return kExitOk;
}

int run_validate(const relsens::AnalysisConfig& cfg, const CommonOptions& opts) {
  relsens::validate_config(cfg);
  (void)relsens::build_transform(cfg);
  OutputStream out(opts.output_path);
  out.get() << "ok: " << cfg.variables.size() << " variables, limit state '"
            << (std::holds_alternative<relsens::LinearSpec>(cfg.limit_state)
                    ? "linear"
                    : std::holds_alternative<relsens::TerzaghiSpec>(cfg.limit_state)
                          ? "terzaghi"
                          : "expression")
            << "', method '" << cfg.analysis.method << "'\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structural reliability and variance-based sensitivity toolkit"};
  app.require_subcommand(1);

  CommonOptions form_opts, mcs_opts, is_opts, study_opts, validate_opts;
  CLI::App* cmd_form = app.add_subcommand("form", "FORM design point search");
  add_common_options(cmd_form, form_opts, false);
  CLI::App* cmd_mcs = app.add_subcommand("mcs", "plain Monte Carlo run");
  add_common_options(cmd_mcs, mcs_opts, true);
  CLI::App* cmd_is = app.add_subcommand("is", "importance sampling run");
  add_common_options(cmd_is, is_opts, true);
  CLI::App* cmd_study = app.add_subcommand("study", "repeated-run mean/std study");
  add_common_options(cmd_study, study_opts, true);
  CLI::App* cmd_validate = app.add_subcommand("validate", "check a configuration file");
  add_common_options(cmd_validate, validate_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  const auto dispatch = [&](const CommonOptions& opts, auto&& fn) -> int {
    relsens::AnalysisConfig cfg;
    try {
      cfg = relsens::load_analysis_config(opts.config_path);
      relsens::validate_config(cfg);
    } catch (const relsens::Error& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    }
    try {
      return fn(cfg, opts);
    } catch (const relsens::Error& e) {
      if (e.code() == relsens::ErrorCode::InvalidConfig ||
          e.code() == relsens::ErrorCode::NotPositiveDefinite) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kExitNumerical;
    }
  };

  if (cmd_form->parsed()) return dispatch(form_opts, run_form);
  if (cmd_mcs->parsed()) {
    return dispatch(mcs_opts, [](const auto& cfg, const auto& opts) {
      return run_sampling(cfg, opts, relsens::SamplingMethod::MonteCarlo);
    });
  }
  if (cmd_is->parsed()) {
    return dispatch(is_opts, [](const auto& cfg, const auto& opts) {
      return run_sampling(cfg, opts, relsens::SamplingMethod::ImportanceSampling);
    });
  }
  if (cmd_study->parsed()) return dispatch(study_opts, run_study_cmd);
  if (cmd_validate->parsed()) return dispatch(validate_opts, run_validate);
  return kExitUsage;
}
