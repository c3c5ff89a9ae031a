#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "relsens/distributions.hpp"
#include "relsens/error.hpp"
#include "relsens/expression.hpp"
#include "relsens/limit_state.hpp"
#include "relsens/linalg.hpp"
#include "relsens/transform.hpp"

namespace relsens {

struct VariableSpec {
  std::string name;
  DistributionKind kind = DistributionKind::Normal;
  double mean = 0.0;
  double std_dev = 1.0;
  std::optional<double> lower;  // truncated normal only
  std::optional<double> upper;
};

struct CorrelationSpec {
  std::string first;
  std::string second;
  double rho = 0.0;
};

struct LinearSpec {
  double a0 = 0.0;
  std::vector<double> coefficients;  // aligned with the variables list
};

struct TerzaghiSpec {
  double width = 0.0;
  double depth = 0.0;
  std::string load;
  std::string friction_angle;  // bound variable carries degrees
  std::string cohesion;
  std::string soil_weight;
};

struct ExpressionSpec {
  std::string text;
  std::map<std::string, double> constants;
};

struct AnalysisSpec {
  std::string method = "mcs";  // form | mcs | is
  std::vector<std::size_t> n_samples = {1000};
  std::uint64_t seed = 0;
  std::vector<double> delta_vars = {0.1};
  std::size_t runs = 100;
  /// "form" resolves the center from a design-point search; otherwise an
  /// explicit u-space vector.
  std::variant<std::string, std::vector<double>> is_center = std::string("form");
};

struct AnalysisConfig {
  std::vector<VariableSpec> variables;
  std::vector<CorrelationSpec> correlations;
  std::variant<LinearSpec, TerzaghiSpec, ExpressionSpec> limit_state;
  AnalysisSpec analysis;
};

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, field + ": " + why);
}

inline const json& field(const json& j, const char* key, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) bad(ctx + "." + key, "missing required field");
  return *it;
}

inline double number(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_number()) bad(ctx + "." + key, "expected a number");
  return v.get<double>();
}

inline std::string text(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_string()) bad(ctx + "." + key, "expected a string");
  return v.get<std::string>();
}

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) bad(ctx + "." + it.key(), "unknown field");
  }
}

inline DistributionKind parse_kind(const std::string& s, const std::string& ctx) {
  if (s == "normal") return DistributionKind::Normal;
  if (s == "lognormal") return DistributionKind::Lognormal;
  if (s == "uniform") return DistributionKind::Uniform;
  if (s == "truncated_normal") return DistributionKind::TruncatedNormal;
  bad(ctx, "unknown distribution kind '" + s +
               "' (normal, lognormal, uniform, truncated_normal)");
}

inline std::vector<std::size_t> count_list(const json& v, const std::string& ctx) {
  std::vector<std::size_t> out;
  const auto one = [&](const json& e) {
    if (!e.is_number_integer() || e.get<std::int64_t>() <= 0) {
      bad(ctx, "expected a positive integer");
    }
    out.push_back(e.get<std::size_t>());
  };
  if (v.is_array()) {
    for (const auto& e : v) one(e);
  } else {
    one(v);
  }
  if (out.empty()) bad(ctx, "empty list");
  return out;
}

inline std::vector<double> positive_list(const json& v, const std::string& ctx) {
  std::vector<double> out;
  const auto one = [&](const json& e) {
    if (!e.is_number() || !(e.get<double>() > 0.0)) bad(ctx, "expected a positive number");
    out.push_back(e.get<double>());
  };
  if (v.is_array()) {
    for (const auto& e : v) one(e);
  } else {
    one(v);
  }
  if (out.empty()) bad(ctx, "empty list");
  return out;
}

}  // namespace config_detail

inline AnalysisConfig parse_analysis_config(const nlohmann::json& root) {
  using namespace config_detail;
  if (!root.is_object()) bad("config", "top level must be an object");
  reject_unknown_keys(root, {"variables", "correlation", "limit_state", "analysis"},
                      "config");

  AnalysisConfig cfg;

  // variables
  const json& vars = field(root, "variables", "config");
  if (!vars.is_array() || vars.empty()) bad("config.variables", "expected a non-empty list");
  std::set<std::string> names;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string ctx = "variables[" + std::to_string(i) + "]";
    const json& v = vars[i];
    if (!v.is_object()) bad(ctx, "expected an object");
    reject_unknown_keys(v, {"name", "distribution", "mean", "std", "lower", "upper"}, ctx);
    VariableSpec spec;
    spec.name = text(v, "name", ctx);
    if (spec.name.empty()) bad(ctx + ".name", "empty name");
    if (!names.insert(spec.name).second) {
      bad(ctx + ".name", "duplicate variable name '" + spec.name + "'");
    }
    spec.kind = parse_kind(text(v, "distribution", ctx), ctx + ".distribution");
    spec.mean = number(v, "mean", ctx);
    spec.std_dev = number(v, "std", ctx);
    if (!(spec.std_dev > 0.0)) bad(ctx + ".std", "must be > 0");
    if (spec.kind == DistributionKind::Lognormal && !(spec.mean > 0.0)) {
      bad(ctx + ".mean", "lognormal requires mean > 0");
    }
    if (v.contains("lower")) spec.lower = number(v, "lower", ctx);
    if (v.contains("upper")) spec.upper = number(v, "upper", ctx);
    if (spec.kind == DistributionKind::TruncatedNormal) {
      if (!spec.lower || !spec.upper) {
        bad(ctx, "truncated_normal requires lower and upper bounds");
      }
      if (!(*spec.lower < *spec.upper)) bad(ctx, "requires lower < upper");
    } else if (spec.lower || spec.upper) {
      bad(ctx, "bounds are only valid for truncated_normal");
    }
    cfg.variables.push_back(std::move(spec));
  }

  // correlation (optional)
  if (root.contains("correlation")) {
    const json& corr = root["correlation"];
    if (!corr.is_array()) bad("config.correlation", "expected a list");
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < corr.size(); ++i) {
      const std::string ctx = "correlation[" + std::to_string(i) + "]";
      const json& c = corr[i];
      if (!c.is_object()) bad(ctx, "expected an object");
      reject_unknown_keys(c, {"pair", "rho"}, ctx);
      const json& pair = field(c, "pair", ctx);
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
          !pair[1].is_string()) {
        bad(ctx + ".pair", "expected two variable names");
      }
      CorrelationSpec spec;
      spec.first = pair[0].get<std::string>();
      spec.second = pair[1].get<std::string>();
      for (const std::string& nm : {spec.first, spec.second}) {
        if (!names.count(nm)) bad(ctx + ".pair", "unknown variable '" + nm + "'");
      }
      if (spec.first == spec.second) bad(ctx + ".pair", "self correlation");
      spec.rho = number(c, "rho", ctx);
      if (!(spec.rho > -1.0 && spec.rho < 1.0)) bad(ctx + ".rho", "must be in (-1,1)");
      auto key = std::minmax(spec.first, spec.second);
      if (!seen.insert({key.first, key.second}).second) {
        bad(ctx + ".pair", "duplicate correlation pair");
      }
      cfg.correlations.push_back(std::move(spec));
    }
  }

  // limit state
  const json& ls = field(root, "limit_state", "config");
  if (!ls.is_object()) bad("config.limit_state", "expected an object");
  const std::string type = text(ls, "type", "limit_state");
  if (type == "linear") {
    reject_unknown_keys(ls, {"type", "a0", "coefficients"}, "limit_state");
    LinearSpec spec;
    spec.a0 = number(ls, "a0", "limit_state");
    const json& coeffs = field(ls, "coefficients", "limit_state");
    if (!coeffs.is_array() || coeffs.size() != cfg.variables.size()) {
      bad("limit_state.coefficients",
          "expected one coefficient per variable (" +
              std::to_string(cfg.variables.size()) + ")");
    }
    for (const auto& c : coeffs) {
      if (!c.is_number()) bad("limit_state.coefficients", "expected numbers");
      spec.coefficients.push_back(c.get<double>());
    }
    cfg.limit_state = std::move(spec);
  } else if (type == "terzaghi") {
    reject_unknown_keys(ls, {"type", "width", "depth", "load", "friction_angle",
                             "cohesion", "soil_weight"},
                        "limit_state");
    TerzaghiSpec spec;
    spec.width = number(ls, "width", "limit_state");
    spec.depth = number(ls, "depth", "limit_state");
    if (!(spec.width > 0.0)) bad("limit_state.width", "must be > 0");
    if (!(spec.depth >= 0.0)) bad("limit_state.depth", "must be >= 0");
    spec.load = text(ls, "load", "limit_state");
    spec.friction_angle = text(ls, "friction_angle", "limit_state");
    spec.cohesion = text(ls, "cohesion", "limit_state");
    spec.soil_weight = text(ls, "soil_weight", "limit_state");
    std::set<std::string> bound;
    for (const std::string& nm :
         {spec.load, spec.friction_angle, spec.cohesion, spec.soil_weight}) {
      if (!names.count(nm)) bad("limit_state", "unknown variable '" + nm + "'");
      if (!bound.insert(nm).second) bad("limit_state", "variable '" + nm + "' bound twice");
    }
    cfg.limit_state = std::move(spec);
  } else if (type == "expression") {
    reject_unknown_keys(ls, {"type", "text", "constants"}, "limit_state");
    ExpressionSpec spec;
    spec.text = text(ls, "text", "limit_state");
    if (ls.contains("constants")) {
      const json& consts = ls["constants"];
      if (!consts.is_object()) bad("limit_state.constants", "expected an object");
      for (auto it = consts.begin(); it != consts.end(); ++it) {
        if (!it.value().is_number()) bad("limit_state.constants", "expected numbers");
        if (names.count(it.key())) {
          bad("limit_state.constants", "'" + it.key() + "' shadows a variable");
        }
        spec.constants[it.key()] = it.value().get<double>();
      }
    }
    cfg.limit_state = std::move(spec);
  } else {
    bad("limit_state.type", "unknown type '" + type +
                                "' (linear, terzaghi, expression)");
  }

  // analysis
  const json& an = field(root, "analysis", "config");
  if (!an.is_object()) bad("config.analysis", "expected an object");
  reject_unknown_keys(an, {"method", "n_samples", "seed", "delta_var", "runs",
                           "is_center"},
                      "analysis");
  cfg.analysis.method = text(an, "method", "analysis");
  if (cfg.analysis.method != "form" && cfg.analysis.method != "mcs" &&
      cfg.analysis.method != "is") {
    bad("analysis.method", "expected form, mcs or is");
  }
  if (an.contains("n_samples")) {
    cfg.analysis.n_samples = config_detail::count_list(an["n_samples"], "analysis.n_samples");
  }
  if (an.contains("seed")) {
    const json& s = an["seed"];
    if (s.is_number_unsigned()) {
      cfg.analysis.seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
      cfg.analysis.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    } else {
      bad("analysis.seed", "expected a non-negative integer");
    }
  }
  if (an.contains("delta_var")) {
    cfg.analysis.delta_vars = config_detail::positive_list(an["delta_var"], "analysis.delta_var");
  }
  if (an.contains("runs")) {
    const json& r = an["runs"];
    if (!r.is_number_integer() || r.get<std::int64_t>() <= 0) {
      bad("analysis.runs", "expected a positive integer");
    }
    cfg.analysis.runs = r.get<std::size_t>();
  }
  if (an.contains("is_center")) {
    const json& c = an["is_center"];
    if (c.is_string()) {
      if (c.get<std::string>() != "form") {
        bad("analysis.is_center", "expected \"form\" or a vector");
      }
      cfg.analysis.is_center = std::string("form");
    } else if (c.is_array()) {
      std::vector<double> center;
      for (const auto& e : c) {
        if (!e.is_number()) bad("analysis.is_center", "expected numbers");
        center.push_back(e.get<double>());
      }
      if (center.size() != cfg.variables.size()) {
        bad("analysis.is_center", "expected one entry per variable");
      }
      cfg.analysis.is_center = std::move(center);
    } else {
      bad("analysis.is_center", "expected \"form\" or a vector");
    }
  }

  return cfg;
}

inline AnalysisConfig load_analysis_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::InvalidConfig, "cannot open config file '" + path + "'");
  }
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("JSON parse error: ") + e.what());
  }
  return parse_analysis_config(root);
}

inline std::vector<MarginalDistribution> build_marginals(const AnalysisConfig& cfg) {
  std::vector<MarginalDistribution> out;
  out.reserve(cfg.variables.size());
  for (const VariableSpec& v : cfg.variables) {
    if (v.kind == DistributionKind::TruncatedNormal) {
      out.push_back(MarginalDistribution::truncated_normal(v.mean, v.std_dev,
                                                           *v.lower, *v.upper));
    } else {
      out.push_back(MarginalDistribution::from_moments(v.kind, v.mean, v.std_dev));
    }
  }
  return out;
}

inline NatafTransform build_transform(const AnalysisConfig& cfg) {
  const std::size_t m = cfg.variables.size();
  Matrix rho_x = Matrix::identity(m);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < m; ++i) index[cfg.variables[i].name] = i;
  for (const CorrelationSpec& c : cfg.correlations) {
    const std::size_t i = index.at(c.first);
    const std::size_t j = index.at(c.second);
    rho_x(i, j) = c.rho;
    rho_x(j, i) = c.rho;
  }
  return NatafTransform::build(build_marginals(cfg), rho_x);
}

inline LimitState build_limit_state(const AnalysisConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(cfg.variables.size());
  for (const VariableSpec& v : cfg.variables) names.push_back(v.name);

  if (const auto* lin = std::get_if<LinearSpec>(&cfg.limit_state)) {
    return linear_limit_state(lin->a0, lin->coefficients, names);
  }
  if (const auto* tz = std::get_if<TerzaghiSpec>(&cfg.limit_state)) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
    const std::array<std::size_t, 4> order = {
        index.at(tz->load), index.at(tz->friction_angle), index.at(tz->cohesion),
        index.at(tz->soil_weight)};
    LimitState inner = terzaghi_bearing(tz->width, tz->depth);
    LimitState ls;
    ls.input_names = names;
    ls.evaluate = [inner = std::move(inner), order](std::span<const double> x) {
      const std::array<double, 4> args = {x[order[0]], x[order[1]], x[order[2]],
                                          x[order[3]]};
      return inner.evaluate(args);
    };
    return ls;
  }
  const auto& ex = std::get<ExpressionSpec>(cfg.limit_state);
  try {
    return parse_expression(ex.text, names, ex.constants);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("limit_state.text: ") + e.what());
  }
}

/// Full validation pass: schema checks happen at parse time; this also
/// exercises model construction (expression parsing, marginal domains).
/// Correlation adjustment feasibility is deferred to build_transform.
inline void validate_config(const AnalysisConfig& cfg) {
  (void)build_marginals(cfg);
  (void)build_limit_state(cfg);
}

}  // namespace relsens
