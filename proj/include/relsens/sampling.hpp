#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "relsens/error.hpp"
#include "relsens/limit_state.hpp"
#include "relsens/linalg.hpp"
#include "relsens/normal.hpp"
#include "relsens/rng.hpp"
#include "relsens/transform.hpp"

namespace relsens {

enum class SamplingMethod { MonteCarlo, ImportanceSampling };

inline const char* method_name(SamplingMethod m) {
  return m == SamplingMethod::MonteCarlo ? "mcs" : "is";
}

struct SamplingPlan {
  SamplingMethod method = SamplingMethod::MonteCarlo;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  /// Sampling-density center in the correlated standard normal space
  /// (equal to the FORM design point when the inputs are uncorrelated).
  std::optional<std::vector<double>> is_center;
  /// Sampling covariance; identity when absent.
  std::optional<Matrix> is_cov;
  /// 0 resolves to RELSENS_THREADS, then to the hardware thread count.
  unsigned threads = 0;
};

/// One simulation run: u-space samples with their limit-state values and the
/// base / sampling log-densities needed for reweighting. u rows live in the
/// correlated standard normal space whose covariance is base_cov (C_UU0).
struct SampleBatch {
  std::size_t n_samples = 0;
  std::size_t dim = 0;
  std::vector<double> u;       // n_samples x dim, row-major
  std::vector<double> g;
  std::vector<double> log_f0;  // log N(u; 0, base_cov)
  std::vector<double> log_fs;  // log of the density the samples were drawn from
  SamplingPlan plan;
  Matrix base_cov;

  std::span<const double> u_row(std::size_t i) const {
    return {u.data() + i * dim, dim};
  }
  std::span<double> u_row(std::size_t i) {
    return {u.data() + i * dim, dim};
  }
};

struct PfEstimate {
  double pf_hat = 0.0;
  double beta_hat = 0.0;
  double std_error = 0.0;
  std::size_t n_failures = 0;
  /// Set when pf_hat hit 0 or 1; beta_hat is then an infinity sentinel.
  bool degenerate = false;
};

/// beta = -Phi^{-1}(pf). At pf = 0 or 1 returns an infinity sentinel; caller
/// checks std::isfinite. Outside [0,1] throws.
inline double pf_to_beta(double pf) {
  if (pf > 0.0 && pf < 1.0) return -norm_quantile(pf);
  if (pf == 0.0) return std::numeric_limits<double>::infinity();
  if (pf == 1.0) return -std::numeric_limits<double>::infinity();
  throw Error(ErrorCode::OutOfRange, "probability outside [0,1]");
}

namespace detail {

inline unsigned resolve_threads(unsigned requested, std::size_t work_items) {
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("RELSENS_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) n = static_cast<unsigned>(v);
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  if (work_items < n) n = work_items == 0 ? 1 : static_cast<unsigned>(work_items);
  return n;
}

/// Runs fn(begin, end) over disjoint index chunks. Outputs must be written
/// to per-index slots so the result is identical for any thread count. An
/// exception thrown inside a chunk is rethrown on the calling thread (the
/// lowest-index chunk wins when several fail).
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + threads - 1) / threads;
  const unsigned used = static_cast<unsigned>((n + chunk - 1) / chunk);
  std::vector<std::exception_ptr> errors(used);
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (unsigned t = 0; t < used; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, &errors, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

inline double log_density_constant(std::size_t m, double log_det) {
  return -0.5 * (static_cast<double>(m) * std::log(kTwoPi) + log_det);
}

}  // namespace detail

/// Plain Monte Carlo: u drawn from N(0, C_UU0), x via the marginal map,
/// pf_hat = (1/N) sum I(g <= 0). Deterministic for a fixed seed regardless
/// of the number of worker threads.
inline std::pair<SampleBatch, PfEstimate> run_monte_carlo(
    const LimitState& ls, const NatafTransform& t, const SamplingPlan& plan) {
  if (plan.method != SamplingMethod::MonteCarlo) {
    throw Error(ErrorCode::InvalidArgument, "plan method is not MonteCarlo");
  }
  if (plan.n_samples < 1) {
    throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  }
  const std::size_t m = t.dim();
  const std::size_t n = plan.n_samples;
  if (ls.dim() != m) {
    throw Error(ErrorCode::InvalidArgument, "limit state / transform dimension mismatch");
  }

  SampleBatch batch;
  batch.n_samples = n;
  batch.dim = m;
  batch.plan = plan;
  batch.base_cov = t.rho_u();
  batch.u.resize(n * m);
  batch.g.resize(n);
  batch.log_f0.resize(n);
  batch.log_fs.resize(n);

  const bool independent = t.independent_inputs();
  const CholeskyFactor& chol0 = t.chol_u();
  const double log_c0 = detail::log_density_constant(m, chol0.log_det());
  const auto& marginals = t.marginals();

  std::atomic<std::int64_t> first_bad{-1};
  const unsigned threads = detail::resolve_threads(plan.threads, n);

  detail::parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> draw(m), z(m), x(m);
    for (std::size_t s = begin; s < end; ++s) {
      for (std::size_t j = 0; j < m; ++j) {
        draw[j] = CounterRng::normal(plan.seed, s, static_cast<std::uint32_t>(j));
      }
      double quad = 0.0;
      if (independent) {
        z = draw;
        for (double v : z) quad += v * v;
      } else {
        chol0.multiply_lower(draw, z);
        // L^{-1} z recovers the i.i.d. draw, so the quadratic form is its norm
        for (double v : draw) quad += v * v;
      }
      for (std::size_t j = 0; j < m; ++j) x[j] = marginals[j].quantile_from_z(z[j]);
      const double gv = ls.evaluate(x);
      if (!std::isfinite(gv)) {
        // keep the lowest failing index so the report is thread-order free
        std::int64_t seen = first_bad.load();
        const std::int64_t mine = static_cast<std::int64_t>(s);
        while ((seen < 0 || mine < seen) &&
               !first_bad.compare_exchange_weak(seen, mine)) {
        }
      }
      std::copy(z.begin(), z.end(), batch.u.begin() + s * m);
      batch.g[s] = gv;
      batch.log_f0[s] = log_c0 - 0.5 * quad;
      batch.log_fs[s] = batch.log_f0[s];
    }
  });

  if (first_bad.load() >= 0) {
    throw Error(ErrorCode::NonFiniteLimitState,
                "limit state not finite at sample " + std::to_string(first_bad.load()));
  }

  PfEstimate est;
  std::size_t failures = 0;
  for (std::size_t s = 0; s < n; ++s) failures += batch.g[s] <= 0.0 ? 1 : 0;
  est.n_failures = failures;
  est.pf_hat = static_cast<double>(failures) / static_cast<double>(n);
  est.std_error = std::sqrt(est.pf_hat * (1.0 - est.pf_hat) / static_cast<double>(n));
  est.beta_hat = pf_to_beta(est.pf_hat);
  est.degenerate = !(est.pf_hat > 0.0 && est.pf_hat < 1.0);
  return {std::move(batch), est};
}

/// Importance sampling with a normal density N(is_center, is_cov):
/// pf_hat = (1/N) sum w_i I(g_i <= 0), w = f0 / fs. The estimator divides
/// by N, not by the weight sum.
inline std::pair<SampleBatch, PfEstimate> run_importance_sampling(
    const LimitState& ls, const NatafTransform& t, const SamplingPlan& plan) {
  if (plan.method != SamplingMethod::ImportanceSampling) {
    throw Error(ErrorCode::InvalidArgument, "plan method is not ImportanceSampling");
  }
  if (plan.n_samples < 1) {
    throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  }
  if (!plan.is_center) {
    throw Error(ErrorCode::InvalidArgument, "importance sampling requires is_center");
  }
  const std::size_t m = t.dim();
  const std::size_t n = plan.n_samples;
  if (ls.dim() != m || plan.is_center->size() != m) {
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  }
  if (plan.is_cov && plan.is_cov->size() != m) {
    throw Error(ErrorCode::InvalidArgument, "is_cov dimension mismatch");
  }

  SampleBatch batch;
  batch.n_samples = n;
  batch.dim = m;
  batch.plan = plan;
  batch.base_cov = t.rho_u();
  batch.u.resize(n * m);
  batch.g.resize(n);
  batch.log_f0.resize(n);
  batch.log_fs.resize(n);

  const std::vector<double>& center = *plan.is_center;
  const Matrix cov_is = plan.is_cov ? *plan.is_cov : Matrix::identity(m);
  const CholeskyFactor chol_is = CholeskyFactor::compute(cov_is);
  const bool identity_is = chol_is.is_identity();
  const double log_cs = detail::log_density_constant(m, chol_is.log_det());

  const bool independent = t.independent_inputs();
  const CholeskyFactor& chol0 = t.chol_u();
  const double log_c0 = detail::log_density_constant(m, chol0.log_det());
  const auto& marginals = t.marginals();

  std::atomic<std::int64_t> first_bad{-1};
  const unsigned threads = detail::resolve_threads(plan.threads, n);

  detail::parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> draw(m), z(m), x(m), scratch(m);
    for (std::size_t s = begin; s < end; ++s) {
      double quad_is = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        draw[j] = CounterRng::normal(plan.seed, s, static_cast<std::uint32_t>(j));
        quad_is += draw[j] * draw[j];  // || L_is^{-1} (z - center) ||^2
      }
      if (identity_is) {
        for (std::size_t j = 0; j < m; ++j) z[j] = center[j] + draw[j];
      } else {
        chol_is.multiply_lower(draw, z);
        for (std::size_t j = 0; j < m; ++j) z[j] += center[j];
      }
      double quad0;
      if (independent) {
        quad0 = 0.0;
        for (double v : z) quad0 += v * v;
      } else {
        scratch.assign(z.begin(), z.end());
        chol0.solve_lower(scratch);
        quad0 = 0.0;
        for (double v : scratch) quad0 += v * v;
      }
      for (std::size_t j = 0; j < m; ++j) x[j] = marginals[j].quantile_from_z(z[j]);
      const double gv = ls.evaluate(x);
      if (!std::isfinite(gv)) {
        // keep the lowest failing index so the report is thread-order free
        std::int64_t seen = first_bad.load();
        const std::int64_t mine = static_cast<std::int64_t>(s);
        while ((seen < 0 || mine < seen) &&
               !first_bad.compare_exchange_weak(seen, mine)) {
        }
      }
      std::copy(z.begin(), z.end(), batch.u.begin() + s * m);
      batch.g[s] = gv;
      batch.log_f0[s] = log_c0 - 0.5 * quad0;
      batch.log_fs[s] = log_cs - 0.5 * quad_is;
    }
  });

  if (first_bad.load() >= 0) {
    throw Error(ErrorCode::NonFiniteLimitState,
                "limit state not finite at sample " + std::to_string(first_bad.load()));
  }

  PfEstimate est;
  std::size_t failures = 0;
  double sum_wi = 0.0, sum_wi_sq = 0.0, max_failure_weight = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (batch.g[s] <= 0.0) {
      ++failures;
      const double w = std::exp(batch.log_f0[s] - batch.log_fs[s]);
      sum_wi += w;
      sum_wi_sq += w * w;
      if (w > max_failure_weight) max_failure_weight = w;
    }
  }
  est.n_failures = failures;
  if (failures > 0 && max_failure_weight == 0.0) {
    throw Error(ErrorCode::DegenerateWeights, "all weights at failure samples are zero");
  }
  const double dn = static_cast<double>(n);
  est.pf_hat = sum_wi / dn;
  if (est.pf_hat > 1.0) est.pf_hat = 1.0;
  if (n > 1) {
    const double var =
        std::max(0.0, (sum_wi_sq - sum_wi * sum_wi / dn) / (dn - 1.0));
    est.std_error = std::sqrt(var / dn);
  }
  est.beta_hat = pf_to_beta(est.pf_hat);
  est.degenerate = !(est.pf_hat > 0.0 && est.pf_hat < 1.0);
  return {std::move(batch), est};
}

/// Per-sample (u, g, weight) rows for scatter plotting.
inline void export_samples_csv(std::ostream& out, const SampleBatch& batch) {
  for (std::size_t j = 0; j < batch.dim; ++j) out << "u_" << (j + 1) << ",";
  out << "g,weight\n";
  char buf[32];
  for (std::size_t s = 0; s < batch.n_samples; ++s) {
    const auto row = batch.u_row(s);
    for (std::size_t j = 0; j < batch.dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", batch.g[s]);
    out << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g",
                  std::exp(batch.log_f0[s] - batch.log_fs[s]));
    out << buf << "\n";
  }
}

}  // namespace relsens
