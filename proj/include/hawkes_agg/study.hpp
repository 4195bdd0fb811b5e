#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "baselines.hpp"
#include "gof.hpp"
#include "mcem.hpp"
#include "simulate.hpp"

namespace hawkes_agg {

// Worker pool size: hardware concurrency, overridden by HAWKES_AGG_THREADS,
// never more than the number of jobs.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("HAWKES_AGG_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = static_cast<unsigned>(v);
  }
  if (jobs < 1) jobs = 1;
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

// Runs body(0..jobs-1) on the worker pool. Each job must write only to its
// own slots, which makes results independent of scheduling. The first
// exception is rethrown after all workers finish.
inline void parallel_for(std::size_t jobs, const std::function<void(std::size_t)>& body) {
  const unsigned workers = worker_count(jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr err;
  auto run = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// Outlier-trimming protocol of the study tables: sort and drop
// floor(trim * n) values from each tail, independently per parameter.
inline std::vector<double> trimmed(std::vector<double> values, double trim) {
  if (!(trim >= 0.0) || !(trim < 0.5))
    throw std::invalid_argument("trimmed: trim fraction must lie in [0, 0.5)");
  std::sort(values.begin(), values.end());
  const auto drop =
      static_cast<std::size_t>(std::floor(trim * static_cast<double>(values.size())));
  if (2 * drop >= values.size()) return {};
  return {values.begin() + static_cast<std::ptrdiff_t>(drop),
          values.end() - static_cast<std::ptrdiff_t>(drop)};
}

struct Moments {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

inline Moments moments(const std::vector<double>& values) {
  Moments m;
  m.n = values.size();
  if (m.n == 0) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(m.n);
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.sd = m.n > 1 ? std::sqrt(ss / static_cast<double>(m.n - 1)) : 0.0;
  return m;
}

inline double mse_against(const std::vector<double>& values, double target) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double ss = 0.0;
  for (double v : values) ss += (v - target) * (v - target);
  return ss / static_cast<double>(values.size());
}

// Flattened parameter labels, matching flatten() order.
inline std::vector<std::string> param_names(std::size_t dim) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dim; ++i) names.push_back("nu_" + std::to_string(i + 1));
  for (const char* block : {"alpha", "beta"})
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        names.push_back(std::string(block) + "_" + std::to_string(i + 1) + "_" +
                        std::to_string(j + 1));
  return names;
}

struct StudyConfig {
  ModelParams truth;
  double horizon = 1000.0;
  double delta = 1.0;
  int reps = 10;
  double trim = 0.05;
  std::vector<std::string> methods = {"mcem", "binned", "inar"};
  std::uint64_t seed = 1;
  MCEMConfig mcem;    // per-replication seed is derived, overriding mcem.seed
  InarConfig inar;
  FitSettings fit;    // inner settings for the mle and binned fits
};

struct MethodRun {
  std::string method;
  std::vector<std::vector<double>> estimates;  // reps x param_count, NaN on failure
  std::vector<char> ok;                        // fit returned an estimate
  std::vector<char> converged;
  std::vector<char> valid;                     // params_valid flag of the fit
  std::vector<std::vector<double>> ks;         // reps x dim, KS per process
  int failures = 0;

  // Successful estimates of one parameter, the column the tables trim.
  [[nodiscard]] std::vector<double> column(std::size_t param) const {
    std::vector<double> out;
    for (std::size_t r = 0; r < estimates.size(); ++r)
      if (ok[r]) out.push_back(estimates[r][param]);
    return out;
  }
};

struct StudyResult {
  std::size_t dim = 0;
  int reps = 0;
  double trim = 0.05;
  std::vector<double> truth;  // flattened
  std::vector<MethodRun> methods;
};

namespace detail {

// Seed streams per replication: 101 feeds the MC-EM sampler, 102 the random
// stationary start of the binned fit (mirroring MC-EM's own start).
inline FitResult run_method(const std::string& method, const EventSequence& ev,
                            const BinnedCounts& counts, const StudyConfig& cfg,
                            std::uint64_t rep_seed) {
  if (method == "mcem") {
    MCEMConfig mc = cfg.mcem;
    mc.seed = mix_seed(rep_seed, 101);
    mc.fit = cfg.fit;
    return mcem_fit(counts, mc);
  }
  if (method == "binned") {
    Rng rng(mix_seed(rep_seed, 102));
    return fit_binned_loglik(counts, init_params(counts.dim(), rng), cfg.fit);
  }
  if (method == "inar") return fit_inar(counts, cfg.inar);
  if (method == "mle") return fit_mle(ev, cfg.truth, cfg.fit);
  throw std::invalid_argument("study: unknown method '" + method + "'");
}

}  // namespace detail

// Seeded replications of simulate -> aggregate -> fit for each method, plus
// the ground-truth MLE reference column on the exact times. A replication
// failure of one method is recorded and excluded, never fatal. Results are
// identical for serial and parallel runs.
inline StudyResult run_study(const StudyConfig& cfg) {
  validate_params(cfg.truth);
  {
    const double rho = spectral_radius(branching_ratio(cfg.truth));
    if (!(rho < 1.0))
      throw stationarity_error("study: spectral radius " + std::to_string(rho) +
                               " is not below 1");
  }
  if (cfg.reps < 2) throw std::invalid_argument("study: need at least 2 replications");
  if (cfg.methods.empty()) throw std::invalid_argument("study: method list is empty");
  if (!(cfg.delta > 0.0) || !(cfg.horizon > 0.0))
    throw std::invalid_argument("study: delta and horizon must be positive");

  std::vector<std::string> methods = cfg.methods;
  if (std::find(methods.begin(), methods.end(), "mle") == methods.end())
    methods.push_back("mle");
  for (const auto& m : methods)
    if (m != "mcem" && m != "binned" && m != "inar" && m != "mle")
      throw std::invalid_argument("study: unknown method '" + m + "'");

  const std::size_t dim = cfg.truth.dim();
  const std::size_t np = param_count(dim);
  const auto reps = static_cast<std::size_t>(cfg.reps);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  StudyResult res;
  res.dim = dim;
  res.reps = cfg.reps;
  res.trim = cfg.trim;
  res.truth = flatten(cfg.truth);
  for (const auto& m : methods) {
    MethodRun run;
    run.method = m;
    run.estimates.assign(reps, std::vector<double>(np, nan));
    run.ok.assign(reps, 0);
    run.converged.assign(reps, 0);
    run.valid.assign(reps, 0);
    run.ks.assign(reps, std::vector<double>(dim, nan));
    res.methods.push_back(std::move(run));
  }

  parallel_for(reps, [&](std::size_t r) {
    const std::uint64_t rep_seed = mix_seed(cfg.seed, r);
    const EventSequence ev = simulate(cfg.truth, cfg.horizon, rep_seed);
    const BinnedCounts counts = aggregate(ev, cfg.delta);
    for (std::size_t mi = 0; mi < res.methods.size(); ++mi) {
      MethodRun& run = res.methods[mi];
      try {
        const FitResult fit = detail::run_method(run.method, ev, counts, cfg, rep_seed);
        run.estimates[r] = flatten(fit.params);
        run.ok[r] = 1;
        run.converged[r] = fit.converged ? 1 : 0;
        run.valid[r] = fit.params_valid ? 1 : 0;
        run.ks[r] = transform_times(fit.params, ev).ks_stat;
      } catch (const std::exception&) {
        // Slot stays NaN; counted below.
      }
    }
  });

  for (auto& run : res.methods)
    run.failures = static_cast<int>(std::count(run.ok.begin(), run.ok.end(), 0));
  return res;
}

}  // namespace hawkes_agg
