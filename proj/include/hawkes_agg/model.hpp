#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace hawkes_agg {

// Parameters of a P-variate Hawkes process with exponential kernels
//   lambda_p(t) = nu_p + sum_m sum_{t_j^m < t} alpha_pm exp(-beta_pm (t - t_j^m)).
// Row index = receiving process, column index = source process.
struct ModelParams {
  std::vector<double> nu;
  Matrix alpha;
  Matrix beta;

  [[nodiscard]] std::size_t dim() const { return nu.size(); }

  bool operator==(const ModelParams&) const = default;
};

// Shape and sign checks. Baselines may construct parameter sets that violate
// positivity on purpose (and flag them), so validation is a separate call
// rather than a constructor invariant. `allow_zero_nu` admits nu_p = 0, which
// simulation accepts but likelihood evaluation does not.
inline void validate_params(const ModelParams& p, bool allow_zero_nu = false) {
  const std::size_t n = p.dim();
  if (n == 0) throw std::invalid_argument("params: dimension must be positive");
  if (p.alpha.rows() != n || p.alpha.cols() != n || p.beta.rows() != n || p.beta.cols() != n)
    throw std::invalid_argument("params: alpha and beta must be P x P");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(p.nu[i]) || p.nu[i] < 0.0 || (!allow_zero_nu && p.nu[i] == 0.0))
      throw std::invalid_argument("params: nu must be positive (component " +
                                  std::to_string(i + 1) + ")");
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(p.alpha(i, j)) || p.alpha(i, j) < 0.0)
        throw std::invalid_argument("params: alpha must be non-negative");
      if (std::isnan(p.beta(i, j)) || p.beta(i, j) <= 0.0)
        throw std::invalid_argument("params: beta must be positive");
    }
  }
}

// Event times per process on [0, horizon). Within a process times are strictly
// increasing; ties across processes are allowed.
struct EventSequence {
  std::vector<std::vector<double>> times;
  double horizon = 0.0;

  EventSequence() = default;
  explicit EventSequence(std::size_t dim, double horizon_ = 0.0)
      : times(dim), horizon(horizon_) {}

  [[nodiscard]] std::size_t dim() const { return times.size(); }
  [[nodiscard]] std::size_t count(std::size_t p) const { return times[p].size(); }
  [[nodiscard]] std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& t : times) n += t.size();
    return n;
  }
};

inline void validate_events(const EventSequence& ev) {
  if (ev.dim() == 0) throw std::invalid_argument("events: dimension must be positive");
  if (!(ev.horizon > 0.0)) throw std::invalid_argument("events: horizon must be positive");
  for (std::size_t p = 0; p < ev.dim(); ++p) {
    const auto& t = ev.times[p];
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (!(t[k] >= 0.0) || !(t[k] < ev.horizon))
        throw std::invalid_argument("events: times must lie in [0, horizon)");
      if (k > 0 && !(t[k] > t[k - 1]))
        throw std::invalid_argument("events: times must be strictly increasing per process");
    }
  }
}

// Counts per bin and process over a grid of K bins of width delta.
// counts[j][p] = number of process-p events in [j delta, (j+1) delta).
struct BinnedCounts {
  std::vector<std::vector<std::int64_t>> counts;
  double delta = 0.0;

  [[nodiscard]] std::size_t bins() const { return counts.size(); }
  [[nodiscard]] std::size_t dim() const { return counts.empty() ? 0 : counts[0].size(); }
  [[nodiscard]] double horizon() const { return delta * static_cast<double>(bins()); }
  [[nodiscard]] std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& row : counts)
      n += std::accumulate(row.begin(), row.end(), std::int64_t{0});
    return n;
  }
};

inline void validate_counts(const BinnedCounts& bc) {
  if (!(bc.delta > 0.0)) throw std::invalid_argument("counts: delta must be positive");
  if (bc.bins() == 0) throw std::invalid_argument("counts: need at least one bin");
  const std::size_t p = bc.counts[0].size();
  if (p == 0) throw std::invalid_argument("counts: dimension must be positive");
  for (const auto& row : bc.counts) {
    if (row.size() != p) throw std::invalid_argument("counts: ragged rows");
    for (auto c : row)
      if (c < 0) throw std::invalid_argument("counts: negative count");
  }
}

// Branching-ratio matrix gamma_pm = alpha_pm / beta_pm.
inline Matrix branching_ratio(const ModelParams& params) {
  const std::size_t n = params.dim();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = params.alpha(i, j) / params.beta(i, j);
  return g;
}

// Stationary mean intensity (I - gamma)^{-1} nu. Requires rho(gamma) < 1.
inline std::vector<double> stationary_intensity(const ModelParams& params) {
  validate_params(params, true);
  const Matrix g = branching_ratio(params);
  const double rho = spectral_radius(g);
  if (!(rho < 1.0))
    throw stationarity_error("stationary_intensity: spectral radius " +
                             std::to_string(rho) + " >= 1");
  const std::size_t n = params.dim();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - g(i, j);
  return solve(std::move(a), params.nu);
}

// Conditional intensity of process p at time t given the history before t.
// Events at exactly t do not contribute. Direct O(total events) evaluation.
inline double cif_eval(const ModelParams& params, const EventSequence& ev, double t,
                       std::size_t p) {
  validate_params(params, true);
  if (ev.dim() != params.dim())
    throw std::invalid_argument("cif_eval: dimension mismatch");
  if (p >= params.dim()) throw std::invalid_argument("cif_eval: process index out of range");
  if (!(t >= 0.0)) throw std::invalid_argument("cif_eval: t must be non-negative");
  double lam = params.nu[p];
  for (std::size_t m = 0; m < ev.dim(); ++m) {
    const double a = params.alpha(p, m);
    const double b = params.beta(p, m);
    if (a == 0.0) continue;
    for (double tj : ev.times[m]) {
      if (tj >= t) break;
      lam += a * std::exp(-b * (t - tj));
    }
  }
  return lam;
}

// Integrated intensity Lambda_p(t) = int_0^t lambda_p(s) ds, closed form.
inline double compensator(const ModelParams& params, const EventSequence& ev, double t,
                          std::size_t p) {
  validate_params(params, true);
  if (ev.dim() != params.dim())
    throw std::invalid_argument("compensator: dimension mismatch");
  if (p >= params.dim())
    throw std::invalid_argument("compensator: process index out of range");
  if (!(t >= 0.0)) throw std::invalid_argument("compensator: t must be non-negative");
  double total = params.nu[p] * t;
  for (std::size_t m = 0; m < ev.dim(); ++m) {
    const double a = params.alpha(p, m);
    const double b = params.beta(p, m);
    if (a == 0.0) continue;
    double s = 0.0;
    for (double tj : ev.times[m]) {
      if (tj >= t) break;
      s += 1.0 - std::exp(-b * (t - tj));
    }
    total += (a / b) * s;
  }
  return total;
}

// Bins events on a grid of width delta covering [0, horizon). The horizon must
// be an integer multiple of delta (within rounding slack).
inline BinnedCounts aggregate(const EventSequence& ev, double delta) {
  validate_events(ev);
  if (!(delta > 0.0)) throw std::invalid_argument("aggregate: delta must be positive");
  const double ratio = ev.horizon / delta;
  const auto k = static_cast<std::int64_t>(std::llround(ratio));
  if (k < 1 || std::fabs(ratio - static_cast<double>(k)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("aggregate: horizon must be an integer multiple of delta");
  BinnedCounts bc;
  bc.delta = delta;
  bc.counts.assign(static_cast<std::size_t>(k),
                   std::vector<std::int64_t>(ev.dim(), 0));
  for (std::size_t p = 0; p < ev.dim(); ++p) {
    for (double t : ev.times[p]) {
      auto j = static_cast<std::int64_t>(std::floor(t / delta));
      j = std::clamp(j, std::int64_t{0}, k - 1);
      ++bc.counts[static_cast<std::size_t>(j)][p];
    }
  }
  return bc;
}

// Row sums: per-bin totals across processes, as a univariate count series.
inline BinnedCounts superpose(const BinnedCounts& bc) {
  validate_counts(bc);
  BinnedCounts out;
  out.delta = bc.delta;
  out.counts.reserve(bc.bins());
  for (const auto& row : bc.counts) {
    const std::int64_t s = std::accumulate(row.begin(), row.end(), std::int64_t{0});
    out.counts.push_back({s});
  }
  return out;
}

}  // namespace hawkes_agg
