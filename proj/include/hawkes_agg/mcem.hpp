#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "model.hpp"
#include "optimize.hpp"
#include "rng.hpp"

namespace hawkes_agg {

// Univariate surrogate for the superposed process: intensity
// nu + sum_j alpha exp(-beta (t - t_j)) over all past superposed events.
struct SuperposedParams {
  double nu = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  [[nodiscard]] double branching() const { return alpha / beta; }
};

// Collapses multivariate parameters to the superposed surrogate. The baseline
// is the exact superposed baseline sum; beta is the plain mean of all kernel
// decays; the branching ratio is matched to the observed totals through the
// stationary count identity E[N] = T nu / (1 - gamma), clamped to [0, 1-1e-6].
inline SuperposedParams reparameterize_totals(const ModelParams& params,
                                              double total_events, double horizon) {
  validate_params(params);
  if (!(horizon > 0.0))
    throw std::invalid_argument("reparameterize: horizon must be positive");
  if (!(total_events > 0.0)) throw data_error("reparameterize: no events observed");
  SuperposedParams sp;
  const std::size_t dim = params.dim();
  for (double v : params.nu) sp.nu += v;
  double bsum = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) bsum += params.beta(i, j);
  sp.beta = bsum / static_cast<double>(dim * dim);
  double gamma = 1.0 - sp.nu * horizon / total_events;
  gamma = std::clamp(gamma, 0.0, 1.0 - 1e-6);
  sp.alpha = sp.beta * gamma;
  return sp;
}

inline SuperposedParams reparameterize(const ModelParams& params,
                                       const BinnedCounts& counts) {
  validate_counts(counts);
  return reparameterize_totals(params, static_cast<double>(counts.total()),
                               counts.horizon());
}

namespace detail {

// Draws the earliest of `remaining` events on (a, b), where each event follows
// the density proportional to the surrogate intensity nu + excite exp(-beta (t-a)).
// With M(t) the integrated intensity from a and Z = M(b), the minimum has CDF
// 1 - (1 - M(t)/Z)^remaining, inverted by bisecting M. Reserving room for the
// later points this way keeps multi-count bins from collapsing onto the bin end.
// Returns the time and its exact log density under that law.
struct BinPoint {
  double time = 0.0;
  double logpdf = 0.0;
};

inline BinPoint sample_bin_point(double nu, double excite, double beta, double a,
                                 double b, double u, std::int64_t remaining = 1) {
  const double width = b - a;
  const double total =
      nu * width + excite / beta * (1.0 - std::exp(-beta * width));
  const double k = static_cast<double>(remaining);
  // Mass fraction of the minimum: 1 - (1-u)^{1/k}, computed without cancellation.
  const double frac = -std::expm1(std::log1p(-u) / k);
  const double target = frac * total;
  double lo = a, hi = b;
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mass =
        nu * (mid - a) + excite / beta * (1.0 - std::exp(-beta * (mid - a)));
    (mass < target ? lo : hi) = mid;
  }
  BinPoint out;
  out.time = 0.5 * (lo + hi);
  const double lam = nu + excite * std::exp(-beta * (out.time - a));
  out.logpdf = std::log(lam) - std::log(total);
  if (remaining > 1) {
    const double mass =
        nu * (out.time - a) + excite / beta * (1.0 - std::exp(-beta * (out.time - a)));
    out.logpdf += std::log(k) + (k - 1.0) * std::log1p(-std::min(mass / total, 1.0));
  }
  return out;
}

}  // namespace detail

// Samples superposed event times bin by bin. Each next point is the earliest
// of the points still owed to its bin, drawn against the surrogate intensity
// conditioned on everything sampled so far; with a frozen intensity this law
// is exactly the iid order statistics of the normalized intensity over the
// bin. Returns the times and the exact log density of the draw.
inline std::pair<std::vector<double>, double> sample_superposed_times(
    const SuperposedParams& sp, const BinnedCounts& superposed, Rng& rng) {
  validate_counts(superposed);
  if (superposed.dim() != 1)
    throw std::invalid_argument("sample_superposed_times: counts must be superposed");
  if (!(sp.nu > 0.0) || !(sp.beta > 0.0) || sp.alpha < 0.0)
    throw std::invalid_argument("sample_superposed_times: bad surrogate parameters");

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(superposed.total()));
  double logq = 0.0;
  double excite = 0.0;  // alpha-weighted excitation level at `cursor`
  double cursor = 0.0;
  const double delta = superposed.delta;
  for (std::size_t j = 0; j < superposed.bins(); ++j) {
    const auto c = superposed.counts[j][0];
    if (c == 0) continue;
    const double lo = delta * static_cast<double>(j);
    const double hi = delta * static_cast<double>(j + 1);
    excite *= std::exp(-sp.beta * (lo - cursor));
    cursor = lo;
    double prev = lo;
    for (std::int64_t i = 0; i < c; ++i) {
      const double u = rng.uniform_open();
      const auto pt = detail::sample_bin_point(sp.nu, excite, sp.beta, prev, hi, u, c - i);
      logq += pt.logpdf;
      excite = excite * std::exp(-sp.beta * (pt.time - prev)) + sp.alpha;
      prev = pt.time;
      times.push_back(pt.time);
    }
    cursor = prev;
  }
  return {std::move(times), logq};
}

// One labeled candidate sequence with its proposal bookkeeping.
struct Allocation {
  EventSequence events;
  std::vector<std::size_t> labels;  // process per superposed time, in time order
  double logq = 0.0;                // log probability of this label assignment
};

// Distributes superposed times uniformly over process labels within each bin,
// honoring the observed per-process counts exactly.
inline Allocation allocate(const std::vector<double>& times, const BinnedCounts& counts,
                           Rng& rng) {
  validate_counts(counts);
  const std::size_t dim = counts.dim();
  const double delta = counts.delta;
  Allocation out;
  out.events = EventSequence(dim, counts.horizon());
  out.labels.reserve(times.size());
  std::size_t idx = 0;
  std::vector<std::size_t> labels;
  for (std::size_t j = 0; j < counts.bins(); ++j) {
    const double hi = delta * static_cast<double>(j + 1);
    const std::size_t start = idx;
    while (idx < times.size() && times[idx] < hi) ++idx;
    const std::size_t got = idx - start;
    std::int64_t want = 0;
    labels.clear();
    for (std::size_t p = 0; p < dim; ++p) {
      const auto c = counts.counts[j][p];
      want += c;
      labels.insert(labels.end(), static_cast<std::size_t>(c), p);
      out.logq += std::lgamma(static_cast<double>(c) + 1.0);
    }
    out.logq -= std::lgamma(static_cast<double>(want) + 1.0);
    if (static_cast<std::int64_t>(got) != want)
      throw consistency_error("allocate: bin " + std::to_string(j) + " holds " +
                              std::to_string(got) + " times but counts say " +
                              std::to_string(want));
    for (std::size_t i = labels.size(); i > 1; --i)
      std::swap(labels[i - 1], labels[rng.below(i)]);
    for (std::size_t i = 0; i < got; ++i) {
      out.events.times[labels[i]].push_back(times[start + i]);
      out.labels.push_back(labels[i]);
    }
  }
  if (idx != times.size())
    throw consistency_error("allocate: times extend past the binned horizon");
  return out;
}

// One weighted proposal: superposed times plus the best of several label
// assignments, scored by the complete-data log-likelihood.
struct ProposalSample {
  std::vector<double> times;
  std::vector<std::size_t> labels;
  EventSequence events;
  double logq_seq = 0.0;
  double logq_alloc = 0.0;
  double logp = 0.0;
  double weight = 0.0;
};

inline ProposalSample best_allocation(const std::vector<double>& times, double logq_seq,
                                      const BinnedCounts& counts, int allocations,
                                      const ModelParams& params, Rng& rng) {
  if (allocations < 1)
    throw std::invalid_argument("best_allocation: need at least one allocation");
  ProposalSample best;
  best.times = times;
  best.logq_seq = logq_seq;
  best.logp = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < allocations; ++l) {
    Allocation cand = allocate(times, counts, rng);
    const double lp = evaluate_loglik(params, cand.events, DerivOrder::value).value;
    if (lp > best.logp) {
      best.logp = lp;
      best.logq_alloc = cand.logq;
      best.events = std::move(cand.events);
      best.labels = std::move(cand.labels);
    }
  }
  return best;
}

// Self-normalized importance weights from log target and log proposal values,
// stabilized by the max log ratio.
inline std::vector<double> importance_weights(const std::vector<double>& logp,
                                              const std::vector<double>& logq) {
  if (logp.size() != logq.size() || logp.empty())
    throw std::invalid_argument("importance_weights: mismatched inputs");
  std::vector<double> d(logp.size());
  double c = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::isnan(logp[i]) || std::isnan(logq[i]))
      throw std::invalid_argument("importance_weights: NaN input");
    d[i] = logp[i] - logq[i];
    c = std::max(c, d[i]);
  }
  if (!std::isfinite(c)) throw data_error("importance_weights: all weights vanished");
  double sum = 0.0;
  for (auto& v : d) {
    v = std::exp(v - c);
    sum += v;
  }
  for (auto& v : d) v /= sum;
  return d;
}

struct MCEMConfig {
  int samples = 20;       // Monte Carlo samples per E-step
  int allocations = 10;   // candidate label assignments per sample
  double tol = 1e-3;      // stop when ||theta_next - theta||_2 < tol
  int max_iter = 100;
  std::uint64_t seed = 0;
  FitSettings fit;        // inner maximizer settings for the M-step
};

// Surrogate decay rate used for Monte Carlo sample k: log-spaced over
// [beta_t/3, 3 beta_t] around the reparameterized rate. Spreading the proposal
// family over scales lets the importance weights pick the rate the data
// supports; a single shared rate feeds back on itself (the M-step refits the
// scale the proposal injected, inflating beta every EM iteration).
inline double proposal_scale(int k, int samples) {
  if (samples < 2) return 1.0;
  const double centered = static_cast<double>(k) / static_cast<double>(samples - 1) - 0.5;
  return std::exp(std::log(9.0) * centered);
}

// Draws the Monte Carlo samples for one E-step at the current parameters.
// Sample k always reuses the stream mix_seed(seed, k) and its fixed scale
// proposal_scale(k), so the proposals are common random numbers across EM
// iterations and the parameter trajectory can settle below the convergence
// tolerance.
inline std::vector<ProposalSample> e_step(const BinnedCounts& counts,
                                          const ModelParams& params,
                                          const MCEMConfig& cfg) {
  validate_counts(counts);
  if (counts.dim() != params.dim())
    throw std::invalid_argument("e_step: dimension mismatch");
  if (cfg.samples < 1) throw std::invalid_argument("e_step: need at least one sample");
  const SuperposedParams base = reparameterize(params, counts);
  const double gamma = base.branching();
  const BinnedCounts sup = superpose(counts);
  std::vector<ProposalSample> samples;
  samples.reserve(static_cast<std::size_t>(cfg.samples));
  std::vector<double> logp, logq;
  for (int k = 0; k < cfg.samples; ++k) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(k)));
    SuperposedParams sp = base;
    sp.beta = base.beta * proposal_scale(k, cfg.samples);
    sp.alpha = gamma * sp.beta;  // keeps the count-matched stationary intensity
    auto [times, logq_seq] = sample_superposed_times(sp, sup, rng);
    samples.push_back(
        best_allocation(times, logq_seq, counts, cfg.allocations, params, rng));
    logp.push_back(samples.back().logp);
    logq.push_back(samples.back().logq_seq + samples.back().logq_alloc);
  }
  const auto w = importance_weights(logp, logq);
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k].weight = w[k];
  return samples;
}

// Weighted complete-data objective Q(theta) = sum_k w_k log L(theta; x_k).
inline Objective weighted_objective(std::vector<ProposalSample> samples) {
  if (samples.empty()) throw std::invalid_argument("weighted_objective: no samples");
  auto shared = std::make_shared<std::vector<ProposalSample>>(std::move(samples));
  return [shared](const ModelParams& p, DerivOrder order) {
    LikelihoodReport total;
    const std::size_t np = param_count(p.dim());
    if (order != DerivOrder::value) total.gradient.assign(np, 0.0);
    if (order == DerivOrder::hessian) total.hessian = Matrix(np, np);
    for (const auto& s : *shared) {
      if (s.weight == 0.0) continue;
      const LikelihoodReport rep = evaluate_loglik(p, s.events, order);
      total.value += s.weight * rep.value;
      for (std::size_t i = 0; i < total.gradient.size(); ++i)
        total.gradient[i] += s.weight * rep.gradient[i];
      if (order == DerivOrder::hessian)
        for (std::size_t i = 0; i < np; ++i)
          for (std::size_t j = 0; j < np; ++j)
            total.hessian(i, j) += s.weight * rep.hessian(i, j);
    }
    return total;
  };
}

// M-step: maximize Q from a warm start at the current parameters.
inline FitResult m_step(const Objective& q, const ModelParams& current,
                        const FitSettings& cfg = {}) {
  FitResult res = maximize(q, current, cfg);
  if (res.iterations == 0 && !res.converged)
    throw numerical_error("m_step: no ascent step found from the current parameters");
  return res;
}

// Random stationary starting point: nu, alpha on (0.1, 1), beta on (1, 4),
// redrawn until the branching matrix has spectral radius below 0.95.
inline ModelParams init_params(std::size_t dim, Rng& rng) {
  if (dim == 0) throw std::invalid_argument("init_params: dimension must be positive");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ModelParams p;
    p.nu.resize(dim);
    p.alpha = Matrix(dim, dim);
    p.beta = Matrix(dim, dim);
    for (auto& v : p.nu) v = rng.uniform(0.1, 1.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) p.alpha(i, j) = rng.uniform(0.1, 1.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) p.beta(i, j) = rng.uniform(1.0, 4.0);
    if (spectral_radius(branching_ratio(p)) < 0.95) return p;
  }
  throw numerical_error("init_params: could not draw a stationary start");
}

// Monte Carlo EM for binned Hawkes observations.
inline FitResult mcem_fit(const BinnedCounts& counts, const MCEMConfig& cfg = {}) {
  validate_counts(counts);
  if (counts.total() == 0) throw data_error("mcem_fit: no events in any bin");
  Rng init_rng(mix_seed(cfg.seed, 0x5eed));
  ModelParams params = init_params(counts.dim(), init_rng);

  FitResult result;
  result.trajectory.push_back(flatten(params));
  Objective q;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    q = weighted_objective(e_step(counts, params, cfg));
    const FitResult inner = m_step(q, params, cfg.fit);
    const auto prev = flatten(params);
    const auto next = flatten(inner.params);
    double step2 = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i)
      step2 += (next[i] - prev[i]) * (next[i] - prev[i]);
    params = inner.params;
    result.iterations = iter;
    result.trajectory.push_back(next);
    if (std::sqrt(step2) < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  result.params = params;
  result.loglik = q(params, DerivOrder::value).value;
  return result;
}

}  // namespace hawkes_agg
