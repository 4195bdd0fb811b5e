#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hawkes_agg/errors.hpp"
#include "hawkes_agg/likelihood.hpp"
#include "hawkes_agg/linalg.hpp"
#include "hawkes_agg/model.hpp"
#include "hawkes_agg/optimize.hpp"

namespace hawkes_agg {

// Piecewise-constant approximation: bin j of process p is Poisson with mean
// delta * lambda_p at the left bin edge, where past counts act as point masses
// at their own left edges. The decayed mass recursion per (p, m) pair is
//   A_j = e^{-beta delta} (A_{j-1} + N_{j-1}^m),  A_0 = 0,
// with derivatives in beta tracked the same way. All inter-bin excitation is
// kept; intra-bin excitation is ignored by construction.
inline LikelihoodReport binned_loglik(const ModelParams& params,
                                      const BinnedCounts& counts,
                                      DerivOrder order = DerivOrder::value) {
  validate_params(params);
  validate_counts(counts);
  const std::size_t dim = params.dim();
  if (counts.dim() != dim)
    throw std::invalid_argument("binned_loglik: dimension mismatch");
  const double delta = counts.delta;
  const std::size_t bins = counts.bins();
  const std::size_t np = param_count(dim);

  LikelihoodReport out;
  out.value = 0.0;
  if (order != DerivOrder::value) out.gradient.assign(np, 0.0);
  if (order == DerivOrder::hessian) out.hessian = Matrix(np, np);

  // Per source process m: A, dA/dbeta, d2A/dbeta2 for the receiving row p.
  std::vector<double> a(dim), d1(dim), d2(dim);
  for (std::size_t p = 0; p < dim; ++p) {
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(d1.begin(), d1.end(), 0.0);
    std::fill(d2.begin(), d2.end(), 0.0);
    for (std::size_t j = 0; j < bins; ++j) {
      if (j > 0) {
        for (std::size_t m = 0; m < dim; ++m) {
          const double decay = std::exp(-params.beta(p, m) * delta);
          const double base = a[m] + static_cast<double>(counts.counts[j - 1][m]);
          d2[m] = decay * (d2[m] - 2.0 * delta * d1[m] + delta * delta * base);
          d1[m] = decay * (d1[m] - delta * base);
          a[m] = decay * base;
        }
      }
      double lam = params.nu[p];
      for (std::size_t m = 0; m < dim; ++m) lam += params.alpha(p, m) * a[m];
      const double n = static_cast<double>(counts.counts[j][p]);
      out.value += n * std::log(delta * lam) - delta * lam;
      if (order == DerivOrder::value) continue;

      const double resid = n / lam - delta;
      out.gradient[nu_index(dim, p)] += resid;
      for (std::size_t m = 0; m < dim; ++m) {
        out.gradient[alpha_index(dim, p, m)] += resid * a[m];
        out.gradient[beta_index(dim, p, m)] += resid * params.alpha(p, m) * d1[m];
      }
      if (order != DerivOrder::hessian) continue;

      // d2v/dx dy = -n/lam^2 dlam/dx dlam/dy + resid d2lam/dx dy, and lambda
      // is linear in nu and alpha, so only alpha-beta and beta-beta carry the
      // second term.
      const double curv = -n / (lam * lam);
      std::vector<std::size_t> active;
      std::vector<double> dlam;
      active.push_back(nu_index(dim, p));
      dlam.push_back(1.0);
      for (std::size_t m = 0; m < dim; ++m) {
        active.push_back(alpha_index(dim, p, m));
        dlam.push_back(a[m]);
        active.push_back(beta_index(dim, p, m));
        dlam.push_back(params.alpha(p, m) * d1[m]);
      }
      for (std::size_t x = 0; x < active.size(); ++x)
        for (std::size_t y = x; y < active.size(); ++y) {
          const double v = curv * dlam[x] * dlam[y];
          out.hessian(active[x], active[y]) += v;
          if (x != y) out.hessian(active[y], active[x]) += v;
        }
      for (std::size_t m = 0; m < dim; ++m) {
        const std::size_t ia = alpha_index(dim, p, m);
        const std::size_t ib = beta_index(dim, p, m);
        out.hessian(ia, ib) += resid * d1[m];
        out.hessian(ib, ia) += resid * d1[m];
        out.hessian(ib, ib) += resid * params.alpha(p, m) * d2[m];
      }
    }
  }
  return out;
}

// Maximizes the piecewise-constant binned objective under the same positivity
// and stationarity constraints as the exact fit.
inline FitResult fit_binned_loglik(const BinnedCounts& counts, const ModelParams& init,
                                   const FitSettings& cfg = {}) {
  validate_counts(counts);
  if (counts.total() == 0)
    throw data_error("fit_binned_loglik: counts are all zero");
  Objective objective = [&counts](const ModelParams& p, DerivOrder order) {
    return binned_loglik(p, counts, order);
  };
  return maximize(objective, init, cfg);
}

// Configuration of the count-autoregression baseline. lag_order 0 means
// auto: ceil(10 / delta) capped at 20, roughly ten time units of kernel
// support.
struct InarConfig {
  int lag_order = 0;
  double ridge = 1e-8;
};

// Conditional-least-squares coefficients of the multivariate count
// autoregression: counts of bin j on an intercept and p lagged count vectors.
// Row layout of the result: [intercept, lag1 (P entries), ..., lagp].
// Column t targets process t.
inline Matrix inar_coefficients(const BinnedCounts& counts, int lag, double ridge) {
  validate_counts(counts);
  const std::size_t dim = counts.dim();
  const std::size_t bins = counts.bins();
  if (lag < 1) throw std::invalid_argument("inar_coefficients: lag must be positive");
  if (static_cast<std::size_t>(lag) >= bins)
    throw std::invalid_argument("inar_coefficients: lag must be below the bin count");
  const std::size_t rows = bins - static_cast<std::size_t>(lag);
  const std::size_t cols = 1 + static_cast<std::size_t>(lag) * dim;

  // Normal equations with a ridge; the intercept is not penalized any
  // differently (the ridge is a numerical guard, not a prior).
  Matrix xtx(cols, cols);
  Matrix xty(cols, dim);
  std::vector<double> row(cols);
  for (std::size_t j = static_cast<std::size_t>(lag); j < bins; ++j) {
    row[0] = 1.0;
    for (int k = 1; k <= lag; ++k)
      for (std::size_t m = 0; m < dim; ++m)
        row[1 + static_cast<std::size_t>(k - 1) * dim + m] =
            static_cast<double>(counts.counts[j - static_cast<std::size_t>(k)][m]);
    for (std::size_t r = 0; r < cols; ++r) {
      for (std::size_t c = r; c < cols; ++c) xtx(r, c) += row[r] * row[c];
      for (std::size_t t = 0; t < dim; ++t)
        xty(r, t) += row[r] * static_cast<double>(counts.counts[j][t]);
    }
  }
  for (std::size_t r = 0; r < cols; ++r) {
    for (std::size_t c = 0; c < r; ++c) xtx(r, c) = xtx(c, r);
    xtx(r, r) += ridge;
  }
  (void)rows;

  Matrix coef(cols, dim);
  std::vector<double> rhs(cols), sol;
  for (std::size_t t = 0; t < dim; ++t) {
    for (std::size_t r = 0; r < cols; ++r) rhs[r] = xty(r, t);
    try {
      sol = solve(xtx, rhs);
    } catch (const numerical_error&) {
      throw numerical_error(
          "inar_coefficients: singular design matrix; raise the ridge setting");
    }
    for (std::size_t r = 0; r < cols; ++r) coef(r, t) = sol[r];
  }
  return coef;
}

namespace detail {

// Least-squares fit of g(k delta) = alpha e^{-beta k delta} to grid values.
// Log-linear on the positive values when at least two exist; otherwise a
// profiled one-dimensional search over beta (alpha closed form given beta).
// Returns {alpha, beta, ok}; ok=false means no positive value existed.
struct KernelFit {
  double alpha = 0.0;
  double beta = 0.0;
  bool ok = false;
};

inline KernelFit fit_exponential_grid(const std::vector<double>& g, double delta) {
  KernelFit out;
  std::size_t positives = 0;
  for (double v : g)
    if (v > 0.0) ++positives;
  if (positives == 0) return out;
  out.ok = true;
  if (positives >= 2) {
    // Regress log g_k on k delta over the positive entries.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, n = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!(g[k] > 0.0)) continue;
      const double x = delta * static_cast<double>(k + 1);
      const double y = std::log(g[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      n += 1.0;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    out.beta = -slope;
    out.alpha = std::exp(intercept);
    return out;
  }
  // One positive value: profile beta on a log grid, alpha closed form.
  double best_sse = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= 400; ++step) {
    const double beta = std::exp(std::log(1e-3) +
                                 (std::log(50.0) - std::log(1e-3)) * step / 400.0);
    double se = 0.0, ee = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double e = std::exp(-beta * delta * static_cast<double>(k + 1));
      se += g[k] * e;
      ee += e * e;
    }
    const double alpha = se / ee;
    double sse = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double r = g[k] - alpha * std::exp(-beta * delta * static_cast<double>(k + 1));
      sse += r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      out.alpha = alpha;
      out.beta = beta;
    }
  }
  return out;
}

}  // namespace detail

// Count-autoregression baseline: lag coefficients over delta estimate the
// kernel on a grid, then each (p, m) entry gets an exponential fitted to its
// grid values. Estimates can be negative or otherwise infeasible; they are
// returned as-is with params_valid flagging usability.
inline FitResult fit_inar(const BinnedCounts& counts, const InarConfig& config = {}) {
  validate_counts(counts);
  if (counts.total() == 0) throw data_error("fit_inar: counts are all zero");
  const std::size_t dim = counts.dim();
  int lag = config.lag_order;
  if (lag == 0)
    lag = std::min(20, static_cast<int>(std::ceil(10.0 / counts.delta)));
  if (config.ridge < 0.0) throw std::invalid_argument("fit_inar: ridge must be >= 0");

  const Matrix coef = inar_coefficients(counts, lag, config.ridge);

  FitResult res;
  res.params.nu.resize(dim);
  res.params.alpha = Matrix(dim, dim);
  res.params.beta = Matrix(dim, dim);
  for (std::size_t p = 0; p < dim; ++p) res.params.nu[p] = coef(0, p) / counts.delta;

  std::vector<detail::KernelFit> fits(dim * dim);
  std::vector<double> grid(static_cast<std::size_t>(lag));
  double beta_sum = 0.0;
  std::size_t beta_n = 0;
  for (std::size_t p = 0; p < dim; ++p)
    for (std::size_t m = 0; m < dim; ++m) {
      for (int k = 1; k <= lag; ++k)
        grid[static_cast<std::size_t>(k - 1)] =
            coef(1 + static_cast<std::size_t>(k - 1) * dim + m, p) / counts.delta;
      auto& f = fits[p * dim + m];
      f = detail::fit_exponential_grid(grid, counts.delta);
      if (f.ok) {
        beta_sum += f.beta;
        ++beta_n;
      }
    }
  const double beta_fallback = beta_n > 0 ? beta_sum / static_cast<double>(beta_n) : 1.0;

  res.params_valid = true;
  for (std::size_t p = 0; p < dim; ++p) {
    if (!(res.params.nu[p] > 0.0)) res.params_valid = false;
    for (std::size_t m = 0; m < dim; ++m) {
      const auto& f = fits[p * dim + m];
      if (f.ok) {
        res.params.alpha(p, m) = f.alpha;
        res.params.beta(p, m) = f.beta;
        if (!(f.alpha >= 0.0) || !(f.beta > 0.0)) res.params_valid = false;
      } else {
        // No positive grid values: no excitation evidence for this entry.
        res.params.alpha(p, m) = 0.0;
        res.params.beta(p, m) = beta_fallback;
        res.params_valid = false;
      }
    }
  }
  if (res.params_valid) {
    bool stationary = true;
    for (std::size_t p = 0; p < dim && stationary; ++p)
      for (std::size_t m = 0; m < dim; ++m)
        if (!(res.params.alpha(p, m) / res.params.beta(p, m) < 1.0)) stationary = false;
    if (stationary) stationary = spectral_radius(branching_ratio(res.params)) < 1.0;
    res.params_valid = stationary;
  }
  res.converged = true;
  res.iterations = 0;
  return res;
}

}  // namespace hawkes_agg
