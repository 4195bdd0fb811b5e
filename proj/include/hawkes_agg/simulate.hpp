#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace hawkes_agg {

// Samples one realization on [0, horizon) by Ogata thinning. The dominating
// rate is the total intensity just after the most recent event, which bounds
// the decaying intensity until the next candidate; the bound is re-tightened
// after every candidate, accepted or not. With alpha = 0 every candidate is
// accepted and the output is an exact Poisson sample.
inline EventSequence simulate(const ModelParams& params, double horizon,
                              std::uint64_t seed) {
  validate_params(params, true);
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
  const Matrix gamma = branching_ratio(params);
  const double rho = spectral_radius(gamma);
  if (!(rho < 1.0))
    throw stationarity_error("simulate: spectral radius " + std::to_string(rho) + " >= 1");

  const std::size_t dim = params.dim();
  Rng rng(seed);
  EventSequence ev(dim, horizon);

  // excite(p, m) = sum over past m-events of alpha_pm exp(-beta_pm (t - t_j)).
  Matrix excite(dim, dim);
  std::vector<double> lam(dim);
  double t = 0.0;
  double bound = 0.0;
  for (double v : params.nu) bound += v;
  if (!(bound > 0.0)) {
    // No baseline and no history: intensity is identically zero.
    return ev;
  }

  while (true) {
    const double wait = rng.exponential(bound);
    const double tc = t + wait;
    if (tc >= horizon) break;
    for (std::size_t p = 0; p < dim; ++p)
      for (std::size_t m = 0; m < dim; ++m)
        excite(p, m) *= std::exp(-params.beta(p, m) * wait);
    t = tc;

    double lam_total = 0.0;
    for (std::size_t p = 0; p < dim; ++p) {
      double s = params.nu[p];
      for (std::size_t m = 0; m < dim; ++m) s += excite(p, m);
      lam[p] = s;
      lam_total += s;
    }

    // One uniform decides accept/reject and, on accept, the receiving process.
    const double u = rng.uniform01() * bound;
    if (u < lam_total) {
      std::size_t src = 0;
      double cum = lam[0];
      while (src + 1 < dim && u >= cum) cum += lam[++src];
      ev.times[src].push_back(t);
      double added = 0.0;
      for (std::size_t p = 0; p < dim; ++p) {
        excite(p, src) += params.alpha(p, src);
        added += params.alpha(p, src);
      }
      bound = lam_total + added;
    } else {
      bound = lam_total;
    }
    if (!(bound > 0.0)) break;
  }
  return ev;
}

}  // namespace hawkes_agg
