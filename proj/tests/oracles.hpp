#pragma once

// Independent reference implementations used only by tests: direct O(N^2)
// sums, quadrature, finite differences. Deliberately written in the most
// literal way possible, with no state shared with the library code under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "hawkes_agg/likelihood.hpp"
#include "hawkes_agg/model.hpp"

namespace oracles {

using hawkes_agg::EventSequence;
using hawkes_agg::Matrix;
using hawkes_agg::ModelParams;

inline bool near(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max({1.0, std::fabs(got), std::fabs(want)});
}

// R, R', R'' by direct summation over all source events strictly before t.
inline double direct_R(const std::vector<double>& src, double t, double beta, int order) {
  double s = 0.0;
  for (double u : src) {
    if (u >= t) break;
    const double d = t - u;
    double term = std::exp(-beta * d);
    for (int i = 0; i < order; ++i) term *= d;
    s += term;
  }
  return s;
}

// Full log-likelihood by direct summation, no recursions.
inline double direct_loglik(const ModelParams& p, const EventSequence& ev) {
  const std::size_t dim = p.dim();
  const double T = ev.horizon;
  double total = 0.0;
  for (std::size_t m = 0; m < dim; ++m) {
    total -= p.nu[m] * T;
    for (std::size_t n = 0; n < dim; ++n) {
      double s = 0.0;
      for (double u : ev.times[n]) s += 1.0 - std::exp(-p.beta(m, n) * (T - u));
      total -= p.alpha(m, n) / p.beta(m, n) * s;
    }
    for (double t : ev.times[m]) {
      double den = p.nu[m];
      for (std::size_t n = 0; n < dim; ++n)
        den += p.alpha(m, n) * direct_R(ev.times[n], t, p.beta(m, n), 0);
      total += std::log(den);
    }
  }
  return total;
}

// Gauss-Legendre nodes and weights on [a, b].
inline void gauss_legendre(double a, double b, int n, std::vector<double>& xs,
                           std::vector<double>& ws) {
  xs.assign(n, 0.0);
  ws.assign(n, 0.0);
  const double xm = 0.5 * (b + a);
  const double xl = 0.5 * (b - a);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (;;) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= 1e-15) break;
    }
    xs[i] = xm - xl * z;
    xs[n - 1 - i] = xm + xl * z;
    ws[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
    ws[n - 1 - i] = ws[i];
  }
}

// Integrates the conditional intensity over [0, t] by piecewise quadrature
// between event times, where the integrand is smooth.
inline double quadrature_compensator(const ModelParams& p, const EventSequence& ev,
                                     double t, std::size_t proc) {
  std::vector<double> breaks{0.0};
  for (const auto& ts : ev.times)
    for (double u : ts)
      if (u > 0.0 && u < t) breaks.push_back(u);
  breaks.push_back(t);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  std::vector<double> xs, ws;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] - breaks[i] <= 0.0) continue;
    gauss_legendre(breaks[i], breaks[i + 1], 24, xs, ws);
    for (std::size_t k = 0; k < xs.size(); ++k)
      total += ws[k] * hawkes_agg::cif_eval(p, ev, xs[k], proc);
  }
  return total;
}

// Central finite differences of a scalar function of flattened parameters.
inline std::vector<double> fd_gradient(const std::function<double(const ModelParams&)>& f,
                                       const ModelParams& at, double h) {
  const std::size_t dim = at.dim();
  std::vector<double> x = hawkes_agg::flatten(at);
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(hawkes_agg::unflatten(dim, xp)) - f(hawkes_agg::unflatten(dim, xm))) /
           (2.0 * h);
  }
  return g;
}

// Central finite differences of a vector function (used on analytic gradients
// to cross-check Hessians).
inline Matrix fd_jacobian(
    const std::function<std::vector<double>(const ModelParams&)>& f,
    const ModelParams& at, double h) {
  const std::size_t dim = at.dim();
  std::vector<double> x = hawkes_agg::flatten(at);
  Matrix j(x.size(), x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    std::vector<double> xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const std::vector<double> gp = f(hawkes_agg::unflatten(dim, xp));
    const std::vector<double> gm = f(hawkes_agg::unflatten(dim, xm));
    for (std::size_t r = 0; r < x.size(); ++r) j(r, c) = (gp[r] - gm[r]) / (2.0 * h);
  }
  return j;
}

// Piecewise-constant binned objective by brute force: the intensity at bin
// j's left edge sums alpha e^{-beta (j-i) delta} N_i over all earlier bins i.
inline double direct_binned_loglik(const ModelParams& p,
                                   const hawkes_agg::BinnedCounts& bc) {
  const std::size_t dim = p.dim();
  double total = 0.0;
  for (std::size_t q = 0; q < dim; ++q)
    for (std::size_t j = 0; j < bc.bins(); ++j) {
      double lam = p.nu[q];
      for (std::size_t m = 0; m < dim; ++m)
        for (std::size_t i = 0; i < j; ++i)
          lam += p.alpha(q, m) *
                 std::exp(-p.beta(q, m) * bc.delta * static_cast<double>(j - i)) *
                 static_cast<double>(bc.counts[i][m]);
      total += static_cast<double>(bc.counts[j][q]) * std::log(bc.delta * lam) -
               bc.delta * lam;
    }
  return total;
}

// Exact two-sided Kolmogorov-Smirnov distance against a unit exponential.
inline double ks_exp1(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = xs[i] <= 0.0 ? 0.0 : 1.0 - std::exp(-xs[i]);
    d = std::max(d, std::max((i + 1.0) / n - f, f - i / n));
  }
  return d;
}

}  // namespace oracles
