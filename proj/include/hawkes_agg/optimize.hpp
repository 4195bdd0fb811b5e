#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "likelihood.hpp"

namespace hawkes_agg {

struct FitSettings {
  double grad_tol = 1e-6;  // transformed-gradient max-norm per unit of |loglik|
  int max_iter = 500;
  double alpha_floor = 1e-10;       // lower box for alpha entries
  double param_floor = 1e-12;       // lower box for nu and beta entries
  double param_ceil = 1e6;
  double stationarity_margin = 1e-6;  // reject rho(alpha/beta) >= 1 - margin
  // Hold the excitation (alpha and beta) at its initial values, fitting only
  // the baseline. With alpha pinned, beta is unidentifiable, so it is pinned
  // too; set alpha to the floor to get the Poisson submodel.
  bool fix_alpha = false;
  double armijo_c = 1e-4;
  int max_halvings = 60;
  double max_log_step = 5.0;        // trust cap on the step, in log coordinates
};

struct FitResult {
  ModelParams params;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  bool params_valid = true;
  std::vector<std::vector<double>> trajectory;  // flattened params per accepted step
};

using Objective = std::function<LikelihoodReport(const ModelParams&, DerivOrder)>;

// Maximizes a twice-differentiable objective over positive Hawkes parameters.
// Works in log coordinates, which enforces positivity and makes the chain rule
// cheap: g~_i = g_i x_i, H~_ij = H_ij x_i x_j + delta_ij g_i x_i. Each step is
// Newton when -H~ admits a Cholesky factorization and gradient ascent
// otherwise, followed by Armijo backtracking; candidate points violating the
// stationarity margin are rejected inside the line search.
//
// Some objectives (notably the binned approximation) push the branching ratio
// into the stationarity bound, where every unconstrained ascent direction is
// rejected. When the iterate hugs the bound and the gradient points outward,
// the step switches to Newton restricted to the tangent space of the surface
// rho = 1 - margin, sliding along the bound, and convergence is judged by the
// gradient projected onto that surface (the KKT condition).
inline FitResult maximize(const Objective& objective, const ModelParams& init,
                          const FitSettings& cfg = {}) {
  validate_params(init);
  const std::size_t dim = init.dim();
  const std::size_t np = param_count(dim);

  std::vector<double> x = flatten(init);
  const double lo_alpha = std::log(cfg.alpha_floor);
  const double lo_other = std::log(cfg.param_floor);
  const double hi = std::log(cfg.param_ceil);
  auto is_alpha = [&](std::size_t i) { return i >= dim && i < dim + dim * dim; };
  auto lower = [&](std::size_t i) { return is_alpha(i) ? lo_alpha : lo_other; };
  auto frozen = [&](std::size_t i) { return cfg.fix_alpha && i >= dim; };

  std::vector<double> theta(np);
  for (std::size_t i = 0; i < np; ++i) {
    const double lo = lower(i);
    theta[i] = std::clamp(std::log(x[i]), lo, hi);
    x[i] = std::exp(theta[i]);
  }
  ModelParams params = unflatten(dim, x);
  {
    const double rho = spectral_radius(branching_ratio(params));
    if (!(rho < 1.0 - cfg.stationarity_margin))
      throw stationarity_error("maximize: initial spectral radius " +
                               std::to_string(rho) + " too close to 1");
  }

  LikelihoodReport rep = objective(params, DerivOrder::hessian);
  if (!std::isfinite(rep.value))
    throw std::invalid_argument("maximize: objective not finite at initial point");

  FitResult result;
  result.trajectory.push_back(x);

  const double limit = 1.0 - cfg.stationarity_margin;
  // Working band around the stationarity bound: inside `band` the constraint
  // is treated as active; constrained steps aim for `slack_target` of room.
  constexpr double band = 1e-3;
  constexpr double slack_target = 1e-4;

  std::vector<double> gt(np), d(np), q(np), theta_c(np), x_c(np);
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    double gmax = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      double g = frozen(i) ? 0.0 : rep.gradient[i] * x[i];
      // Projected: ignore components pinned at an active box bound.
      if (theta[i] <= lower(i) + 1e-12 && g < 0.0) g = 0.0;
      if (theta[i] >= hi - 1e-12 && g > 0.0) g = 0.0;
      gt[i] = g;
      gmax = std::max(gmax, std::fabs(g));
    }

    // The stationarity bound is active when the iterate hugs it and the
    // gradient pushes outward; q is d rho / d theta there.
    const Matrix gamma = branching_ratio(params);
    const double slack = limit - spectral_radius(gamma);
    double qq = 0.0, qg = 0.0;
    bool active = slack < band && !cfg.fix_alpha;
    if (active) {
      Matrix w;
      active = perron_weights(gamma, w);
      if (active) {
        std::fill(q.begin(), q.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i)
          for (std::size_t j = 0; j < dim; ++j) {
            const double v = w(i, j) * gamma(i, j);
            q[alpha_index(dim, i, j)] = v;
            q[beta_index(dim, i, j)] = -v;
          }
        for (std::size_t i = 0; i < np; ++i) {
          qq += q[i] * q[i];
          qg += q[i] * gt[i];
        }
        active = qq > 0.0 && qg > 0.0;
      }
    }

    double gmax_eff = gmax;
    if (active) {
      gmax_eff = 0.0;
      for (std::size_t i = 0; i < np; ++i)
        gmax_eff = std::max(gmax_eff, std::fabs(gt[i] - qg / qq * q[i]));
    }
    // Scale-invariant test: the objective is only resolvable to about
    // eps * |value|, so an absolute gradient floor is unreachable when the
    // log-likelihood is large; measure against max(1, |value|).
    if (gmax_eff < cfg.grad_tol * std::max(1.0, std::fabs(rep.value))) {
      result.converged = true;
      break;
    }

    Matrix neg_h(np, np);
    for (std::size_t i = 0; i < np; ++i) {
      const bool fi = frozen(i);
      for (std::size_t j = 0; j < np; ++j) {
        const bool fj = frozen(j);
        if (fi || fj) {
          neg_h(i, j) = (i == j) ? 1.0 : 0.0;
          continue;
        }
        double v = rep.hessian(i, j) * x[i] * x[j];
        if (i == j) v += rep.gradient[i] * x[i];
        neg_h(i, j) = -v;
      }
    }

    bool have_direction = false;
    if (active) {
      // Slide along the bound: Newton on the tangent space of rho, with a
      // Levenberg shift when the reduced Hessian is not negative definite,
      // plus a normal component restoring the working slack. The tangent
      // basis comes from the Householder reflection sending axis k to q-hat.
      const double restore = slack - slack_target;
      const double qn = std::sqrt(qq);
      std::size_t k = 0;
      for (std::size_t i = 1; i < np; ++i)
        if (std::fabs(q[i]) > std::fabs(q[k])) k = i;
      const double sign = q[k] >= 0.0 ? 1.0 : -1.0;
      std::vector<double> v(np);
      double vv = 0.0;
      for (std::size_t i = 0; i < np; ++i) {
        v[i] = q[i] / qn + (i == k ? sign : 0.0);
        vv += v[i] * v[i];
      }
      const std::size_t nt = np - 1;
      Matrix z(np, nt);
      {
        std::size_t c = 0;
        for (std::size_t a = 0; a < np; ++a) {
          if (a == k) continue;
          for (std::size_t i = 0; i < np; ++i)
            z(i, c) = (i == a ? 1.0 : 0.0) - 2.0 * v[i] * v[a] / vv;
          ++c;
        }
      }
      Matrix hz(np, nt);
      for (std::size_t c = 0; c < nt; ++c)
        for (std::size_t r = 0; r < np; ++r) {
          double s = 0.0;
          for (std::size_t i = 0; i < np; ++i) s += neg_h(r, i) * z(i, c);
          hz(r, c) = s;  // = -(Htilde Z), since neg_h = -Htilde
        }
      Matrix a(nt, nt);
      std::vector<double> gr(nt);
      double hmax = 0.0;
      for (std::size_t c1 = 0; c1 < nt; ++c1) {
        double s = 0.0;
        for (std::size_t r = 0; r < np; ++r) s += z(r, c1) * gt[r];
        gr[c1] = s;
        for (std::size_t c2 = 0; c2 < nt; ++c2) {
          double h = 0.0;
          for (std::size_t r = 0; r < np; ++r) h += z(r, c1) * hz(r, c2);
          a(c1, c2) = h;  // = -(Z^T Htilde Z)
          hmax = std::max(hmax, std::fabs(h));
        }
      }
      double tau = 0.0;
      Matrix chol;
      std::vector<double> dr;
      for (int attempt = 0; attempt < 60; ++attempt) {
        Matrix shifted = a;
        for (std::size_t i = 0; i < nt; ++i) shifted(i, i) += tau;
        if (cholesky(shifted, chol)) {
          dr = cholesky_solve(chol, gr);
          break;
        }
        tau = tau == 0.0 ? 1e-8 * std::max(1.0, hmax) : tau * 10.0;
      }
      if (!dr.empty()) {
        double slope = 0.0;
        for (std::size_t r = 0; r < np; ++r) {
          double s = q[r] * restore / qq;
          for (std::size_t c = 0; c < nt; ++c) s += z(r, c) * dr[c];
          d[r] = s;
          slope += gt[r] * s;
        }
        have_direction = slope > 0.0;
      }
      if (!have_direction) {
        // Projected gradient ascent along the surface.
        for (std::size_t i = 0; i < np; ++i)
          d[i] = gt[i] - qg / qq * q[i] + restore / qq * q[i];
        have_direction = true;
      }
    }
    if (!have_direction) {
      Matrix chol;
      bool newton = cholesky(neg_h, chol);
      if (newton) {
        d = cholesky_solve(chol, gt);
        double slope = 0.0;
        for (std::size_t i = 0; i < np; ++i) slope += gt[i] * d[i];
        if (!(slope > 0.0)) newton = false;
      }
      if (!newton) d = gt;
    }

    double dmax = 0.0;
    for (double v : d) dmax = std::max(dmax, std::fabs(v));
    if (dmax > cfg.max_log_step)
      for (auto& v : d) v *= cfg.max_log_step / dmax;

    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < cfg.max_halvings; ++half, step *= 0.5) {
      for (std::size_t i = 0; i < np; ++i)
        theta_c[i] = frozen(i) ? theta[i]
                               : std::clamp(theta[i] + step * d[i], lower(i), hi);
      if (active) {
        // Retract onto the working surface: rho is 1-homogeneous in alpha, so
        // a uniform log-shift of the alpha block lands there exactly. Without
        // this, constraint curvature rejects every useful sliding step.
        std::vector<double> xr(np);
        for (std::size_t i = 0; i < np; ++i) xr[i] = std::exp(theta_c[i]);
        const double rho_c = spectral_radius(branching_ratio(unflatten(dim, xr)));
        if (rho_c > limit - slack_target) {
          const double shift = std::log((limit - slack_target) / rho_c);
          for (std::size_t i = dim; i < dim + dim * dim; ++i)
            if (!frozen(i)) theta_c[i] = std::clamp(theta_c[i] + shift, lower(i), hi);
        }
      }
      double slope_actual = 0.0;
      for (std::size_t i = 0; i < np; ++i) {
        x_c[i] = std::exp(theta_c[i]);
        slope_actual += gt[i] * (theta_c[i] - theta[i]);
      }
      if (!(slope_actual > 0.0)) continue;
      ModelParams cand = unflatten(dim, x_c);
      if (!(spectral_radius(branching_ratio(cand)) < 1.0 - cfg.stationarity_margin))
        continue;
      const double value = objective(cand, DerivOrder::value).value;
      if (!std::isfinite(value)) continue;
      if (value >= rep.value + cfg.armijo_c * slope_actual) {
        accepted = true;
        params = std::move(cand);
        theta = theta_c;
        x = x_c;
        break;
      }
    }
    if (!accepted) break;

    rep = objective(params, DerivOrder::hessian);
    result.trajectory.push_back(x);
    ++result.iterations;
  }

  result.params = params;
  result.loglik = rep.value;
  return result;
}

// Continuous-time maximum likelihood for fully observed event sequences.
inline FitResult fit_mle(const EventSequence& ev, const ModelParams& init,
                         const FitSettings& cfg = {}) {
  validate_events(ev);
  return maximize(
      [&ev](const ModelParams& p, DerivOrder order) {
        return evaluate_loglik(p, ev, order);
      },
      init, cfg);
}

}  // namespace hawkes_agg
