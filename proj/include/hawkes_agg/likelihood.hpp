#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "model.hpp"

namespace hawkes_agg {

// Flattened parameter layout used by gradients, Hessians, and optimizer
// trajectories: (nu_1..nu_P, alpha row-major, beta row-major).
inline std::size_t param_count(std::size_t dim) { return dim * (1 + 2 * dim); }
inline std::size_t nu_index(std::size_t dim, std::size_t m) {
  (void)dim;
  return m;
}
inline std::size_t alpha_index(std::size_t dim, std::size_t m, std::size_t n) {
  return dim + m * dim + n;
}
inline std::size_t beta_index(std::size_t dim, std::size_t m, std::size_t n) {
  return dim + dim * dim + m * dim + n;
}

inline std::vector<double> flatten(const ModelParams& p) {
  const std::size_t dim = p.dim();
  std::vector<double> out(param_count(dim));
  for (std::size_t m = 0; m < dim; ++m) out[nu_index(dim, m)] = p.nu[m];
  for (std::size_t m = 0; m < dim; ++m)
    for (std::size_t n = 0; n < dim; ++n) {
      out[alpha_index(dim, m, n)] = p.alpha(m, n);
      out[beta_index(dim, m, n)] = p.beta(m, n);
    }
  return out;
}

inline ModelParams unflatten(std::size_t dim, const std::vector<double>& v) {
  if (v.size() != param_count(dim))
    throw std::invalid_argument("unflatten: wrong length");
  ModelParams p;
  p.nu.resize(dim);
  p.alpha = Matrix(dim, dim);
  p.beta = Matrix(dim, dim);
  for (std::size_t m = 0; m < dim; ++m) p.nu[m] = v[nu_index(dim, m)];
  for (std::size_t m = 0; m < dim; ++m)
    for (std::size_t n = 0; n < dim; ++n) {
      p.alpha(m, n) = v[alpha_index(dim, m, n)];
      p.beta(m, n) = v[beta_index(dim, m, n)];
    }
  return p;
}

// Exponential-kernel recursion state. For the k-th event of process m and
// source process n (times u ranging over n-events strictly before t_k^m):
//   R[m][n][k]   = sum exp(-beta_mn (t_k^m - u))
//   Rp[m][n][k]  = sum (t_k^m - u)   exp(-beta_mn (t_k^m - u))   [= -dR/dbeta]
//   Rpp[m][n][k] = sum (t_k^m - u)^2 exp(-beta_mn (t_k^m - u))   [= +d2R/dbeta2]
// Maintained in O(N) per (m, n): decay the state across [t_{k-1}^m, t_k^m) and
// absorb the n-events inside that window. The closed-left window picks up
// cross-process events tied exactly at t_{k-1}^m, and for n = m it absorbs the
// previous own event, which is the classic (1 + R) update.
struct RecursionState {
  std::vector<std::vector<std::vector<double>>> R;
  std::vector<std::vector<std::vector<double>>> Rp;
  std::vector<std::vector<std::vector<double>>> Rpp;
};

inline RecursionState build_recursions(const EventSequence& ev, const Matrix& beta,
                                       bool with_derivatives = true) {
  const std::size_t dim = ev.dim();
  if (beta.rows() != dim || beta.cols() != dim)
    throw std::invalid_argument("build_recursions: beta must be P x P");
  RecursionState st;
  st.R.assign(dim, std::vector<std::vector<double>>(dim));
  if (with_derivatives) {
    st.Rp.assign(dim, std::vector<std::vector<double>>(dim));
    st.Rpp.assign(dim, std::vector<std::vector<double>>(dim));
  }
  for (std::size_t m = 0; m < dim; ++m) {
    const auto& tm = ev.times[m];
    for (std::size_t n = 0; n < dim; ++n) {
      const auto& tn = ev.times[n];
      const double b = beta(m, n);
      if (!(b > 0.0)) throw std::invalid_argument("build_recursions: beta must be positive");
      auto& rv = st.R[m][n];
      rv.assign(tm.size(), 0.0);
      double r = 0.0, rp = 0.0, rpp = 0.0;
      std::size_t src = 0;
      if (with_derivatives) {
        st.Rp[m][n].assign(tm.size(), 0.0);
        st.Rpp[m][n].assign(tm.size(), 0.0);
      }
      for (std::size_t k = 0; k < tm.size(); ++k) {
        const double tk = tm[k];
        if (k > 0) {
          const double dt = tk - tm[k - 1];
          const double decay = std::exp(-b * dt);
          if (with_derivatives) {
            rpp = decay * (rpp + 2.0 * dt * rp + dt * dt * r);
            rp = decay * (rp + dt * r);
          }
          r *= decay;
        }
        while (src < tn.size() && tn[src] < tk) {
          const double d = tk - tn[src];
          const double e = std::exp(-b * d);
          r += e;
          if (with_derivatives) {
            rp += d * e;
            rpp += d * d * e;
          }
          ++src;
        }
        rv[k] = r;
        if (with_derivatives) {
          st.Rp[m][n][k] = rp;
          st.Rpp[m][n][k] = rpp;
        }
      }
    }
  }
  return st;
}

enum class DerivOrder { value, gradient, hessian };

// Log-likelihood with optional analytic derivatives in the flattened layout.
// Gradient and Hessian sized for the order requested; the Hessian's blocks
// across different receiving processes are exactly zero.
struct LikelihoodReport {
  double value = 0.0;
  std::vector<double> gradient;
  Matrix hessian;
};

inline LikelihoodReport evaluate_loglik(const ModelParams& params, const EventSequence& ev,
                                        DerivOrder order = DerivOrder::value) {
  validate_params(params);
  validate_events(ev);
  const std::size_t dim = params.dim();
  if (ev.dim() != dim) throw std::invalid_argument("loglik: dimension mismatch");
  const double T = ev.horizon;
  const bool want_g = order != DerivOrder::value;
  const bool want_h = order == DerivOrder::hessian;
  const RecursionState rec = build_recursions(ev, params.beta, want_g);

  LikelihoodReport out;
  if (want_g) out.gradient.assign(param_count(dim), 0.0);
  if (want_h) out.hessian = Matrix(param_count(dim), param_count(dim));
  auto sym = [&](std::size_t i, std::size_t j, double v) {
    out.hessian(i, j) += v;
    if (i != j) out.hessian(j, i) += v;
  };

  std::vector<double> S(dim), S1(dim), S2(dim);
  for (std::size_t m = 0; m < dim; ++m) {
    const double nu_m = params.nu[m];
    const std::size_t inu = nu_index(dim, m);

    // Kernel integrals over [t, T] for every source event: S = sum 1-e^{-bu},
    // S1 = sum u e^{-bu}, S2 = sum u^2 e^{-bu} with u = T - t.
    for (std::size_t n = 0; n < dim; ++n) {
      const double b = params.beta(m, n);
      double s = 0.0, s1 = 0.0, s2 = 0.0;
      for (double tj : ev.times[n]) {
        const double u = T - tj;
        const double e = std::exp(-b * u);
        s += 1.0 - e;
        if (want_g) s1 += u * e;
        if (want_h) s2 += u * u * e;
      }
      S[n] = s;
      S1[n] = s1;
      S2[n] = s2;
    }

    out.value -= nu_m * T;
    for (std::size_t n = 0; n < dim; ++n)
      out.value -= params.alpha(m, n) / params.beta(m, n) * S[n];

    if (want_g) {
      out.gradient[inu] -= T;
      for (std::size_t n = 0; n < dim; ++n) {
        const double a = params.alpha(m, n);
        const double b = params.beta(m, n);
        out.gradient[alpha_index(dim, m, n)] -= S[n] / b;
        out.gradient[beta_index(dim, m, n)] += a / (b * b) * S[n] - a / b * S1[n];
        if (want_h) {
          const std::size_t ia = alpha_index(dim, m, n);
          const std::size_t ib = beta_index(dim, m, n);
          sym(ia, ib, S[n] / (b * b) - S1[n] / b);
          out.hessian(ib, ib) += -2.0 * a / (b * b * b) * S[n] +
                                 2.0 * a / (b * b) * S1[n] + a / b * S2[n];
        }
      }
    }

    for (std::size_t k = 0; k < ev.times[m].size(); ++k) {
      double den = nu_m;
      for (std::size_t n = 0; n < dim; ++n)
        den += params.alpha(m, n) * rec.R[m][n][k];
      out.value += std::log(den);
      if (!want_g) continue;
      const double invD = 1.0 / den;
      out.gradient[inu] += invD;
      for (std::size_t n = 0; n < dim; ++n) {
        const double a = params.alpha(m, n);
        out.gradient[alpha_index(dim, m, n)] += rec.R[m][n][k] * invD;
        out.gradient[beta_index(dim, m, n)] -= a * rec.Rp[m][n][k] * invD;
      }
      if (!want_h) continue;
      const double invD2 = invD * invD;
      out.hessian(inu, inu) -= invD2;
      for (std::size_t n = 0; n < dim; ++n) {
        const double a_n = params.alpha(m, n);
        const double R_n = rec.R[m][n][k];
        const double Rp_n = rec.Rp[m][n][k];
        const std::size_t ia_n = alpha_index(dim, m, n);
        const std::size_t ib_n = beta_index(dim, m, n);
        sym(inu, ia_n, -R_n * invD2);
        sym(inu, ib_n, a_n * Rp_n * invD2);
        sym(ib_n, ia_n, -Rp_n * invD);
        sym(ib_n, ib_n, a_n * rec.Rpp[m][n][k] * invD);
        for (std::size_t n2 = n; n2 < dim; ++n2) {
          sym(ia_n, alpha_index(dim, m, n2), -R_n * rec.R[m][n2][k] * invD2);
          sym(ib_n, beta_index(dim, m, n2),
              -a_n * Rp_n * params.alpha(m, n2) * rec.Rp[m][n2][k] * invD2);
        }
        for (std::size_t n2 = 0; n2 < dim; ++n2) {
          // d2/(dbeta_mn dalpha_mn2) product part, all source pairs.
          sym(ib_n, alpha_index(dim, m, n2),
              a_n * Rp_n * rec.R[m][n2][k] * invD2);
        }
      }
    }
  }
  return out;
}

inline double loglik(const ModelParams& params, const EventSequence& ev) {
  return evaluate_loglik(params, ev, DerivOrder::value).value;
}

inline std::vector<double> loglik_gradient(const ModelParams& params,
                                           const EventSequence& ev) {
  return evaluate_loglik(params, ev, DerivOrder::gradient).gradient;
}

inline Matrix loglik_hessian(const ModelParams& params, const EventSequence& ev) {
  return evaluate_loglik(params, ev, DerivOrder::hessian).hessian;
}

}  // namespace hawkes_agg
