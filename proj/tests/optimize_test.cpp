#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hawkes_agg/optimize.hpp"
#include "hawkes_agg/simulate.hpp"
#include "oracles.hpp"

using namespace hawkes_agg;

namespace {

// Separable concave objective with a known maximizer c: f = -sum (log x - log c)^2.
Objective log_quadratic(const ModelParams& c) {
  const std::vector<double> target = flatten(c);
  const std::size_t dim = c.dim();
  return [target, dim](const ModelParams& p, DerivOrder order) {
    const std::vector<double> x = flatten(p);
    LikelihoodReport rep;
    const std::size_t np = x.size();
    if (order != DerivOrder::value) rep.gradient.assign(np, 0.0);
    if (order == DerivOrder::hessian) rep.hessian = Matrix(np, np);
    for (std::size_t i = 0; i < np; ++i) {
      const double u = std::log(x[i] / target[i]);
      rep.value -= u * u;
      if (order != DerivOrder::value) rep.gradient[i] = -2.0 * u / x[i];
      if (order == DerivOrder::hessian)
        rep.hessian(i, i) = -2.0 * (1.0 - u) / (x[i] * x[i]);
    }
    return rep;
  };
}

}  // namespace

TEST_CASE("maximizer finds the optimum of a separable concave objective") {
  ModelParams c;
  c.nu = {0.4};
  c.alpha = Matrix(1, 1, {0.2});
  c.beta = Matrix(1, 1, {2.0});
  ModelParams init;
  init.nu = {1.0};
  init.alpha = Matrix(1, 1, {0.05});
  init.beta = Matrix(1, 1, {1.0});
  const FitResult res = maximize(log_quadratic(c), init);
  REQUIRE(res.converged);
  REQUIRE_THAT(res.params.nu[0], Catch::Matchers::WithinRel(0.4, 1e-6));
  REQUIRE_THAT(res.params.alpha(0, 0), Catch::Matchers::WithinRel(0.2, 1e-6));
  REQUIRE_THAT(res.params.beta(0, 0), Catch::Matchers::WithinRel(2.0, 1e-6));
  REQUIRE(res.loglik <= 1e-10);
  REQUIRE(res.trajectory.size() == static_cast<std::size_t>(res.iterations) + 1);
  // The working point is exp(log x), so allow the 1-ulp round trip.
  const auto x0 = flatten(init);
  for (std::size_t i = 0; i < x0.size(); ++i)
    REQUIRE_THAT(res.trajectory.front()[i], Catch::Matchers::WithinRel(x0[i], 1e-15));
}

TEST_CASE("maximizer validates its starting point") {
  ModelParams c;
  c.nu = {0.4};
  c.alpha = Matrix(1, 1, {0.2});
  c.beta = Matrix(1, 1, {2.0});
  ModelParams bad = c;
  bad.alpha(0, 0) = 3.0;  // branching ratio 1.5
  REQUIRE_THROWS_AS(maximize(log_quadratic(c), bad), stationarity_error);
  bad = c;
  bad.nu[0] = -1.0;
  REQUIRE_THROWS_AS(maximize(log_quadratic(c), bad), std::invalid_argument);
}

TEST_CASE("continuous-time MLE recovers univariate parameters") {
  ModelParams truth;
  truth.nu = {0.5};
  truth.alpha = Matrix(1, 1, {0.8});
  truth.beta = Matrix(1, 1, {1.2});
  const EventSequence ev = simulate(truth, 2000.0, 424242);

  ModelParams init;
  init.nu = {0.2};
  init.alpha = Matrix(1, 1, {0.3});
  init.beta = Matrix(1, 1, {2.5});
  const FitResult res = fit_mle(ev, init);
  REQUIRE(res.converged);
  REQUIRE(res.loglik >= loglik(truth, ev));  // MLE beats the generator on its own data
  REQUIRE_THAT(res.params.nu[0], Catch::Matchers::WithinRel(0.5, 0.15));
  REQUIRE_THAT(res.params.alpha(0, 0), Catch::Matchers::WithinRel(0.8, 0.15));
  REQUIRE_THAT(res.params.beta(0, 0), Catch::Matchers::WithinRel(1.2, 0.15));

  // First-order condition at the reported optimum, in transformed coordinates.
  const auto g = loglik_gradient(res.params, ev);
  const auto x = flatten(res.params);
  for (std::size_t i = 0; i < g.size(); ++i)
    REQUIRE(std::fabs(g[i] * x[i]) < 1e-5);
}

TEST_CASE("objective never decreases along accepted steps") {
  ModelParams truth;
  truth.nu = {0.3, 0.3};
  truth.alpha = Matrix(2, 2, {0.7, 0.9, 0.6, 1.0});
  truth.beta = Matrix(2, 2, {1.5, 2.0, 2.0, 3.5});
  const EventSequence ev = simulate(truth, 300.0, 5150);
  ModelParams init;
  init.nu = {0.5, 0.5};
  init.alpha = Matrix(2, 2, 0.2);
  init.beta = Matrix(2, 2, 1.0);
  const FitResult res = fit_mle(ev, init);
  REQUIRE(res.converged);
  double prev = -1e300;
  for (const auto& step : res.trajectory) {
    const double v = loglik(unflatten(2, step), ev);
    REQUIRE(v >= prev - 1e-9);
    prev = v;
  }
  // Estimates respect the positivity boxes and the stationarity margin.
  for (double v : flatten(res.params)) REQUIRE(v >= 1e-12);
  REQUIRE(spectral_radius(branching_ratio(res.params)) < 1.0 - 1e-8);
}

TEST_CASE("fixed alpha reduces the fit to a Poisson submodel") {
  ModelParams truth;
  truth.nu = {1.5};
  truth.alpha = Matrix(1, 1, {0.0});
  truth.beta = Matrix(1, 1, {1.0});
  const EventSequence ev = simulate(truth, 1000.0, 888);

  ModelParams init;
  init.nu = {0.4};
  init.alpha = Matrix(1, 1, {1e-10});
  init.beta = Matrix(1, 1, {1.0});
  FitSettings cfg;
  cfg.fix_alpha = true;
  const FitResult res = fit_mle(ev, init, cfg);
  REQUIRE(res.converged);
  REQUIRE_THAT(res.params.alpha(0, 0), Catch::Matchers::WithinRel(1e-10, 1e-14));
  REQUIRE(res.params.beta(0, 0) == 1.0);
  // Poisson MLE for the baseline is N / T.
  const double want = static_cast<double>(ev.total_count()) / 1000.0;
  REQUIRE_THAT(res.params.nu[0], Catch::Matchers::WithinRel(want, 1e-6));
}
