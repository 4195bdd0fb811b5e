#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hawkes_agg/model.hpp"
#include "hawkes_agg/rng.hpp"
#include "hawkes_agg/simulate.hpp"
#include "oracles.hpp"

using namespace hawkes_agg;

namespace {

ModelParams two_process_params() {
  ModelParams p;
  p.nu = {0.3, 0.3};
  p.alpha = Matrix(2, 2, {0.7, 0.9, 0.6, 1.0});
  p.beta = Matrix(2, 2, {1.5, 2.0, 2.0, 3.5});
  return p;
}

}  // namespace

TEST_CASE("rng streams are deterministic and well ranged") {
  Rng a(42), b(42), c(43);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const double ua = a.uniform01();
    const double ub = b.uniform01();
    const double uc = c.uniform01();
    all_equal = all_equal && ua == ub;
    any_diff = any_diff || ua != uc;
    REQUIRE(ua >= 0.0);
    REQUIRE(ua < 1.0);
  }
  REQUIRE(all_equal);
  REQUIRE(any_diff);

  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform_open();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    const auto k = r.below(7);
    REQUIRE(k < 7);
    REQUIRE(r.exponential(2.0) >= 0.0);
  }
  REQUIRE(mix_seed(1, 0) != mix_seed(1, 1));
  REQUIRE(mix_seed(1, 0) != mix_seed(2, 0));
  REQUIRE(mix_seed(123, 45) == mix_seed(123, 45));
}

TEST_CASE("simulation is reproducible by seed") {
  const ModelParams p = two_process_params();
  const EventSequence a = simulate(p, 200.0, 99);
  const EventSequence b = simulate(p, 200.0, 99);
  const EventSequence c = simulate(p, 200.0, 100);
  REQUIRE(a.times == b.times);
  REQUIRE(a.times != c.times);
}

TEST_CASE("simulated sequences are valid event data") {
  const ModelParams p = two_process_params();
  const EventSequence ev = simulate(p, 500.0, 7);
  REQUIRE_NOTHROW(validate_events(ev));
  REQUIRE(ev.horizon == 500.0);
  REQUIRE(ev.total_count() > 0);
}

TEST_CASE("simulation rejects unstable or malformed inputs") {
  ModelParams p = two_process_params();
  REQUIRE_THROWS_AS(simulate(p, 0.0, 1), std::invalid_argument);
  p.alpha(0, 0) = 10.0;  // spectral radius above 1
  REQUIRE_THROWS_AS(simulate(p, 100.0, 1), stationarity_error);
}

TEST_CASE("zero baseline yields an empty sequence") {
  ModelParams p = two_process_params();
  p.nu = {0.0, 0.0};
  const EventSequence ev = simulate(p, 1000.0, 5);
  REQUIRE(ev.total_count() == 0);
  REQUIRE(ev.horizon == 1000.0);
}

TEST_CASE("zero excitation reduces to a homogeneous Poisson process") {
  ModelParams p;
  p.nu = {2.0};
  p.alpha = Matrix(1, 1, {0.0});
  p.beta = Matrix(1, 1, {1.0});
  const double horizon = 2000.0;
  const EventSequence ev = simulate(p, horizon, 2026);
  const double n = static_cast<double>(ev.total_count());
  const double mean = p.nu[0] * horizon;
  // 4.5 sigma band around the Poisson mean; deterministic under the seed.
  REQUIRE(std::fabs(n - mean) < 4.5 * std::sqrt(mean));

  // Interarrivals of a homogeneous Poisson process are Exp(nu).
  std::vector<double> gaps;
  const auto& t = ev.times[0];
  for (std::size_t i = 1; i < t.size(); ++i) gaps.push_back(p.nu[0] * (t[i] - t[i - 1]));
  const double ks = oracles::ks_exp1(gaps);
  REQUIRE(ks < 1.36 / std::sqrt(static_cast<double>(gaps.size())));
}

TEST_CASE("event rate approaches the stationary intensity") {
  const ModelParams p = two_process_params();
  const double horizon = 2000.0;
  const EventSequence ev = simulate(p, horizon, 31337);
  const auto lam = stationary_intensity(p);
  for (std::size_t proc = 0; proc < 2; ++proc) {
    const double rate = static_cast<double>(ev.count(proc)) / horizon;
    REQUIRE(std::fabs(rate - lam[proc]) / lam[proc] < 0.10);
  }
}

TEST_CASE("three process simulation stays stable") {
  ModelParams p;
  p.nu = {0.2, 0.4, 0.1};
  p.alpha = Matrix(3, 3, {0.3, 0.1, 0.0, 0.2, 0.4, 0.1, 0.0, 0.3, 0.2});
  p.beta = Matrix(3, 3, {1.0, 2.0, 1.5, 2.5, 1.8, 1.1, 0.9, 2.2, 3.0});
  const EventSequence ev = simulate(p, 300.0, 11);
  REQUIRE_NOTHROW(validate_events(ev));
  const auto lam = stationary_intensity(p);
  for (std::size_t proc = 0; proc < 3; ++proc) {
    const double rate = static_cast<double>(ev.count(proc)) / 300.0;
    REQUIRE(std::fabs(rate - lam[proc]) / lam[proc] < 0.35);
  }
}
