#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "hawkes_agg/study.hpp"
#include "oracles.hpp"

using namespace hawkes_agg;

namespace {

ModelParams small_truth() {
  ModelParams p;
  p.nu = {0.5};
  p.alpha = Matrix(1, 1, {0.8});
  p.beta = Matrix(1, 1, {2.0});
  return p;
}

StudyConfig small_study() {
  StudyConfig cfg;
  cfg.truth = small_truth();
  cfg.horizon = 200.0;
  cfg.delta = 1.0;
  cfg.reps = 3;
  cfg.methods = {"inar", "binned"};
  cfg.seed = 7;
  return cfg;
}

struct ThreadEnvGuard {
  explicit ThreadEnvGuard(const char* value) {
    setenv("HAWKES_AGG_THREADS", value, 1);
  }
  ~ThreadEnvGuard() { unsetenv("HAWKES_AGG_THREADS"); }
};

}  // namespace

TEST_CASE("trimming drops floor(trim n) values from each tail") {
  std::vector<double> v(40);
  std::iota(v.begin(), v.end(), 1.0);
  std::swap(v[0], v[39]);  // order must not matter
  const auto t = trimmed(v, 0.05);
  REQUIRE(t.size() == 36);
  REQUIRE(t.front() == 3.0);
  REQUIRE(t.back() == 38.0);

  REQUIRE(trimmed(v, 0.0).size() == 40);
  REQUIRE(trimmed({1.0, 2.0}, 0.49).size() == 2);
  REQUIRE(trimmed({1.0, 2.0}, 0.0) == std::vector<double>{1.0, 2.0});
  REQUIRE_THROWS_AS(trimmed({1.0}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(trimmed({1.0}, -0.1), std::invalid_argument);
}

TEST_CASE("moments and mse match hand computations") {
  const Moments m = moments({1.0, 2.0, 3.0, 4.0});
  REQUIRE(m.n == 4);
  REQUIRE(oracles::near(m.mean, 2.5, 1e-15));
  REQUIRE(oracles::near(m.sd, std::sqrt(5.0 / 3.0), 1e-15));

  const Moments single = moments({7.0});
  REQUIRE(single.sd == 0.0);
  REQUIRE(moments({}).n == 0);
  REQUIRE(std::isnan(moments({}).mean));

  REQUIRE(oracles::near(mse_against({1.0, 3.0}, 2.0), 1.0, 1e-15));
  REQUIRE(oracles::near(mse_against({0.5}, 0.3), 0.04, 1e-12));
  REQUIRE(std::isnan(mse_against({}, 1.0)));
}

TEST_CASE("parameter names line up with the flattened layout") {
  const auto names = param_names(2);
  REQUIRE(names.size() == param_count(2));
  REQUIRE(names[nu_index(2, 1)] == "nu_2");
  REQUIRE(names[alpha_index(2, 0, 1)] == "alpha_1_2");
  REQUIRE(names[beta_index(2, 1, 0)] == "beta_2_1");
}

TEST_CASE("worker pool honors the thread cap") {
  {
    const ThreadEnvGuard guard("2");
    REQUIRE(worker_count(8) == 2);
    REQUIRE(worker_count(1) == 1);
  }
  REQUIRE(worker_count(4) >= 1);
}

TEST_CASE("parallel_for covers every job exactly once and reports failures") {
  const ThreadEnvGuard guard("3");
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  REQUIRE(std::count(hits.begin(), hits.end(), 1) == 100);
  REQUIRE_THROWS_AS(parallel_for(10,
                                 [](std::size_t i) {
                                   if (i == 5) throw data_error("boom");
                                 }),
                    data_error);
}

TEST_CASE("study validates its configuration") {
  StudyConfig cfg = small_study();
  cfg.reps = 1;
  REQUIRE_THROWS_AS(run_study(cfg), std::invalid_argument);
  cfg = small_study();
  cfg.methods = {};
  REQUIRE_THROWS_AS(run_study(cfg), std::invalid_argument);
  cfg = small_study();
  cfg.methods = {"banana"};
  REQUIRE_THROWS_AS(run_study(cfg), std::invalid_argument);
  cfg = small_study();
  cfg.truth.alpha(0, 0) = 3.0;  // branching 1.5
  REQUIRE_THROWS_AS(run_study(cfg), stationarity_error);
}

TEST_CASE("study runs every method and appends the reference mle column") {
  const StudyConfig cfg = small_study();
  const StudyResult res = run_study(cfg);
  REQUIRE(res.methods.size() == 3);
  REQUIRE(res.methods[0].method == "inar");
  REQUIRE(res.methods[1].method == "binned");
  REQUIRE(res.methods[2].method == "mle");
  REQUIRE(res.truth == flatten(cfg.truth));
  for (const auto& run : res.methods) {
    REQUIRE(run.estimates.size() == 3);
    REQUIRE(run.failures == 0);
    for (std::size_t r = 0; r < 3; ++r) {
      REQUIRE(run.ok[r] == 1);
      REQUIRE(run.estimates[r].size() == param_count(1));
      for (double v : run.estimates[r]) REQUIRE(std::isfinite(v));
      REQUIRE(run.ks[r].size() == 1);
      REQUIRE(run.ks[r][0] >= 0.0);
      REQUIRE(run.ks[r][0] <= 1.0);
    }
  }
  // The reference column fits the exact times: it should sit near the truth
  // and transform them to near-uniform gaps.
  const MethodRun& mle = res.methods[2];
  const Moments nu_hat = moments(mle.column(nu_index(1, 0)));
  REQUIRE(nu_hat.mean > 0.2);
  REQUIRE(nu_hat.mean < 0.9);
  for (std::size_t r = 0; r < 3; ++r) REQUIRE(mle.converged[r] == 1);
}

TEST_CASE("study results are identical across thread counts and reruns") {
  const StudyConfig cfg = small_study();
  StudyResult serial, parallel;
  {
    const ThreadEnvGuard guard("1");
    serial = run_study(cfg);
  }
  {
    const ThreadEnvGuard guard("3");
    parallel = run_study(cfg);
  }
  const StudyResult again = run_study(cfg);
  for (std::size_t mi = 0; mi < serial.methods.size(); ++mi) {
    REQUIRE(serial.methods[mi].estimates == parallel.methods[mi].estimates);
    REQUIRE(serial.methods[mi].estimates == again.methods[mi].estimates);
    REQUIRE(serial.methods[mi].ks == parallel.methods[mi].ks);
  }
}

TEST_CASE("study records per-method failures without aborting") {
  StudyConfig cfg = small_study();
  cfg.reps = 2;
  cfg.methods = {"mcem", "inar"};
  cfg.mcem.samples = 0;  // every mcem replication throws
  const StudyResult res = run_study(cfg);
  REQUIRE(res.methods[0].method == "mcem");
  REQUIRE(res.methods[0].failures == 2);
  REQUIRE(std::isnan(res.methods[0].estimates[0][0]));
  REQUIRE(res.methods[1].failures == 0);
  REQUIRE(res.methods[2].failures == 0);
}

TEST_CASE("study exercises the mcem column at desk scale") {
  StudyConfig cfg;
  cfg.truth = small_truth();
  cfg.horizon = 150.0;
  cfg.delta = 1.0;
  cfg.reps = 2;
  cfg.methods = {"mcem"};
  cfg.seed = 11;
  cfg.mcem.samples = 5;
  cfg.mcem.allocations = 3;
  cfg.mcem.max_iter = 8;
  cfg.mcem.tol = 1e-2;
  const StudyResult res = run_study(cfg);
  const MethodRun& mcem = res.methods[0];
  REQUIRE(mcem.failures == 0);
  for (std::size_t r = 0; r < 2; ++r) {
    REQUIRE(mcem.ok[r] == 1);
    const double gamma = mcem.estimates[r][alpha_index(1, 0, 0)] /
                         mcem.estimates[r][beta_index(1, 0, 0)];
    REQUIRE(gamma > 0.0);
    REQUIRE(gamma < 1.0);
  }
}
