#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "abcstat/simulation.hpp"

using namespace abcstat;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.distribution = DistributionSpec::normal(50, 17);
  config.scenario = Scenario::s1;
  config.methods = {Method::hozo, Method::wan, Method::abc};
  config.n_grid = {10, 40};
  config.replicates = 4;
  config.abc.n_iter = 500;
  config.abc.acceptance = Acceptance::percentile(2.0);
  config.master_seed = 314;
  return config;
}

bool same_records(const std::vector<AreRecord>& a, const std::vector<AreRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto eq = [](double x, double y) {
      return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    if (a[i].method != b[i].method || a[i].n != b[i].n ||
        !eq(a[i].are_mean, b[i].are_mean) || !eq(a[i].are_sd, b[i].are_sd) ||
        !eq(a[i].se_mean, b[i].se_mean) || !eq(a[i].se_sd, b[i].se_sd) ||
        a[i].replicates != b[i].replicates || a[i].failures != b[i].failures)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("relative error definition") {
  CHECK(relative_error(5.0, 5.0) == 0.0);
  CHECK(relative_error(6.0, 5.0) == 0.2);
  CHECK(relative_error(4.0, 5.0) == -0.2);
}

TEST_CASE("config validation names the offending field") {
  ExperimentConfig config = small_config();
  config.methods = {Method::bland};  // bland is s2-only
  try {
    validate_config(config);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::config_error);
    CHECK(std::string(e.what()).find("bland") != std::string::npos);
  }

  config = small_config();
  config.n_grid = {40, 10};
  CHECK_THROWS_AS(validate_config(config), Error);
  config = small_config();
  config.replicates = 0;
  CHECK_THROWS_AS(validate_config(config), Error);
  config = small_config();
  config.n_grid.clear();
  CHECK_THROWS_AS(validate_config(config), Error);
}

TEST_CASE("a single replicate reproduces its trial with zero standard errors") {
  ExperimentConfig config = small_config();
  config.replicates = 1;
  config.n_grid = {12};

  const auto records = run_experiment(config);
  REQUIRE(records.size() == config.methods.size());

  const RngStream stream = RngStream(config.master_seed).split(12).split(0);
  const TrialResult trial = run_trial(config.distribution, 12, config.scenario,
                                      config.methods, config.abc, stream);
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    CHECK(records[m].are_mean == *trial.methods[m].re_mean);
    CHECK(records[m].are_sd == *trial.methods[m].re_sd);
    CHECK(records[m].se_mean == 0.0);
    CHECK(records[m].se_sd == 0.0);
    CHECK(records[m].replicates == 1);
    CHECK(records[m].failures == 0);
  }
}

TEST_CASE("experiments are deterministic, also across thread counts") {
  const ExperimentConfig config = small_config();
  const auto a = run_experiment(config, 1);
  const auto b = run_experiment(config, 1);
  const auto c = run_experiment(config, 2);
  const auto d = run_experiment(config, 5);
  CHECK(same_records(a, b));
  CHECK(same_records(a, c));
  CHECK(same_records(a, d));
}

TEST_CASE("one cell recomputed alone matches the full grid") {
  const ExperimentConfig config = small_config();
  const auto grid = run_experiment(config);
  const auto cell = run_cell(config, 40);

  // the grid's n = 40 block is its second half
  REQUIRE(cell.size() == config.methods.size());
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    const AreRecord& from_grid = grid[config.methods.size() + m];
    CHECK(from_grid.n == 40);
    CHECK(same_records({from_grid}, {cell[m]}));
  }
}

TEST_CASE("method order does not change any method's record") {
  ExperimentConfig forward = small_config();
  ExperimentConfig shuffled = small_config();
  shuffled.methods = {Method::abc, Method::hozo, Method::wan};

  const auto a = run_experiment(forward);
  const auto b = run_experiment(shuffled);

  const auto find = [&](const std::vector<AreRecord>& records, Method m, int n) {
    for (const auto& rec : records)
      if (rec.method == m && rec.n == n) return rec;
    FAIL("record not found");
    return AreRecord{};
  };
  for (const int n : forward.n_grid)
    for (const Method m : forward.methods)
      CHECK(same_records({find(a, m, n)}, {find(b, m, n)}));
}

TEST_CASE("method failures are recorded as missing cells, not aborts") {
  ExperimentConfig config = small_config();
  config.abc.acceptance = Acceptance::epsilon(1e-300);  // nothing ever accepted

  const auto records = run_experiment(config);
  for (const auto& rec : records) {
    if (rec.method == Method::abc) {
      CHECK(rec.failures == config.replicates);
      CHECK(std::isnan(rec.are_mean));
      CHECK(std::isnan(rec.are_sd));
    } else {
      CHECK(rec.failures == 0);
      CHECK(std::isfinite(rec.are_mean));
    }
  }
}

TEST_CASE("wan SD error grows with n on exponential data") {
  // range-based scaling assumes normal tails, so on exponential data the
  // error moves away from zero as n grows
  ExperimentConfig config;
  config.distribution = DistributionSpec::exponential(10);
  config.scenario = Scenario::s1;
  config.methods = {Method::wan};
  config.n_grid = {40, 600};
  config.replicates = 200;
  config.master_seed = 1105;

  const auto records = run_experiment(config, 2);
  REQUIRE(records.size() == 2);
  CHECK(std::fabs(records[1].are_sd) > std::fabs(records[0].are_sd));
}

TEST_CASE("wan tracks the sample SD of normal data") {
  ExperimentConfig config;
  config.distribution = DistributionSpec::normal(50, 17);
  config.scenario = Scenario::s1;
  config.methods = {Method::wan};
  config.n_grid = {600};
  config.replicates = 30;
  config.master_seed = 99;

  const auto records = run_experiment(config, 2);
  REQUIRE(records.size() == 1);
  CHECK(std::fabs(records[0].are_sd) < 0.1);
  CHECK(records[0].failures == 0);
}
