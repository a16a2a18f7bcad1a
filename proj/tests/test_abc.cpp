#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "abcstat/abc.hpp"
#include "support/properties.hpp"

using namespace abcstat;

namespace {

errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return errc::config_error;
}

SummaryStats stats_s1(double lo, double med, double hi, int n) {
  SummaryStats s;
  s.x_min = lo;
  s.x_med = med;
  s.x_max = hi;
  s.n = n;
  return s;
}

bool same_result(const AbcResult& a, const AbcResult& b) {
  if (a.n_accepted != b.n_accepted) return false;
  if (a.acceptance_threshold_used != b.acceptance_threshold_used) return false;
  if (a.estimate.mean != b.estimate.mean || a.estimate.sd != b.estimate.sd) return false;
  for (int i = 0; i < a.n_accepted; ++i) {
    const auto& da = a.accepted[static_cast<std::size_t>(i)];
    const auto& db = b.accepted[static_cast<std::size_t>(i)];
    if (da.distance != db.distance || da.spec.p1 != db.spec.p1 || da.spec.p2 != db.spec.p2)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("distance is the euclidean norm") {
  SummaryVector a{{0, 5, 10}, 3};
  SummaryVector b{{0, 5, 10}, 3};
  CHECK(distance(a, b) == 0.0);

  SummaryVector zero{{0, 0, 0}, 3};
  SummaryVector triangle{{3, 4, 0}, 3};
  CHECK(distance(zero, triangle) == 5.0);

  SummaryVector five{{0, 1, 2, 3, 4}, 5};
  CHECK(code_of([&] { distance(a, five); }) == errc::length_mismatch);
}

TEST_CASE("default priors follow the documented scheme") {
  const SummaryStats s1 = stats_s1(0, 5, 10, 30);
  const PriorConfig normal = default_priors(Family::normal, s1, Scenario::s1);
  CHECK(normal.bounds_p1.lower == 0.0);
  CHECK(normal.bounds_p1.upper == 10.0);
  CHECK(normal.bounds_p2->lower == 0.0);
  CHECK(normal.bounds_p2->upper == 50.0);

  SummaryStats s3;
  s3.x_q1 = 2.5;
  s3.x_med = 5;
  s3.x_q3 = 7.5;
  s3.n = 30;
  const PriorConfig lognormal = default_priors(Family::log_normal, s3, Scenario::s3);
  CHECK_THAT(lognormal.bounds_p1.lower, Catch::Matchers::WithinRel(std::log(2.5), 1e-15));
  CHECK_THAT(lognormal.bounds_p1.upper, Catch::Matchers::WithinRel(std::log(7.5), 1e-15));
  CHECK(lognormal.bounds_p2->upper == 10.0);

  CHECK(code_of([&] {
          default_priors(Family::log_normal, stats_s1(0, 5, 10, 30), Scenario::s1);
        }) == errc::non_positive_support);

  const PriorConfig expo = default_priors(Family::exponential, s1, Scenario::s1);
  CHECK(expo.bounds_p1.upper == 40.0);
  CHECK_FALSE(expo.bounds_p2.has_value());
  const PriorConfig beta = default_priors(Family::beta, s1, Scenario::s1);
  CHECK(beta.bounds_p1.upper == 40.0);
  CHECK(beta.bounds_p2->upper == 40.0);
  const PriorConfig weibull = default_priors(Family::weibull, s1, Scenario::s1);
  CHECK(weibull.bounds_p1.upper == 50.0);
  CHECK(weibull.bounds_p2->upper == 50.0);
}

TEST_CASE("accepting everything recovers the prior") {
  const SummaryStats stats = stats_s1(0, 5, 10, 40);
  const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s1);
  AbcConfig config;
  config.n_iter = 20000;
  config.acceptance = Acceptance::percentile(100.0);
  config.seed = 5;

  const AbcResult result = abc_run(stats, Scenario::s1, Family::normal, prior, config);
  REQUIRE(result.n_accepted == 20000);

  double mu_mean = 0.0;
  for (const auto& d : result.accepted) mu_mean += d.spec.p1;
  mu_mean /= result.accepted.size();
  // 3 standard errors of a U(0,10) mean over 20000 draws
  const double se = 10.0 / std::sqrt(12.0 * 20000.0);
  CHECK_THAT(mu_mean, Catch::Matchers::WithinAbs(5.0, 3.0 * se));
}

TEST_CASE("normal data: direct estimate lands near the sample SD") {
  RngStream data_rng(101);
  const auto data = sample(DistributionSpec::normal(50, 17), 400, data_rng);
  const Moments truth = sample_moments(data);
  const SummaryStats stats = summarize_sample(data, Scenario::s2);

  const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s2);
  AbcConfig config;
  config.n_iter = 20000;
  config.acceptance = Acceptance::percentile(0.1);
  config.estimator = AbcEstimator::direct;

  const AbcResult result =
      abc_run(stats, Scenario::s2, Family::normal, prior, config, RngStream(7));
  CHECK(result.n_accepted == 20);
  CHECK(result.acceptance_threshold_used > 0.0);
  CHECK_THAT(result.estimate.sd, Catch::Matchers::WithinRel(truth.sd, 0.10));
  CHECK_THAT(result.estimate.mean, Catch::Matchers::WithinRel(truth.mean, 0.10));
}

TEST_CASE("bit-identical results across repeat runs and thread counts") {
  const SummaryStats stats = stats_s1(2, 6, 14, 120);
  const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s1);
  AbcConfig config;
  config.n_iter = 4000;
  config.acceptance = Acceptance::percentile(0.5);

  const AbcResult a = abc_run(stats, Scenario::s1, Family::normal, prior, config, RngStream(9));
  const AbcResult b = abc_run(stats, Scenario::s1, Family::normal, prior, config, RngStream(9));
  const AbcResult c =
      abc_run(stats, Scenario::s1, Family::normal, prior, config, RngStream(9), 2);
  const AbcResult d =
      abc_run(stats, Scenario::s1, Family::normal, prior, config, RngStream(9), 7);
  CHECK(same_result(a, b));
  CHECK(same_result(a, c));
  CHECK(same_result(a, d));
}

TEST_CASE("percentile acceptance keeps exactly the smallest distances") {
  const SummaryStats stats = stats_s1(1, 4, 9, 60);
  const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s1);

  AbcConfig all;
  all.n_iter = 2000;
  all.acceptance = Acceptance::percentile(100.0);
  const AbcResult everything =
      abc_run(stats, Scenario::s1, Family::normal, prior, all, RngStream(33));

  AbcConfig top;
  top.n_iter = 2000;
  top.acceptance = Acceptance::percentile(5.0);
  const AbcResult kept =
      abc_run(stats, Scenario::s1, Family::normal, prior, top, RngStream(33));
  REQUIRE(kept.n_accepted == 100);

  std::vector<double> all_distances;
  for (const auto& d : everything.accepted) all_distances.push_back(d.distance);
  std::vector<double> sorted = all_distances;
  std::sort(sorted.begin(), sorted.end());
  const double kth = sorted[99];

  // every kept distance <= threshold == kth smallest; every dropped one >= it
  CHECK(kept.acceptance_threshold_used == kth);
  for (const auto& d : kept.accepted) CHECK(d.distance <= kth);
  std::vector<double> kept_distances;
  for (const auto& d : kept.accepted) kept_distances.push_back(d.distance);
  std::sort(kept_distances.begin(), kept_distances.end());
  for (std::size_t i = 0; i < kept_distances.size(); ++i)
    CHECK(kept_distances[i] == sorted[i]);
}

TEST_CASE("epsilon mode accepts strictly below the tolerance") {
  const SummaryStats stats = stats_s1(1, 4, 9, 60);
  const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s1);

  AbcConfig top;
  top.n_iter = 2000;
  top.acceptance = Acceptance::percentile(5.0);
  const AbcResult kept =
      abc_run(stats, Scenario::s1, Family::normal, prior, top, RngStream(34));

  AbcConfig eps;
  eps.n_iter = 2000;
  eps.acceptance = Acceptance::epsilon(kept.acceptance_threshold_used);
  const AbcResult by_eps =
      abc_run(stats, Scenario::s1, Family::normal, prior, eps, RngStream(34));
  CHECK(by_eps.acceptance_threshold_used == kept.acceptance_threshold_used);
  // the draw sitting exactly at the threshold is excluded by the strict test
  CHECK(by_eps.n_accepted == kept.n_accepted - 1);

  AbcConfig hopeless;
  hopeless.n_iter = 100;
  hopeless.acceptance = Acceptance::epsilon(1e-300);
  CHECK(code_of([&] {
          abc_run(stats, Scenario::s1, Family::normal, prior, hopeless, RngStream(34));
        }) == errc::no_accepted_draws);
}

TEST_CASE("configuration errors") {
  const SummaryStats stats = stats_s1(1, 4, 9, 60);
  const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s1);

  AbcConfig too_few;
  too_few.n_iter = 100;
  too_few.acceptance = Acceptance::percentile(0.1);  // 0.1 draws
  CHECK(code_of([&] {
          abc_run(stats, Scenario::s1, Family::normal, prior, too_few, RngStream(1));
        }) == errc::config_error);

  AbcConfig bad_pct;
  bad_pct.acceptance = Acceptance::percentile(0.0);
  CHECK(code_of([&] {
          abc_run(stats, Scenario::s1, Family::normal, prior, bad_pct, RngStream(1));
        }) == errc::config_error);

  // prior/family mismatch
  AbcConfig config;
  config.n_iter = 200;
  config.acceptance = Acceptance::percentile(50.0);
  CHECK(code_of([&] {
          abc_run(stats, Scenario::s1, Family::weibull, prior, config, RngStream(1));
        }) == errc::config_error);

  // direct estimator outside the normal family
  AbcConfig direct;
  direct.n_iter = 200;
  direct.acceptance = Acceptance::percentile(50.0);
  direct.estimator = AbcEstimator::direct;
  const PriorConfig weibull_prior = default_priors(Family::weibull, stats, Scenario::s1);
  CHECK(code_of([&] {
          abc_run(stats, Scenario::s1, Family::weibull, weibull_prior, direct, RngStream(1));
        }) == errc::config_error);
}

TEST_CASE("beta support handling") {
  RngStream data_rng(55);
  auto data = sample(DistributionSpec::beta(9, 4), 300, data_rng);

  // raw beta data works without a window
  const SummaryStats inside = summarize_sample(data, Scenario::s2);
  PriorConfig prior = default_priors(Family::beta, inside, Scenario::s2);
  AbcConfig config;
  config.n_iter = 4000;
  config.acceptance = Acceptance::percentile(0.5);
  CHECK_NOTHROW(abc_run(inside, Scenario::s2, Family::beta, prior, config, RngStream(3)));

  // scaled to a 0..100 score it must be rejected without a window...
  for (auto& x : data) x *= 100.0;
  const SummaryStats scaled = summarize_sample(data, Scenario::s2);
  CHECK(code_of([&] {
          abc_run(scaled, Scenario::s2, Family::beta, prior, config, RngStream(3));
        }) == errc::incompatible_support);

  // ...and accepted with one, giving estimates on the data scale
  PriorConfig windowed = prior;
  windowed.support = Interval{0.0, 100.0};
  const AbcResult result =
      abc_run(scaled, Scenario::s2, Family::beta, windowed, config, RngStream(3));
  const Moments truth = moments(DistributionSpec::beta(9, 4));
  CHECK_THAT(result.estimate.mean, Catch::Matchers::WithinRel(100.0 * truth.mean, 0.15));
  CHECK_THAT(result.estimate.sd, Catch::Matchers::WithinRel(100.0 * truth.sd, 0.35));
}

TEST_CASE("plug-in and simulation estimators agree for normal data") {
  RngStream data_rng(66);
  const auto data = sample(DistributionSpec::normal(50, 17), 400, data_rng);
  const SummaryStats stats = summarize_sample(data, Scenario::s2);
  const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s2);

  AbcConfig config;
  config.n_iter = 20000;
  config.acceptance = Acceptance::percentile(0.1);

  config.estimator = AbcEstimator::plug_in;
  const AbcResult plug =
      abc_run(stats, Scenario::s2, Family::normal, prior, config, RngStream(8));
  config.estimator = AbcEstimator::simulation;
  const AbcResult sim =
      abc_run(stats, Scenario::s2, Family::normal, prior, config, RngStream(8));

  CHECK_THAT(plug.estimate.mean, Catch::Matchers::WithinRel(sim.estimate.mean, 0.05));
  CHECK_THAT(plug.estimate.sd, Catch::Matchers::WithinRel(sim.estimate.sd, 0.05));
}

TEST_CASE("direct sd errors contract as the sample grows") {
  // median absolute relative error over seeded replicates, n = 100 vs 400
  const auto median_abs_re = [](int n) {
    std::vector<double> res;
    RngStream rng(4040);
    for (int r = 0; r < 50; ++r) {
      RngStream stream = rng.split(static_cast<std::uint64_t>(r)).split(static_cast<std::uint64_t>(n));
      RngStream data_stream = stream.split(0);
      const auto data = sample(DistributionSpec::normal(50, 17), n, data_stream);
      const Moments truth = sample_moments(data);
      const SummaryStats stats = summarize_sample(data, Scenario::s1);
      const PriorConfig prior = default_priors(Family::normal, stats, Scenario::s1);
      AbcConfig config;
      config.n_iter = 10000;
      config.acceptance = Acceptance::percentile(0.2);
      config.estimator = AbcEstimator::direct;
      const AbcResult result =
          abc_run(stats, Scenario::s1, Family::normal, prior, config, stream.split(1));
      res.push_back(std::fabs((result.estimate.sd - truth.sd) / truth.sd));
    }
    std::nth_element(res.begin(), res.begin() + 25, res.end());
    return res[25];
  };
  CHECK(median_abs_re(400) < median_abs_re(100));
}

TEST_CASE("model selection basics") {
  const SummaryStats stats = stats_s1(40, 50, 60, 100);
  const PriorConfig normal = default_priors(Family::normal, stats, Scenario::s1);

  CHECK(code_of([&] {
          select_distribution(stats, Scenario::s1, {normal}, AbcConfig{}, RngStream(1));
        }) == errc::config_error);

  // identical candidates split the posterior evenly
  AbcConfig config;
  config.n_iter = 20000;
  config.acceptance = Acceptance::percentile(10.0);
  const ModelSelectionResult result =
      select_distribution(stats, Scenario::s1, {normal, normal}, config, RngStream(21));
  REQUIRE(result.candidates.size() == 2);
  CHECK_THAT(result.candidates[0].posterior_prob,
             Catch::Matchers::WithinAbs(0.5, 0.05));
  CHECK_THAT(result.candidates[0].posterior_prob + result.candidates[1].posterior_prob,
             Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(result.candidates[0].n_accepted + result.candidates[1].n_accepted == 2000);
  CHECK_THAT(result.bayes_factor(0, 1),
             Catch::Matchers::WithinRel(result.candidates[0].posterior_prob /
                                            result.candidates[1].posterior_prob,
                                        1e-15));
}

TEST_CASE("model selection identifies beta data against a normal rival") {
  RngStream data_rng(77);
  const auto data = sample(DistributionSpec::beta(9, 4), 400, data_rng);
  const SummaryStats stats = summarize_sample(data, Scenario::s2);

  AbcConfig config;
  config.n_iter = 20000;
  config.acceptance = Acceptance::percentile(0.1);
  const std::vector<PriorConfig> candidates = {
      default_priors(Family::beta, stats, Scenario::s2),
      default_priors(Family::normal, stats, Scenario::s2)};
  const ModelSelectionResult result =
      select_distribution(stats, Scenario::s2, candidates, config, RngStream(5));
  CHECK(result.candidates[0].family == Family::beta);
  CHECK(result.candidates[0].posterior_prob + result.candidates[1].posterior_prob == 1.0);
  CHECK(result.chosen == Family::beta);
  CHECK(result.candidates[0].posterior_prob > 0.5);
  CHECK_FALSE(result.degenerate);
}

TEST_CASE("overflowing parameter draws are infinitely bad, never accepted") {
  // weibull shapes near zero overflow their pseudo-samples; the distance
  // must come back +inf (not NaN) so the top-k reduction stays sound
  SummaryStats stats;
  stats.x_q1 = 19.0;
  stats.x_med = 29.0;
  stats.x_q3 = 41.0;
  stats.n = 600;
  detail::ObservedTarget target;
  target.vec = to_vector(stats, Scenario::s3);
  target.scenario = Scenario::s3;
  target.rule = QuantileRule::type7;
  target.n = stats.n;

  RngStream rng(12345);
  std::vector<double> buf;
  const DistributionSpec tiny = DistributionSpec::weibull(1e-4, 33.0);
  const double d = detail::simulate_distance(tiny, std::nullopt, target, rng, buf);
  CHECK(std::isinf(d));
  CHECK(d > 0.0);

  // and a full run on data inviting such draws yields finite estimates
  RngStream data_stream(99);
  const auto data = sample(DistributionSpec::weibull(2, 35), 200, data_stream);
  const PriorConfig prior{Family::weibull, {0.0, 50.0}, Interval{0.0, 50.0}, std::nullopt};
  AbcConfig cfg;
  cfg.n_iter = 4000;
  cfg.acceptance = Acceptance::percentile(0.5);
  cfg.estimator = AbcEstimator::simulation;
  const SummaryStats observed = summarize_sample(data, Scenario::s3);
  const AbcResult result =
      abc_run(observed, Scenario::s3, Family::weibull, prior, cfg, RngStream(5));
  CHECK(std::isfinite(result.estimate.mean));
  CHECK(std::isfinite(result.estimate.sd));
  for (const auto& acc : result.accepted) CHECK(std::isfinite(acc.distance));
}

TEST_CASE("tied acceptances are reported as a uniform, degenerate posterior") {
  const std::vector<std::uint32_t> model = {0, 1, 0, 1, 1};
  const std::vector<std::uint32_t> accepted = {0, 1, 3};

  const std::vector<double> tied = {2.0, 2.0, 9.0, 2.0, 9.0};
  const auto [uniform, degenerate] = detail::posterior_shares(model, tied, accepted, 2);
  CHECK(degenerate);
  CHECK(uniform == std::vector<double>{0.5, 0.5});

  const std::vector<double> spread = {1.0, 2.0, 9.0, 3.0, 9.0};
  const auto [probs, flat] = detail::posterior_shares(model, spread, accepted, 2);
  CHECK_FALSE(flat);
  CHECK_THAT(probs[0], Catch::Matchers::WithinRel(1.0 / 3.0, 1e-15));
  CHECK_THAT(probs[1], Catch::Matchers::WithinRel(2.0 / 3.0, 1e-15));
}

TEST_CASE("posterior probabilities normalize and top-k selection is scale invariant") {
  const auto norm = props::posterior_normalization(1000);
  INFO(norm.detail);
  CHECK(norm.ok);
  const auto scale = props::topk_scale_invariance(1000);
  INFO(scale.detail);
  CHECK(scale.ok);
}
