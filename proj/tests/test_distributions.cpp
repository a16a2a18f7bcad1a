#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "abcstat/distributions.hpp"
#include "abcstat/rng.hpp"
#include "support/oracles.hpp"

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

// Asymptotic standard error of the sample SD, using the sample's own fourth
// moment: Var(s^2) ~ (m4 - s^4)/n, SE(s) = SE(s^2) / (2 s).
double sd_standard_error(const std::vector<double>& xs, const Moments& m) {
  double m4 = 0.0;
  for (const double x : xs) {
    const double d = x - m.mean;
    m4 += d * d * d * d;
  }
  m4 /= static_cast<double>(xs.size());
  const double var_of_var =
      std::max(0.0, m4 - m.sd * m.sd * m.sd * m.sd) / static_cast<double>(xs.size());
  return std::sqrt(var_of_var) / (2.0 * m.sd);
}

}  // namespace

TEST_CASE("moments: beta") {
  const Moments m = moments(DistributionSpec::beta(9, 4));
  CHECK_THAT(m.mean, Catch::Matchers::WithinRel(9.0 / 13.0, 1e-15));
  CHECK_THAT(m.sd, Catch::Matchers::WithinRel(
                       std::sqrt(36.0 / (169.0 * 14.0)), 1e-13));
}

TEST_CASE("moments: exponential mean equals SD") {
  const Moments m = moments(DistributionSpec::exponential(10));
  CHECK(m.mean == 10.0);
  CHECK(m.sd == 10.0);
}

TEST_CASE("moments: weibull against exact gamma identities") {
  // Gamma(1.5) = sqrt(pi)/2 and Gamma(2) = 1, so the moments of
  // Weibull(shape 2, scale 35) reduce to closed radicals.
  const double pi = std::acos(-1.0);
  const Moments m = moments(DistributionSpec::weibull(2, 35));
  CHECK_THAT(m.mean, Catch::Matchers::WithinRel(35.0 * std::sqrt(pi) / 2.0, 1e-12));
  CHECK_THAT(m.sd, Catch::Matchers::WithinRel(35.0 * std::sqrt(1.0 - pi / 4.0), 1e-12));
}

TEST_CASE("moments: lognormal closed form") {
  const Moments m = moments(DistributionSpec::log_normal(4, 0.3));
  const double mean = std::exp(4.0 + 0.5 * 0.09);
  CHECK_THAT(m.mean, Catch::Matchers::WithinRel(mean, 1e-13));
  CHECK_THAT(m.sd, Catch::Matchers::WithinRel(mean * std::sqrt(std::exp(0.09) - 1.0), 1e-13));
  CHECK_THAT(m.mean, Catch::Matchers::WithinAbs(57.11, 0.005));
  CHECK_THAT(m.sd, Catch::Matchers::WithinAbs(17.53, 0.005));
}

TEST_CASE("invalid parameters are rejected") {
  CHECK(code_of([] { moments(DistributionSpec::normal(0, 0)); }) ==
        errc::invalid_parameters);
  CHECK(code_of([] { moments(DistributionSpec::beta(0, 1)); }) ==
        errc::invalid_parameters);
  CHECK(code_of([] { moments(DistributionSpec::exponential(-3)); }) ==
        errc::invalid_parameters);
  CHECK(code_of([] { moments(DistributionSpec::weibull(2, -1)); }) ==
        errc::invalid_parameters);
  CHECK(code_of([] {
          DistributionSpec spec = DistributionSpec::exponential(3);
          spec.p2 = 1.0;
          validate_spec(spec);
        }) == errc::invalid_parameters);
}

TEST_CASE("beta draws stay inside the open unit interval") {
  RngStream rng(11);
  const DistributionSpec spec = DistributionSpec::beta(9, 4);
  for (int i = 0; i < 100000; ++i) {
    const double x = draw(spec, rng);
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("law of large numbers: exponential mean") {
  RngStream rng(12);
  const auto xs = sample(DistributionSpec::exponential(10), 1'000'000, rng);
  const Moments m = sample_moments(xs);
  CHECK_THAT(m.mean, Catch::Matchers::WithinAbs(10.0, 3.0 * 10.0 / 1000.0));
}

TEST_CASE("Monte Carlo: normal SD within one percent") {
  RngStream rng(13);
  const auto xs = sample(DistributionSpec::normal(50, 17), 1'000'000, rng);
  const Moments m = sample_moments(xs);
  CHECK_THAT(m.sd, Catch::Matchers::WithinAbs(17.0, 0.17));
}

TEST_CASE("sample moments converge to theoretical moments for every family") {
  const std::vector<DistributionSpec> specs = {
      DistributionSpec::normal(50, 17), DistributionSpec::log_normal(4, 0.3),
      DistributionSpec::weibull(2, 35), DistributionSpec::beta(9, 4),
      DistributionSpec::exponential(10)};
  RngStream rng(14);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    RngStream stream = rng.split(i);
    const int n = 1'000'000;
    const auto xs = sample(specs[i], n, stream);
    const Moments sample_m = sample_moments(xs);
    const Moments theory = moments(specs[i]);
    const double se_mean = theory.sd / std::sqrt(static_cast<double>(n));
    INFO("family " << to_string(specs[i].family));
    CHECK_THAT(sample_m.mean, Catch::Matchers::WithinAbs(theory.mean, 4.0 * se_mean));
    CHECK_THAT(sample_m.sd, Catch::Matchers::WithinAbs(
                                theory.sd, 4.0 * sd_standard_error(xs, sample_m)));
  }
}

TEST_CASE("gamma_draw matches the gamma mean") {
  RngStream rng(15);
  const int n = 100000;
  for (const double shape : {0.5, 2.0, 9.0}) {
    RngStream stream = rng.split(static_cast<std::uint64_t>(shape * 10));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += gamma_draw(shape, stream);
    const double mean = acc / n;
    const double se = std::sqrt(shape / n);  // Var(Gamma(a,1)) = a
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(shape, 4.0 * se));
  }
}

TEST_CASE("streams are deterministic and splitting ignores draw position") {
  RngStream a(99);
  RngStream b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream parent(7);
  const RngStream before = parent.split(3);
  parent.next_u64();
  parent.uniform01();
  RngStream after = parent.split(3);
  RngStream before_copy = before;
  for (int i = 0; i < 10; ++i) CHECK(before_copy.next_u64() == after.next_u64());

  // distinct split indices give distinct streams
  RngStream c = parent.split(1);
  RngStream d = parent.split(2);
  bool all_equal = true;
  for (int i = 0; i < 10; ++i) all_equal = all_equal && (c.next_u64() == d.next_u64());
  CHECK_FALSE(all_equal);
}

TEST_CASE("identical seeds reproduce identical samples") {
  const DistributionSpec spec = DistributionSpec::weibull(2, 35);
  RngStream r1(4242);
  RngStream r2(4242);
  const auto a = sample(spec, 1000, r1);
  const auto b = sample(spec, 1000, r2);
  CHECK(a == b);
}

TEST_CASE("sample_moments basics") {
  const std::vector<double> xs = {1, 2, 3, 4};
  const Moments m = sample_moments(xs);
  CHECK(m.mean == 2.5);
  CHECK_THAT(m.sd, Catch::Matchers::WithinRel(std::sqrt(5.0 / 3.0), 1e-14));
  CHECK(code_of([] { sample_moments(std::vector<double>{1.0}); }) ==
        errc::sample_size_too_small);
}
