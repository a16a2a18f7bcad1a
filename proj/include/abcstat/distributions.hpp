#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abcstat/errors.hpp"
#include "abcstat/rng.hpp"
#include "abcstat/special_functions.hpp"

namespace abcstat {

enum class Family { normal, log_normal, weibull, beta, exponential };

constexpr std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::normal: return "normal";
    case Family::log_normal: return "lognormal";
    case Family::weibull: return "weibull";
    case Family::beta: return "beta";
    case Family::exponential: return "exponential";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view text) noexcept {
  if (text == "normal") return Family::normal;
  if (text == "lognormal" || text == "log-normal" || text == "log_normal")
    return Family::log_normal;
  if (text == "weibull") return Family::weibull;
  if (text == "beta") return Family::beta;
  if (text == "exponential" || text == "exp") return Family::exponential;
  return std::nullopt;
}

// A parametric family plus parameter values.
//   normal / lognormal: p1 = mu, p2 = sigma
//   weibull:            p1 = shape k, p2 = scale lambda
//   beta:               p1 = alpha, p2 = beta
//   exponential:        p1 = mean (not the rate), p2 absent
struct DistributionSpec {
  Family family = Family::normal;
  double p1 = 0.0;
  std::optional<double> p2{};

  static DistributionSpec normal(double mu, double sigma) {
    return {Family::normal, mu, sigma};
  }
  static DistributionSpec log_normal(double mu, double sigma) {
    return {Family::log_normal, mu, sigma};
  }
  static DistributionSpec weibull(double shape, double scale) {
    return {Family::weibull, shape, scale};
  }
  static DistributionSpec beta(double alpha, double beta) {
    return {Family::beta, alpha, beta};
  }
  static DistributionSpec exponential(double mean) {
    return {Family::exponential, mean, std::nullopt};
  }
};

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

inline void validate_spec(const DistributionSpec& spec) {
  const auto need_p2 = [&](const char* what) {
    if (!spec.p2)
      throw Error(errc::invalid_parameters,
                  std::string(to_string(spec.family)) + " requires " + what);
    return *spec.p2;
  };
  switch (spec.family) {
    case Family::normal:
    case Family::log_normal:
      if (!(need_p2("sigma") > 0.0))
        throw Error(errc::invalid_parameters, "sigma must be positive");
      break;
    case Family::weibull:
      if (!(spec.p1 > 0.0) || !(need_p2("a scale parameter") > 0.0))
        throw Error(errc::invalid_parameters, "weibull shape and scale must be positive");
      break;
    case Family::beta:
      if (!(spec.p1 > 0.0) || !(need_p2("beta") > 0.0))
        throw Error(errc::invalid_parameters, "beta shape parameters must be positive");
      break;
    case Family::exponential:
      if (spec.p2)
        throw Error(errc::invalid_parameters, "exponential takes a single parameter");
      if (!(spec.p1 > 0.0))
        throw Error(errc::invalid_parameters, "exponential mean must be positive");
      break;
  }
}

// Closed-form mean and standard deviation of the family.
inline Moments moments(const DistributionSpec& spec) {
  validate_spec(spec);
  switch (spec.family) {
    case Family::normal:
      return {spec.p1, *spec.p2};
    case Family::log_normal: {
      const double s2 = *spec.p2 * *spec.p2;
      const double mean = std::exp(spec.p1 + 0.5 * s2);
      return {mean, mean * std::sqrt(std::exp(s2) - 1.0)};
    }
    case Family::weibull: {
      const double shape = spec.p1;
      const double scale = *spec.p2;
      const double g1 = gamma_fn(1.0 + 1.0 / shape);
      const double g2 = gamma_fn(1.0 + 2.0 / shape);
      return {scale * g1, scale * std::sqrt(g2 - g1 * g1)};
    }
    case Family::beta: {
      const double a = spec.p1;
      const double b = *spec.p2;
      const double mean = a / (a + b);
      const double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
      return {mean, std::sqrt(var)};
    }
    case Family::exponential:
      return {spec.p1, spec.p1};
  }
  throw Error(errc::invalid_parameters, "unknown family");
}

// Gamma(shape, 1) variate by the Marsaglia-Tsang squeeze; the shape < 1 case
// is boosted through Gamma(shape + 1). Consumes a variable number of draws,
// which is fine because every consumer owns its stream.
inline double gamma_draw(double shape, RngStream& rng) {
  if (shape < 1.0) {
    const double u = rng.uniform_open01();
    return gamma_draw(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal_quantile(rng.uniform_open01());
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open01();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// One draw from the family. All samplers reduce to uniforms from the given
// stream (inverse-CDF for normal-based families, standard transforms
// otherwise), so sequences are reproducible across platforms and compilers.
inline double draw(const DistributionSpec& spec, RngStream& rng) {
  switch (spec.family) {
    case Family::normal:
      return spec.p1 + *spec.p2 * normal_quantile(rng.uniform_open01());
    case Family::log_normal:
      return std::exp(spec.p1 + *spec.p2 * normal_quantile(rng.uniform_open01()));
    case Family::weibull:
      return *spec.p2 * std::pow(-std::log1p(-rng.uniform01()), 1.0 / spec.p1);
    case Family::beta: {
      const double g1 = gamma_draw(spec.p1, rng);
      const double g2 = gamma_draw(*spec.p2, rng);
      if (g1 + g2 == 0.0) return spec.p1 / (spec.p1 + *spec.p2);  // double underflow
      return g1 / (g1 + g2);
    }
    case Family::exponential:
      return -spec.p1 * std::log1p(-rng.uniform01());
  }
  throw Error(errc::invalid_parameters, "unknown family");
}

inline void sample_into(const DistributionSpec& spec, std::span<double> out, RngStream& rng) {
  for (auto& x : out) x = draw(spec, rng);
}

// n independent draws; deterministic given the stream.
inline std::vector<double> sample(const DistributionSpec& spec, int n, RngStream& rng) {
  if (n < 1) throw Error(errc::invalid_parameters, "sample size must be positive");
  validate_spec(spec);
  std::vector<double> out(static_cast<std::size_t>(n));
  sample_into(spec, out, rng);
  return out;
}

// Mean and standard deviation (n-1 denominator) of a raw sample.
inline Moments sample_moments(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2)
    throw Error(errc::sample_size_too_small,
                "need at least two observations for a standard deviation");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

}  // namespace abcstat
