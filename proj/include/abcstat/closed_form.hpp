#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "abcstat/errors.hpp"
#include "abcstat/special_functions.hpp"
#include "abcstat/summary_stats.hpp"

namespace abcstat {

enum class Method { adhoc, hozo, bland, wan, abc };

constexpr std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::adhoc: return "adhoc";
    case Method::hozo: return "hozo";
    case Method::bland: return "bland";
    case Method::wan: return "wan";
    case Method::abc: return "abc";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view text) noexcept {
  if (text == "adhoc") return Method::adhoc;
  if (text == "hozo") return Method::hozo;
  if (text == "bland") return Method::bland;
  if (text == "wan") return Method::wan;
  if (text == "abc") return Method::abc;
  return std::nullopt;
}

// Which scenarios a method is defined for.
constexpr bool method_supports(Method m, Scenario s) noexcept {
  switch (m) {
    case Method::adhoc: return s == Scenario::s1 || s == Scenario::s3;
    case Method::hozo: return s == Scenario::s1;
    case Method::bland: return s == Scenario::s2;
    case Method::wan:
    case Method::abc: return true;
  }
  return false;
}

struct Estimate {
  double mean = 0.0;
  double sd = 0.0;
  Method method = Method::adhoc;
  Scenario scenario = Scenario::s1;
};

// Bland's n-dependent variance line as printed is internally inconsistent;
// the approximate (n-free) form is the canonical one and the exact variant
// is experimental.
enum class BlandVariant { approximate, exact };

namespace detail {

inline void check_span(double lo, double hi, const char* what) {
  if (hi < lo) throw Error(errc::ordering_violation, std::string(what) + " is negative");
}

}  // namespace detail

// Median as the mean; range/4 (s1) or IQR/1.35 (s3) as the SD. There is no
// ad-hoc rule for s2.
inline Estimate adhoc_estimate(const SummaryStats& stats, Scenario scenario) {
  switch (scenario) {
    case Scenario::s1: {
      const double lo = detail::require_field(stats.x_min, "x_min");
      const double hi = detail::require_field(stats.x_max, "x_max");
      detail::check_span(lo, hi, "range");
      return {stats.x_med, (hi - lo) / 4.0, Method::adhoc, scenario};
    }
    case Scenario::s3: {
      const double q1 = detail::require_field(stats.x_q1, "x_q1");
      const double q3 = detail::require_field(stats.x_q3, "x_q3");
      detail::check_span(q1, q3, "IQR");
      return {stats.x_med, (q3 - q1) / 1.35, Method::adhoc, scenario};
    }
    case Scenario::s2:
      break;
  }
  throw Error(errc::unsupported_scenario, "no ad-hoc rule is defined for s2");
}

// Hozo, Djulbegovic & Hozo (2005): mean and variance from {min, med, max, n},
// with formulas switching on the sample size.
inline Estimate hozo_estimate(const SummaryStats& stats) {
  const double lo = detail::require_field(stats.x_min, "x_min");
  const double hi = detail::require_field(stats.x_max, "x_max");
  const double med = stats.x_med;
  if (stats.n < 2)
    throw Error(errc::sample_size_too_small, "hozo_estimate needs n >= 2");

  const double mean = stats.n <= 25 ? (lo + 2.0 * med + hi) / 4.0 : med;
  const double range = hi - lo;
  double variance;
  if (stats.n <= 15) {
    const double t = lo - 2.0 * med + hi;
    variance = (t * t / 4.0 + range * range) / 12.0;
  } else if (stats.n <= 70) {
    variance = (range / 4.0) * (range / 4.0);
  } else {
    variance = (range / 6.0) * (range / 6.0);
  }
  return {mean, std::sqrt(variance), Method::hozo, Scenario::s1};
}

// Bland (2015): mean and variance from the five-number summary. The default
// is the n-free approximation; the exact variant keeps the n-dependent
// correction terms.
inline Estimate bland_estimate(const SummaryStats& stats,
                               BlandVariant variant = BlandVariant::approximate) {
  const double lo = detail::require_field(stats.x_min, "x_min");
  const double q1 = detail::require_field(stats.x_q1, "x_q1");
  const double med = stats.x_med;
  const double q3 = detail::require_field(stats.x_q3, "x_q3");
  const double hi = detail::require_field(stats.x_max, "x_max");

  const double squares = lo * lo + 2.0 * q1 * q1 + 2.0 * med * med +
                         2.0 * q3 * q3 + hi * hi;
  const double cross = q1 * (lo + med) + q3 * (med + hi);

  double mean, variance;
  if (variant == BlandVariant::approximate) {
    mean = (lo + 2.0 * q1 + 2.0 * med + 2.0 * q3 + hi) / 8.0;
    variance = squares / 16.0 + cross / 8.0 - mean * mean;
  } else {
    if (stats.n < 2)
      throw Error(errc::sample_size_too_small, "bland exact variant needs n >= 2");
    const double n = static_cast<double>(stats.n);
    mean = ((n + 3.0) * (lo + hi) + 2.0 * (n - 1.0) * (q1 + med + q3)) / (8.0 * n);
    variance = ((n + 3.0) * squares + 8.0 * (lo * lo + hi * hi)) / (16.0 * n) +
               (n - 5.0) * cross / (8.0 * n) - mean * mean;
  }
  if (variance < 0.0) throw NegativeVarianceError(variance);
  return {mean, std::sqrt(variance), Method::bland, Scenario::s2};
}

// Wan et al. (2014) mean: the Hozo rule in s1, the Bland rule in s2, and the
// quartile average (q1 + med + q3)/3 in s3.
inline double wan_mean(const SummaryStats& stats, Scenario scenario) {
  switch (scenario) {
    case Scenario::s1:
      return hozo_estimate(stats).mean;
    case Scenario::s2:
      return bland_estimate(stats).mean;
    case Scenario::s3: {
      const double q1 = detail::require_field(stats.x_q1, "x_q1");
      const double q3 = detail::require_field(stats.x_q3, "x_q3");
      return (q1 + stats.x_med + q3) / 3.0;
    }
  }
  throw Error(errc::unsupported_scenario, "unknown scenario");
}

namespace detail {

inline double expected_half_range_quantile(double p) {
  const double z = normal_quantile(p);
  // p > 0.5 for every n >= 2, so z > 0; kept as a guard.
  if (!(z > 0.0)) throw Error(errc::degenerate_range, "nonpositive order-statistic quantile");
  return z;
}

}  // namespace detail

// Wan et al. (2014) SD: normal order-statistic scalings of the range (s1)
// and the IQR (s3); s2 is the equal-weight average of the two.
inline double wan_sd(const SummaryStats& stats, Scenario scenario) {
  if (stats.n < 2) throw Error(errc::sample_size_too_small, "wan_sd needs n >= 2");
  const double n = static_cast<double>(stats.n);

  const auto from_range = [&] {
    const double lo = detail::require_field(stats.x_min, "x_min");
    const double hi = detail::require_field(stats.x_max, "x_max");
    detail::check_span(lo, hi, "range");
    const double z = detail::expected_half_range_quantile((n - 0.375) / (n + 0.25));
    return (hi - lo) / (2.0 * z);
  };
  const auto from_iqr = [&] {
    const double q1 = detail::require_field(stats.x_q1, "x_q1");
    const double q3 = detail::require_field(stats.x_q3, "x_q3");
    detail::check_span(q1, q3, "IQR");
    const double z = detail::expected_half_range_quantile((0.75 * n - 0.125) / (n + 0.25));
    return (q3 - q1) / (2.0 * z);
  };

  switch (scenario) {
    case Scenario::s1: return from_range();
    case Scenario::s3: return from_iqr();
    case Scenario::s2: return 0.5 * from_range() + 0.5 * from_iqr();
  }
  throw Error(errc::unsupported_scenario, "unknown scenario");
}

inline Estimate wan_estimate(const SummaryStats& stats, Scenario scenario) {
  return {wan_mean(stats, scenario), wan_sd(stats, scenario), Method::wan, scenario};
}

}  // namespace abcstat
