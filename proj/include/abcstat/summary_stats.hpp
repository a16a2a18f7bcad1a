#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abcstat/errors.hpp"

namespace abcstat {

// Reporting scenarios for a study's descriptive statistics:
//   s1 = {min, median, max, n}
//   s2 = {min, q1, median, q3, max, n}
//   s3 = {q1, median, q3, n}
enum class Scenario { s1, s2, s3 };

// Convention for interpolating quantiles of a finite sample. type7 places
// quantile p at rank (n-1)p + 1 (the common software default); type6 places
// it at rank (n+1)p.
enum class QuantileRule { type7, type6 };

constexpr std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::s1: return "s1";
    case Scenario::s2: return "s2";
    case Scenario::s3: return "s3";
  }
  return "?";
}

constexpr std::size_t scenario_size(Scenario s) noexcept {
  return s == Scenario::s2 ? 5 : 3;
}

inline std::optional<Scenario> parse_scenario(std::string_view text) noexcept {
  if (text == "s1" || text == "S1") return Scenario::s1;
  if (text == "s2" || text == "S2") return Scenario::s2;
  if (text == "s3" || text == "S3") return Scenario::s3;
  return std::nullopt;
}

constexpr std::string_view to_string(QuantileRule rule) noexcept {
  return rule == QuantileRule::type7 ? "type7" : "type6";
}

inline std::optional<QuantileRule> parse_quantile_rule(std::string_view text) noexcept {
  if (text == "type7") return QuantileRule::type7;
  if (text == "type6") return QuantileRule::type6;
  return std::nullopt;
}

// Descriptive statistics of one study. Only the median and the sample size
// are always present; the optional fields depend on the reporting scenario.
struct SummaryStats {
  std::optional<double> x_min{};
  std::optional<double> x_q1{};
  double x_med = 0.0;
  std::optional<double> x_q3{};
  std::optional<double> x_max{};
  int n = 0;
};

// A scenario's statistics in canonical order (s1 -> [min, med, max],
// s2 -> [min, q1, med, q3, max], s3 -> [q1, med, q3]). ABC distances are
// computed on this vector; n is deliberately not part of it.
struct SummaryVector {
  std::array<double, 5> values{};
  std::size_t count = 0;

  std::span<const double> view() const noexcept { return {values.data(), count}; }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

namespace detail {

inline double require_field(const std::optional<double>& field, const char* name) {
  if (!field) throw Error(errc::missing_field, std::string(name) + " is required");
  return *field;
}

}  // namespace detail

// Checks scenario field presence, n >= 2, and the ordering
// min <= q1 <= med <= q3 <= max across all fields that are present
// (including fields beyond what the scenario requires).
inline const SummaryStats& validate(const SummaryStats& stats, Scenario scenario) {
  if (scenario != Scenario::s3) {
    detail::require_field(stats.x_min, "x_min");
    detail::require_field(stats.x_max, "x_max");
  }
  if (scenario != Scenario::s1) {
    detail::require_field(stats.x_q1, "x_q1");
    detail::require_field(stats.x_q3, "x_q3");
  }
  if (stats.n < 2)
    throw Error(errc::sample_size_too_small,
                "n = " + std::to_string(stats.n) + ", need n >= 2");

  const std::array<std::pair<const std::optional<double>*, const char*>, 5> chain = {{
      {&stats.x_min, "x_min"},
      {&stats.x_q1, "x_q1"},
      {nullptr, "x_med"},
      {&stats.x_q3, "x_q3"},
      {&stats.x_max, "x_max"},
  }};
  double prev = 0.0;
  const char* prev_name = nullptr;
  for (const auto& [field, name] : chain) {
    double value;
    if (field == nullptr) {
      value = stats.x_med;
    } else if (field->has_value()) {
      value = **field;
    } else {
      continue;
    }
    if (prev_name != nullptr && value < prev)
      throw Error(errc::ordering_violation,
                  std::string(name) + " < " + prev_name);
    prev = value;
    prev_name = name;
  }
  return stats;
}

// Maps the exact set of present fields onto a scenario, if any.
inline std::optional<Scenario> detect_scenario(const SummaryStats& stats) noexcept {
  const bool extremes = stats.x_min.has_value() && stats.x_max.has_value();
  const bool quartiles = stats.x_q1.has_value() && stats.x_q3.has_value();
  if (extremes && quartiles) return Scenario::s2;
  if (extremes && !stats.x_q1 && !stats.x_q3) return Scenario::s1;
  if (quartiles && !stats.x_min && !stats.x_max) return Scenario::s3;
  return std::nullopt;
}

// Quantile of an already-sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double p, QuantileRule rule) {
  const std::size_t n = sorted.size();
  if (n == 0) throw Error(errc::empty_sample, "quantile of an empty sample");
  double h = 0.0;
  switch (rule) {
    case QuantileRule::type7: h = (static_cast<double>(n) - 1.0) * p; break;
    case QuantileRule::type6: h = (static_cast<double>(n) + 1.0) * p - 1.0; break;
  }
  h = std::clamp(h, 0.0, static_cast<double>(n) - 1.0);
  const auto lo = static_cast<std::size_t>(h);
  const auto hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  // skip the interpolation when it contributes nothing; 0 * inf would
  // otherwise turn overflowed samples into NaNs
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Builds the scenario's summary vector straight from a sorted sample.
// This is the hot path of the ABC loop.
inline SummaryVector summarize_sorted_to_vector(std::span<const double> sorted,
                                                Scenario scenario,
                                                QuantileRule rule) {
  SummaryVector out;
  switch (scenario) {
    case Scenario::s1:
      out.count = 3;
      out.values[0] = sorted.front();
      out.values[1] = quantile_sorted(sorted, 0.5, rule);
      out.values[2] = sorted.back();
      break;
    case Scenario::s2:
      out.count = 5;
      out.values[0] = sorted.front();
      out.values[1] = quantile_sorted(sorted, 0.25, rule);
      out.values[2] = quantile_sorted(sorted, 0.5, rule);
      out.values[3] = quantile_sorted(sorted, 0.75, rule);
      out.values[4] = sorted.back();
      break;
    case Scenario::s3:
      out.count = 3;
      out.values[0] = quantile_sorted(sorted, 0.25, rule);
      out.values[1] = quantile_sorted(sorted, 0.5, rule);
      out.values[2] = quantile_sorted(sorted, 0.75, rule);
      break;
  }
  return out;
}

// Summarizes a raw sample into the scenario's statistics. Extremes are the
// sample min/max; median and quartiles follow the chosen quantile rule.
inline SummaryStats summarize_sample(std::span<const double> sample,
                                     Scenario scenario,
                                     QuantileRule rule = QuantileRule::type7) {
  if (sample.empty()) throw Error(errc::empty_sample, "cannot summarize an empty sample");
  if (sample.size() < 2)
    throw Error(errc::sample_size_too_small, "need at least two observations");

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());

  SummaryStats out;
  out.n = static_cast<int>(sorted.size());
  out.x_med = quantile_sorted(sorted, 0.5, rule);
  if (scenario != Scenario::s3) {
    out.x_min = sorted.front();
    out.x_max = sorted.back();
  }
  if (scenario != Scenario::s1) {
    out.x_q1 = quantile_sorted(sorted, 0.25, rule);
    out.x_q3 = quantile_sorted(sorted, 0.75, rule);
  }
  return out;
}

// Canonical ordered vector of a study's statistics for the scenario.
inline SummaryVector to_vector(const SummaryStats& stats, Scenario scenario) {
  SummaryVector out;
  switch (scenario) {
    case Scenario::s1:
      out.count = 3;
      out.values[0] = detail::require_field(stats.x_min, "x_min");
      out.values[1] = stats.x_med;
      out.values[2] = detail::require_field(stats.x_max, "x_max");
      break;
    case Scenario::s2:
      out.count = 5;
      out.values[0] = detail::require_field(stats.x_min, "x_min");
      out.values[1] = detail::require_field(stats.x_q1, "x_q1");
      out.values[2] = stats.x_med;
      out.values[3] = detail::require_field(stats.x_q3, "x_q3");
      out.values[4] = detail::require_field(stats.x_max, "x_max");
      break;
    case Scenario::s3:
      out.count = 3;
      out.values[0] = detail::require_field(stats.x_q1, "x_q1");
      out.values[1] = stats.x_med;
      out.values[2] = detail::require_field(stats.x_q3, "x_q3");
      break;
  }
  return out;
}

}  // namespace abcstat
