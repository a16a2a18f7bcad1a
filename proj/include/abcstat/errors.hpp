#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace abcstat {

// Error categories surfaced by the library. The CLI writes these names into
// error_code cells, so the strings are part of the output format.
enum class errc {
  ordering_violation,
  missing_field,
  sample_size_too_small,
  empty_sample,
  unsupported_scenario,
  negative_variance,
  degenerate_range,
  domain_error,
  invalid_parameters,
  non_positive_support,
  incompatible_support,
  no_accepted_draws,
  config_error,
  length_mismatch,
  parse_error,
};

constexpr std::string_view to_string(errc code) noexcept {
  switch (code) {
    case errc::ordering_violation: return "ordering_violation";
    case errc::missing_field: return "missing_field";
    case errc::sample_size_too_small: return "sample_size_too_small";
    case errc::empty_sample: return "empty_sample";
    case errc::unsupported_scenario: return "unsupported_scenario";
    case errc::negative_variance: return "negative_variance";
    case errc::degenerate_range: return "degenerate_range";
    case errc::domain_error: return "domain_error";
    case errc::invalid_parameters: return "invalid_parameters";
    case errc::non_positive_support: return "non_positive_support";
    case errc::incompatible_support: return "incompatible_support";
    case errc::no_accepted_draws: return "no_accepted_draws";
    case errc::config_error: return "config_error";
    case errc::length_mismatch: return "length_mismatch";
    case errc::parse_error: return "parse_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Bland's variance formula can dip below zero on pathological summaries.
// The offending value is carried along instead of being clamped away.
class NegativeVarianceError : public Error {
 public:
  explicit NegativeVarianceError(double variance)
      : Error(errc::negative_variance,
              "estimated variance is " + std::to_string(variance)),
        variance_(variance) {}

  double variance() const noexcept { return variance_; }

 private:
  double variance_;
};

class ParseError : public Error {
 public:
  ParseError(int row, int column, const std::string& message)
      : Error(errc::parse_error, "row " + std::to_string(row) + ", column " +
                                     std::to_string(column) + ": " + message),
        row_(row),
        column_(column) {}

  int row() const noexcept { return row_; }
  int column() const noexcept { return column_; }

 private:
  int row_;
  int column_;
};

}  // namespace abcstat
