#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "abcstat/abc.hpp"
#include "abcstat/distributions.hpp"
#include "abcstat/errors.hpp"
#include "abcstat/simulation.hpp"
#include "abcstat/summary_stats.hpp"
#include "abcstat/version.hpp"

namespace abcstat {

// Shortest decimal representation that round-trips to the same double;
// locale-independent.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline double parse_double_strict(std::string_view text, int row, int column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ParseError(row, column, "not a number: '" + std::string(text) + "'");
  return value;
}

inline long parse_int_strict(std::string_view text, int row, int column) {
  long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ParseError(row, column, "not an integer: '" + std::string(text) + "'");
  return value;
}

namespace csv {

// Splits one CSV record; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_record(const std::string& line, int row) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  if (quoted)
    throw ParseError(row, static_cast<int>(fields.size()) + 1, "unterminated quote");
  fields.push_back(std::move(current));
  return fields;
}

inline std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline void write_record(std::ostream& os, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << quote_if_needed(fields[i]);
  }
  os << '\n';
}

}  // namespace csv

// One study's reported statistics as read from an input table.
struct StudyRow {
  std::string study_id;
  int n = 0;
  std::optional<double> x_min{}, x_q1{}, x_med{}, x_q3{}, x_max{};
  std::optional<Family> family_hint{};
  std::optional<Interval> support_bounds{};
};

inline SummaryStats to_summary_stats(const StudyRow& row) {
  if (!row.x_med) throw Error(errc::missing_field, "median is required");
  SummaryStats stats;
  stats.x_min = row.x_min;
  stats.x_q1 = row.x_q1;
  stats.x_med = *row.x_med;
  stats.x_q3 = row.x_q3;
  stats.x_max = row.x_max;
  stats.n = row.n;
  return stats;
}

// CSV schema: header row naming a subset of
//   study_id, n, min, q1, median, q3, max, family_hint, lower, upper
// (study_id and n mandatory); empty cells mean "not reported".
inline std::vector<StudyRow> read_studies_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(1, 1, "empty input");
  const auto header = csv::split_record(line, 1);

  std::map<std::string, std::size_t> col;
  static const char* known[] = {"study_id", "n",   "min",         "q1",    "median",
                                "q3",       "max", "family_hint", "lower", "upper"};
  for (std::size_t i = 0; i < header.size(); ++i) {
    bool ok = false;
    for (const char* name : known) ok = ok || header[i] == name;
    if (!ok) throw ParseError(1, static_cast<int>(i) + 1,
                              "unknown column '" + header[i] + "'");
    if (!col.emplace(header[i], i).second)
      throw ParseError(1, static_cast<int>(i) + 1, "duplicate column '" + header[i] + "'");
  }
  if (!col.count("study_id") || !col.count("n"))
    throw ParseError(1, 1, "columns 'study_id' and 'n' are required");

  std::vector<StudyRow> rows;
  std::map<std::string, int> seen_ids;
  int row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_record(line, row_no);
    if (fields.size() != header.size())
      throw ParseError(row_no, 1, "expected " + std::to_string(header.size()) +
                                      " fields, found " + std::to_string(fields.size()));
    const auto cell = [&](const char* name) -> std::optional<std::string_view> {
      const auto it = col.find(name);
      if (it == col.end()) return std::nullopt;
      const std::string& value = fields[it->second];
      if (value.empty()) return std::nullopt;
      return std::string_view(value);
    };
    const auto numeric = [&](const char* name) -> std::optional<double> {
      const auto text = cell(name);
      if (!text) return std::nullopt;
      return parse_double_strict(*text, row_no, static_cast<int>(col.at(name)) + 1);
    };

    StudyRow row;
    const auto id = cell("study_id");
    if (!id) throw ParseError(row_no, static_cast<int>(col.at("study_id")) + 1,
                              "study_id must not be empty");
    row.study_id = std::string(*id);
    if (!seen_ids.emplace(row.study_id, row_no).second)
      throw ParseError(row_no, static_cast<int>(col.at("study_id")) + 1,
                       "duplicate study_id '" + row.study_id + "'");
    const auto n_text = cell("n");
    if (!n_text) throw ParseError(row_no, static_cast<int>(col.at("n")) + 1,
                                  "n must not be empty");
    row.n = static_cast<int>(
        parse_int_strict(*n_text, row_no, static_cast<int>(col.at("n")) + 1));
    row.x_min = numeric("min");
    row.x_q1 = numeric("q1");
    row.x_med = numeric("median");
    row.x_q3 = numeric("q3");
    row.x_max = numeric("max");
    if (const auto hint = cell("family_hint")) {
      const auto family = parse_family(*hint);
      if (!family)
        throw ParseError(row_no, static_cast<int>(col.at("family_hint")) + 1,
                         "unknown family '" + std::string(*hint) + "'");
      row.family_hint = family;
    }
    const auto lower = numeric("lower");
    const auto upper = numeric("upper");
    if (lower.has_value() != upper.has_value())
      throw ParseError(row_no, 1, "lower and upper must be given together");
    if (lower) row.support_bounds = Interval{*lower, *upper};
    rows.push_back(std::move(row));
  }
  return rows;
}

// JSON alternative: an array of objects with the same field names.
inline std::vector<StudyRow> read_studies_json(std::istream& is) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, 1, e.what());
  }
  if (!j.is_array()) throw ParseError(1, 1, "expected a JSON array of studies");

  std::vector<StudyRow> rows;
  std::map<std::string, int> seen_ids;
  int index = 0;
  for (const auto& item : j) {
    ++index;
    if (!item.is_object()) throw ParseError(index, 1, "study entries must be objects");
    StudyRow row;
    try {
      row.study_id = item.at("study_id").get<std::string>();
      row.n = item.at("n").get<int>();
      const auto opt = [&](const char* name) -> std::optional<double> {
        if (!item.contains(name) || item[name].is_null()) return std::nullopt;
        return item[name].get<double>();
      };
      row.x_min = opt("min");
      row.x_q1 = opt("q1");
      row.x_med = opt("median");
      row.x_q3 = opt("q3");
      row.x_max = opt("max");
      if (item.contains("family_hint") && !item["family_hint"].is_null()) {
        const auto family = parse_family(item["family_hint"].get<std::string>());
        if (!family) throw ParseError(index, 1, "unknown family_hint");
        row.family_hint = family;
      }
      const auto lower = opt("lower");
      const auto upper = opt("upper");
      if (lower.has_value() != upper.has_value())
        throw ParseError(index, 1, "lower and upper must be given together");
      if (lower) row.support_bounds = Interval{*lower, *upper};
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(index, 1, e.what());
    }
    if (!seen_ids.emplace(row.study_id, index).second)
      throw ParseError(index, 1, "duplicate study_id '" + row.study_id + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<StudyRow> read_studies_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError(0, 0, "cannot open '" + path + "'");
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return read_studies_json(is);
  return read_studies_csv(is);
}

namespace detail {

// Helpers that turn nlohmann lookups into config errors naming the field.
inline const nlohmann::json& require_key(const nlohmann::json& j, const std::string& path,
                                         const char* key) {
  if (!j.contains(key))
    throw Error(errc::config_error, path + key + ": missing required field");
  return j[key];
}

template <typename T>
T get_as(const nlohmann::json& j, const std::string& path, const char* key) {
  try {
    return require_key(j, path, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(errc::config_error, path + key + ": wrong type");
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return get_as<T>(j, path, key);
}

}  // namespace detail

inline DistributionSpec parse_distribution_json(const nlohmann::json& j,
                                                const std::string& path) {
  const auto family_text = detail::get_as<std::string>(j, path, "family");
  const auto family = parse_family(family_text);
  if (!family)
    throw Error(errc::config_error, path + "family: unknown family '" + family_text + "'");
  DistributionSpec spec;
  spec.family = *family;
  spec.p1 = detail::get_as<double>(j, path, "p1");
  if (j.contains("p2")) spec.p2 = detail::get_as<double>(j, path, "p2");
  validate_spec(spec);
  return spec;
}

inline AbcConfig parse_abc_config_json(const nlohmann::json& j, const std::string& path) {
  AbcConfig abc;
  abc.n_iter = detail::get_or<int>(j, path, "n_iter", abc.n_iter);
  if (j.contains("acceptance")) {
    const auto& acc = j["acceptance"];
    const bool pct = acc.contains("percentile");
    const bool eps = acc.contains("epsilon");
    if (pct == eps)
      throw Error(errc::config_error,
                  path + "acceptance: exactly one of 'percentile' or 'epsilon' is required");
    abc.acceptance = pct ? Acceptance::percentile(
                               detail::get_as<double>(acc, path + "acceptance.", "percentile"))
                         : Acceptance::epsilon(
                               detail::get_as<double>(acc, path + "acceptance.", "epsilon"));
  }
  const auto estimator_text =
      detail::get_or<std::string>(j, path, "estimator", "auto");
  const auto estimator = parse_estimator(estimator_text);
  if (!estimator)
    throw Error(errc::config_error,
                path + "estimator: unknown estimator '" + estimator_text + "'");
  abc.estimator = *estimator;
  abc.seed = detail::get_or<std::uint64_t>(j, path, "seed", 0);
  const auto rule_text =
      detail::get_or<std::string>(j, path, "quantile_rule", "type7");
  const auto rule = parse_quantile_rule(rule_text);
  if (!rule)
    throw Error(errc::config_error,
                path + "quantile_rule: unknown rule '" + rule_text + "'");
  abc.quantile_rule = *rule;
  abc.standardize_distance =
      detail::get_or<bool>(j, path, "standardize_distance", false);
  return abc;
}

// Experiment configuration file, mirroring ExperimentConfig field-for-field.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(errc::config_error, "config must be a JSON object");
  ExperimentConfig config;
  config.distribution =
      parse_distribution_json(detail::require_key(j, "", "distribution"), "distribution.");

  const auto scenario_text = detail::get_as<std::string>(j, "", "scenario");
  const auto scenario = parse_scenario(scenario_text);
  if (!scenario)
    throw Error(errc::config_error, "scenario: unknown scenario '" + scenario_text + "'");
  config.scenario = *scenario;

  const auto& methods = detail::require_key(j, "", "methods");
  if (!methods.is_array() || methods.empty())
    throw Error(errc::config_error, "methods: must be a nonempty array");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    std::string name;
    try {
      name = methods[i].get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(errc::config_error, "methods[" + std::to_string(i) + "]: wrong type");
    }
    const auto method = parse_method(name);
    if (!method)
      throw Error(errc::config_error,
                  "methods[" + std::to_string(i) + "]: unknown method '" + name + "'");
    config.methods.push_back(*method);
  }

  config.n_grid = detail::get_as<std::vector<int>>(j, "", "n_grid");
  config.replicates = detail::get_or<int>(j, "", "replicates", config.replicates);
  if (j.contains("abc")) config.abc = parse_abc_config_json(j["abc"], "abc.");
  config.master_seed = detail::get_or<std::uint64_t>(j, "", "master_seed", 0);
  validate_config(config);
  return config;
}

inline ExperimentConfig read_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(errc::config_error, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::config_error, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_config(j);
}

inline std::string spec_label(const DistributionSpec& spec) {
  std::string label(to_string(spec.family));
  label += "(" + format_double(spec.p1);
  if (spec.p2) label += "," + format_double(*spec.p2);
  label += ")";
  return label;
}

// ARE table emitted by the simulation harness.
inline void write_are_csv(std::ostream& os, const ExperimentConfig& config,
                          std::span<const AreRecord> records) {
  os << "method,distribution,scenario,n,are_mean,are_sd,se_mean,se_sd,replicates,failures\n";
  const std::string label = spec_label(config.distribution);
  const auto number = [](double v) {
    return std::isnan(v) ? std::string() : format_double(v);
  };
  for (const auto& rec : records) {
    std::vector<std::string> fields = {
        std::string(to_string(rec.method)), label,
        std::string(to_string(config.scenario)), std::to_string(rec.n),
        number(rec.are_mean), number(rec.are_sd), number(rec.se_mean),
        number(rec.se_sd), std::to_string(rec.replicates),
        std::to_string(rec.failures)};
    csv::write_record(os, fields);
  }
}

// Reproducibility sidecar written next to every output file.
struct RunManifest {
  std::string tool_version{version()};
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string timestamp;
};

// FNV-1a, 64-bit; good enough to fingerprint inputs in the manifest.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[hash & 0xf];
    hash >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

inline std::string digest_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return "unavailable";
  std::ostringstream ss;
  ss << is.rdbuf();
  return fnv1a_hex(ss.str());
}

inline std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

inline nlohmann::json manifest_json(const RunManifest& manifest) {
  return nlohmann::json{{"tool_version", manifest.tool_version},
                        {"seed", manifest.seed},
                        {"config_digest", manifest.config_digest},
                        {"timestamp", manifest.timestamp}};
}

inline void write_manifest(const std::string& output_path, const RunManifest& manifest) {
  std::ofstream os(output_path + ".manifest.json");
  os << manifest_json(manifest).dump(2) << '\n';
}

}  // namespace abcstat
