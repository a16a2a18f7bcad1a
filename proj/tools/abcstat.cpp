// abcstat command-line tool.
//
//   abcstat estimate <studies.(csv|json)>  per-study mean/SD estimates
//   abcstat select   <studies.(csv|json)>  ABC distribution selection
//   abcstat simulate <config.json>         relative-error simulation grids
//
// All randomness flows from --seed (or the config's master_seed); omitting
// it picks a random seed which is printed and recorded in the manifest.
// Outputs are byte-identical for a fixed seed, regardless of --threads.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "abcstat/abcstat.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitConfig = 3;
constexpr int kExitPartial = 4;
constexpr int kExitAllRowsFailed = 5;

struct CommonOptions {
  std::string output;
  std::optional<std::uint64_t> seed;
  int threads = static_cast<int>(abcstat::default_thread_count());
};

struct AbcOptions {
  int iterations = 50'000;
  double accept_pct = 0.1;
  std::optional<double> epsilon;
  std::string estimator = "auto";
  std::string quantile_rule = "type7";
  bool standardize_distance = false;
};

void add_common_flags(CLI::App& cmd, CommonOptions& opts) {
  cmd.add_option("--seed", opts.seed, "Master seed (default: randomly generated)");
  cmd.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd.add_option("--output", opts.output, "Output file (default: stdout)");
}

void add_abc_flags(CLI::App& cmd, AbcOptions& opts) {
  cmd.add_option("--iterations", opts.iterations, "ABC iterations (N)")
      ->check(CLI::PositiveNumber);
  auto* pct = cmd.add_option("--accept-pct", opts.accept_pct,
                             "Keep the smallest-distance percentage of draws");
  cmd.add_option("--epsilon", opts.epsilon,
                 "Accept draws with distance < epsilon instead of a percentile")
      ->excludes(pct);
  cmd.add_option("--estimator", opts.estimator,
                 "ABC estimator: auto|direct|plugin|simulation");
  cmd.add_option("--quantile-rule", opts.quantile_rule,
                 "Quartile convention: type7|type6");
  cmd.add_flag("--standardize-distance", opts.standardize_distance,
               "Scale distance components by the observed summary range");
}

abcstat::AbcConfig make_abc_config(const AbcOptions& opts, std::uint64_t seed) {
  abcstat::AbcConfig config;
  config.n_iter = opts.iterations;
  config.acceptance = opts.epsilon ? abcstat::Acceptance::epsilon(*opts.epsilon)
                                   : abcstat::Acceptance::percentile(opts.accept_pct);
  const auto estimator = abcstat::parse_estimator(opts.estimator);
  if (!estimator)
    throw abcstat::Error(abcstat::errc::config_error,
                         "unknown estimator '" + opts.estimator + "'");
  config.estimator = *estimator;
  const auto rule = abcstat::parse_quantile_rule(opts.quantile_rule);
  if (!rule)
    throw abcstat::Error(abcstat::errc::config_error,
                         "unknown quantile rule '" + opts.quantile_rule + "'");
  config.quantile_rule = *rule;
  config.standardize_distance = opts.standardize_distance;
  config.seed = seed;
  return config;
}

std::uint64_t resolve_seed(const CommonOptions& opts) {
  if (opts.seed) return *opts.seed;
  std::random_device rd;
  const std::uint64_t seed =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  std::cerr << "seed: " << seed << " (generated)\n";
  return seed;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (const char c : text) {
    if (c == ',') {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

// Writes the finished table plus its manifest sidecar. Assembling in memory
// first keeps partially written files from appearing on errors.
void emit_output(const CommonOptions& opts, const std::string& body,
                 const abcstat::RunManifest& manifest) {
  if (opts.output.empty()) {
    std::cout << body;
    std::cerr << "manifest: " << abcstat::manifest_json(manifest).dump() << '\n';
    return;
  }
  std::ofstream os(opts.output, std::ios::binary);
  if (!os)
    throw abcstat::Error(abcstat::errc::config_error,
                         "cannot write output '" + opts.output + "'");
  os << body;
  abcstat::write_manifest(opts.output, manifest);
}

int finish_rows(int failed_cells, int total_cells) {
  if (failed_cells == 0) return kExitOk;
  return failed_cells == total_cells ? kExitAllRowsFailed : kExitPartial;
}

int run_estimate(const std::string& input, const CommonOptions& common,
                 const AbcOptions& abc_opts, const std::string& scenario_flag,
                 const std::string& methods_flag, const std::string& family_flag,
                 bool bland_exact) {
  using namespace abcstat;

  std::optional<Scenario> scenario_override;
  if (!scenario_flag.empty()) {
    scenario_override = parse_scenario(scenario_flag);
    if (!scenario_override)
      throw Error(errc::config_error, "unknown scenario '" + scenario_flag + "'");
  }
  std::vector<Method> methods;
  for (const auto& name : split_list(methods_flag)) {
    const auto method = parse_method(name);
    if (!method) throw Error(errc::config_error, "unknown method '" + name + "'");
    methods.push_back(*method);
  }
  if (methods.empty()) throw Error(errc::config_error, "no methods requested");
  std::optional<Family> family_override;
  if (!family_flag.empty()) {
    family_override = parse_family(family_flag);
    if (!family_override)
      throw Error(errc::config_error, "unknown family '" + family_flag + "'");
  }

  const auto rows = read_studies_file(input);
  const std::uint64_t seed = resolve_seed(common);
  const AbcConfig abc_config = make_abc_config(abc_opts, seed);
  const RngStream root(seed);

  std::ostringstream body;
  body << "study_id,method,scenario,mean_est,sd_est,n_accepted,error_code\n";
  int failed_cells = 0;
  int total_cells = 0;

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const StudyRow& row = rows[i];

    std::optional<errc> row_error;
    Scenario scenario = Scenario::s1;
    SummaryStats stats;
    try {
      stats = to_summary_stats(row);
      if (scenario_override) {
        scenario = *scenario_override;
      } else {
        const auto detected = detect_scenario(stats);
        if (!detected)
          throw Error(errc::missing_field,
                      "present fields do not match any scenario");
        scenario = *detected;
      }
      validate(stats, scenario);
    } catch (const Error& e) {
      row_error = e.code();
    }

    for (const Method method : methods) {
      ++total_cells;
      std::vector<std::string> fields(7);
      fields[0] = row.study_id;
      fields[1] = std::string(to_string(method));
      fields[2] = row_error ? "" : std::string(to_string(scenario));
      try {
        if (row_error) throw Error(*row_error, "row failed validation");
        if (!method_supports(method, scenario))
          throw Error(errc::unsupported_scenario,
                      std::string(to_string(method)) + " is not defined for " +
                          std::string(to_string(scenario)));
        Estimate est;
        if (method == Method::abc) {
          const Family family = family_override ? *family_override
                                : row.family_hint ? *row.family_hint
                                : throw Error(errc::config_error,
                                              "abc needs --family or a family_hint");
          PriorConfig prior = default_priors(family, stats, scenario);
          if (row.support_bounds) prior.support = row.support_bounds;
          const AbcResult result = abc_run(stats, scenario, family, prior, abc_config,
                                           root.split(i), common.threads);
          est = result.estimate;
          fields[5] = std::to_string(result.n_accepted);
        } else {
          switch (method) {
            case Method::adhoc: est = adhoc_estimate(stats, scenario); break;
            case Method::hozo: est = hozo_estimate(stats); break;
            case Method::bland:
              est = bland_estimate(stats, bland_exact ? BlandVariant::exact
                                                      : BlandVariant::approximate);
              break;
            default: est = wan_estimate(stats, scenario); break;
          }
        }
        fields[3] = format_double(est.mean);
        fields[4] = format_double(est.sd);
      } catch (const Error& e) {
        fields[6] = std::string(to_string(e.code()));
        ++failed_cells;
      }
      csv::write_record(body, fields);
    }
  }

  RunManifest manifest;
  manifest.seed = seed;
  manifest.config_digest = digest_file(input);
  manifest.timestamp = iso8601_utc_now();
  emit_output(common, body.str(), manifest);
  return finish_rows(failed_cells, total_cells);
}

int run_select(const std::string& input, const CommonOptions& common,
               const AbcOptions& abc_opts, const std::string& scenario_flag,
               const std::string& candidates_flag) {
  using namespace abcstat;

  std::optional<Scenario> scenario_override;
  if (!scenario_flag.empty()) {
    scenario_override = parse_scenario(scenario_flag);
    if (!scenario_override)
      throw Error(errc::config_error, "unknown scenario '" + scenario_flag + "'");
  }
  std::vector<Family> candidates;
  for (const auto& name : split_list(candidates_flag)) {
    const auto family = parse_family(name);
    if (!family) throw Error(errc::config_error, "unknown family '" + name + "'");
    candidates.push_back(*family);
  }
  if (candidates.size() < 2)
    throw Error(errc::config_error, "--candidates needs at least two families");

  const auto rows = read_studies_file(input);
  const std::uint64_t seed = resolve_seed(common);
  const AbcConfig abc_config = make_abc_config(abc_opts, seed);
  const RngStream root(seed);

  std::ostringstream body;
  body << "study_id,family,posterior_prob,chosen,error_code\n";
  int failed_rows = 0;

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const StudyRow& row = rows[i];
    try {
      const SummaryStats stats = to_summary_stats(row);
      const Scenario scenario = scenario_override ? *scenario_override : [&] {
        const auto detected = detect_scenario(stats);
        if (!detected)
          throw Error(errc::missing_field, "present fields do not match any scenario");
        return *detected;
      }();
      validate(stats, scenario);

      std::vector<PriorConfig> priors;
      for (const Family family : candidates) {
        PriorConfig prior = default_priors(family, stats, scenario);
        if (family == Family::beta && row.support_bounds)
          prior.support = row.support_bounds;
        priors.push_back(prior);
      }
      const ModelSelectionResult result = select_distribution(
          stats, scenario, priors, abc_config, root.split(i), common.threads);
      for (const auto& candidate : result.candidates) {
        std::vector<std::string> fields = {
            row.study_id, std::string(to_string(candidate.family)),
            format_double(candidate.posterior_prob),
            std::string(to_string(result.chosen)), ""};
        csv::write_record(body, fields);
      }
    } catch (const Error& e) {
      std::vector<std::string> fields = {row.study_id, "", "", "",
                                         std::string(to_string(e.code()))};
      csv::write_record(body, fields);
      ++failed_rows;
    }
  }

  RunManifest manifest;
  manifest.seed = seed;
  manifest.config_digest = digest_file(input);
  manifest.timestamp = iso8601_utc_now();
  emit_output(common, body.str(), manifest);
  return finish_rows(failed_rows, static_cast<int>(rows.size()));
}

bool declares_master_seed(const std::string& config_path) {
  std::ifstream is(config_path);
  const auto j = nlohmann::json::parse(is, nullptr, false);
  return j.is_object() && j.contains("master_seed");
}

int run_simulate(const std::string& config_path, const CommonOptions& common) {
  using namespace abcstat;

  ExperimentConfig config = read_experiment_config(config_path);
  if (common.seed)
    config.master_seed = *common.seed;
  else if (!declares_master_seed(config_path))
    config.master_seed = resolve_seed(common);  // generated and announced

  const auto records = run_experiment(config, common.threads);

  std::ostringstream body;
  write_are_csv(body, config, records);

  RunManifest manifest;
  manifest.seed = config.master_seed;
  manifest.config_digest = digest_file(config_path);
  manifest.timestamp = iso8601_utc_now();
  emit_output(common, body.str(), manifest);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimate study means and standard deviations from reported "
               "summary statistics (min/quartiles/median/max and n)"};
  app.require_subcommand(1);

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "Estimate mean and SD for each study in a table");
  std::string est_input, est_scenario, est_methods = "wan", est_family;
  bool est_bland_exact = false;
  CommonOptions est_common;
  AbcOptions est_abc;
  estimate->add_option("input", est_input, "Studies file (.csv or .json)")->required();
  estimate->add_option("--scenario", est_scenario,
                       "Force scenario s1|s2|s3 (default: auto-detect per row)");
  estimate->add_option("--methods", est_methods,
                       "Comma list of adhoc|hozo|bland|wan|abc");
  estimate->add_option("--family", est_family,
                       "Distribution family for ABC (overrides family_hint)");
  estimate->add_flag("--bland-exact", est_bland_exact,
                     "Use Bland's n-dependent formulas (experimental)");
  add_abc_flags(*estimate, est_abc);
  add_common_flags(*estimate, est_common);

  // select
  auto* select = app.add_subcommand(
      "select", "Pick the best-supported distribution per study via ABC");
  std::string sel_input, sel_scenario, sel_candidates;
  CommonOptions sel_common;
  AbcOptions sel_abc;
  select->add_option("input", sel_input, "Studies file (.csv or .json)")->required();
  select->add_option("--candidates", sel_candidates, "Comma list of candidate families")
      ->required();
  select->add_option("--scenario", sel_scenario,
                     "Force scenario s1|s2|s3 (default: auto-detect per row)");
  add_abc_flags(*select, sel_abc);
  add_common_flags(*select, sel_common);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Run a relative-error simulation grid from a config file");
  std::string sim_config;
  CommonOptions sim_common;
  simulate->add_option("config", sim_config, "Experiment config (.json)")->required();
  add_common_flags(*simulate, sim_common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed())
      return run_estimate(est_input, est_common, est_abc, est_scenario, est_methods,
                          est_family, est_bland_exact);
    if (select->parsed())
      return run_select(sel_input, sel_common, sel_abc, sel_scenario, sel_candidates);
    if (simulate->parsed()) return run_simulate(sim_config, sim_common);
  } catch (const abcstat::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const abcstat::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
