#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abcstat/abc.hpp"
#include "abcstat/closed_form.hpp"
#include "abcstat/distributions.hpp"
#include "abcstat/errors.hpp"
#include "abcstat/parallel.hpp"
#include "abcstat/rng.hpp"
#include "abcstat/summary_stats.hpp"

namespace abcstat {

// One simulation study: draw samples from `distribution`, summarize them
// under `scenario`, estimate with every listed method, and aggregate
// relative errors over `replicates` for each sample size in `n_grid`.
struct ExperimentConfig {
  DistributionSpec distribution{};
  Scenario scenario = Scenario::s1;
  std::vector<Method> methods;
  std::vector<int> n_grid;
  int replicates = 200;
  AbcConfig abc{};
  std::uint64_t master_seed = 0;
};

inline void validate_config(const ExperimentConfig& config) {
  validate_spec(config.distribution);
  if (config.methods.empty())
    throw Error(errc::config_error, "methods: at least one method is required");
  for (const Method m : config.methods)
    if (!method_supports(m, config.scenario))
      throw Error(errc::config_error, "methods: " + std::string(to_string(m)) +
                                          " is not defined for scenario " +
                                          std::string(to_string(config.scenario)));
  if (config.n_grid.empty())
    throw Error(errc::config_error, "n_grid: must be nonempty");
  if (!std::is_sorted(config.n_grid.begin(), config.n_grid.end()))
    throw Error(errc::config_error, "n_grid: must be sorted ascending");
  for (const int n : config.n_grid)
    if (n < 2) throw Error(errc::config_error, "n_grid: every n must be >= 2");
  if (config.replicates < 1)
    throw Error(errc::config_error, "replicates: must be >= 1");
  if (config.abc.n_iter < 1)
    throw Error(errc::config_error, "abc.n_iter: must be >= 1");
}

struct MethodRelErr {
  std::optional<double> re_mean{};
  std::optional<double> re_sd{};
  std::optional<errc> error{};
};

struct TrialResult {
  std::vector<MethodRelErr> methods;  // aligned with the method list
  bool excluded = false;              // degenerate sample (zero mean or SD)
};

// (estimate - truth) / truth.
inline double relative_error(double estimate, double truth) {
  return (estimate - truth) / truth;
}

// One replicate: draw a sample, take its realized mean/SD as the truth, and
// let every method estimate from the summary statistics alone. The raw
// sample never reaches an estimator; ABC runs on its own derived stream, so
// the method list order is irrelevant.
inline TrialResult run_trial(const DistributionSpec& spec, int n, Scenario scenario,
                             std::span<const Method> methods, const AbcConfig& abc,
                             const RngStream& rng) {
  TrialResult result;
  result.methods.resize(methods.size());

  RngStream sample_stream = rng.split(0);
  const std::vector<double> data = sample(spec, n, sample_stream);
  const Moments truth = sample_moments(data);
  if (truth.sd == 0.0 || truth.mean == 0.0) {
    result.excluded = true;
    return result;
  }
  const SummaryStats stats = summarize_sample(data, scenario, abc.quantile_rule);

  for (std::size_t m = 0; m < methods.size(); ++m) {
    try {
      Estimate est;
      switch (methods[m]) {
        case Method::adhoc: est = adhoc_estimate(stats, scenario); break;
        case Method::hozo: est = hozo_estimate(stats); break;
        case Method::bland: est = bland_estimate(stats); break;
        case Method::wan: est = wan_estimate(stats, scenario); break;
        case Method::abc: {
          const PriorConfig prior = default_priors(spec.family, stats, scenario);
          est = abc_run(stats, scenario, spec.family, prior, abc, rng.split(1)).estimate;
          break;
        }
      }
      result.methods[m].re_mean = relative_error(est.mean, truth.mean);
      result.methods[m].re_sd = relative_error(est.sd, truth.sd);
    } catch (const Error& e) {
      result.methods[m].error = e.code();
    }
  }
  return result;
}

// One (method, n) cell of the simulation grid.
struct AreRecord {
  Method method = Method::adhoc;
  int n = 0;
  double are_mean = 0.0;
  double are_sd = 0.0;
  double se_mean = 0.0;
  double se_sd = 0.0;
  int replicates = 0;
  int failures = 0;  // replicates that errored or were excluded
};

namespace detail {

inline AreRecord aggregate_cell(Method method, int n, int replicates,
                                std::span<const MethodRelErr> outcomes,
                                std::span<const char> excluded) {
  AreRecord rec;
  rec.method = method;
  rec.n = n;
  rec.replicates = replicates;

  std::vector<double> re_means, re_sds;
  re_means.reserve(outcomes.size());
  re_sds.reserve(outcomes.size());
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (excluded[r] || outcomes[r].error || !outcomes[r].re_mean) continue;
    re_means.push_back(*outcomes[r].re_mean);
    re_sds.push_back(*outcomes[r].re_sd);
  }
  rec.failures = replicates - static_cast<int>(re_means.size());
  if (re_means.empty()) {
    rec.are_mean = rec.are_sd = rec.se_mean = rec.se_sd =
        std::numeric_limits<double>::quiet_NaN();
    return rec;
  }
  const auto count = static_cast<double>(re_means.size());
  for (double v : re_means) rec.are_mean += v;
  for (double v : re_sds) rec.are_sd += v;
  rec.are_mean /= count;
  rec.are_sd /= count;
  if (re_means.size() >= 2) {
    double ssm = 0.0, sss = 0.0;
    for (double v : re_means) ssm += (v - rec.are_mean) * (v - rec.are_mean);
    for (double v : re_sds) sss += (v - rec.are_sd) * (v - rec.are_sd);
    rec.se_mean = std::sqrt(ssm / (count - 1.0)) / std::sqrt(count);
    rec.se_sd = std::sqrt(sss / (count - 1.0)) / std::sqrt(count);
  }
  return rec;
}

}  // namespace detail

// All (method, n) cells for a single sample size. Replicate r of sample
// size n runs on the stream (master_seed -> split n -> split r), so any
// cell can be recomputed alone and still match the full grid.
inline std::vector<AreRecord> run_cell(const ExperimentConfig& config, int n,
                                       int threads = 1) {
  const auto replicates = static_cast<std::size_t>(config.replicates);
  std::vector<TrialResult> trials(replicates);
  const RngStream root(config.master_seed);
  const RngStream cell_stream = root.split(static_cast<std::uint64_t>(n));
  parallel_for(replicates, threads, [&](std::size_t r) {
    trials[r] = run_trial(config.distribution, n, config.scenario, config.methods,
                          config.abc, cell_stream.split(r));
  });

  std::vector<AreRecord> records;
  records.reserve(config.methods.size());
  std::vector<MethodRelErr> outcomes(replicates);
  std::vector<char> excluded(replicates);
  for (std::size_t r = 0; r < replicates; ++r) excluded[r] = trials[r].excluded;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (std::size_t r = 0; r < replicates; ++r)
      outcomes[r] = trials[r].excluded ? MethodRelErr{} : trials[r].methods[m];
    records.push_back(detail::aggregate_cell(config.methods[m], n,
                                             config.replicates, outcomes, excluded));
  }
  return records;
}

// The full grid; records are ordered by (n ascending, method order).
// Parallelism is over (n, replicate) cells and cannot change the results.
inline std::vector<AreRecord> run_experiment(const ExperimentConfig& config,
                                             int threads = 1) {
  validate_config(config);

  struct Task {
    int n = 0;
    std::size_t replicate = 0;
  };
  const auto replicates = static_cast<std::size_t>(config.replicates);
  std::vector<Task> tasks;
  tasks.reserve(config.n_grid.size() * replicates);
  for (const int n : config.n_grid)
    for (std::size_t r = 0; r < replicates; ++r) tasks.push_back({n, r});

  std::vector<TrialResult> trials(tasks.size());
  const RngStream root(config.master_seed);
  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const auto [n, r] = tasks[t];
    const RngStream stream = root.split(static_cast<std::uint64_t>(n)).split(r);
    trials[t] = run_trial(config.distribution, n, config.scenario, config.methods,
                          config.abc, stream);
  });

  std::vector<AreRecord> records;
  records.reserve(config.n_grid.size() * config.methods.size());
  std::vector<MethodRelErr> outcomes(replicates);
  std::vector<char> excluded(replicates);
  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    const std::size_t base = g * replicates;
    for (std::size_t r = 0; r < replicates; ++r)
      excluded[r] = trials[base + r].excluded;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (std::size_t r = 0; r < replicates; ++r)
        outcomes[r] = trials[base + r].excluded ? MethodRelErr{}
                                                : trials[base + r].methods[m];
      records.push_back(detail::aggregate_cell(config.methods[m], config.n_grid[g],
                                               config.replicates, outcomes, excluded));
    }
  }
  return records;
}

}  // namespace abcstat
