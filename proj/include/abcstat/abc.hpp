#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abcstat/closed_form.hpp"
#include "abcstat/distributions.hpp"
#include "abcstat/errors.hpp"
#include "abcstat/parallel.hpp"
#include "abcstat/rng.hpp"
#include "abcstat/summary_stats.hpp"

namespace abcstat {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const noexcept { return upper - lower; }
  double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

// Uniform prior bounds for a family's parameters. For the beta family an
// optional support window (lower, upper) maps data affinely onto [0,1]:
// pseudo-data are drawn on [0,1] and stretched back to data units before the
// distance is taken, and moment estimates are transformed the same way.
struct PriorConfig {
  Family family = Family::normal;
  Interval bounds_p1{};
  std::optional<Interval> bounds_p2{};
  std::optional<Interval> support{};
};

inline void validate_prior(const PriorConfig& prior) {
  const auto check = [](const Interval& iv, const char* what, bool nonnegative) {
    if (!(iv.lower < iv.upper))
      throw Error(errc::invalid_parameters,
                  std::string(what) + " bounds must satisfy lower < upper");
    if (nonnegative && iv.lower < 0.0)
      throw Error(errc::invalid_parameters,
                  std::string(what) + " bounds must be nonnegative");
  };
  // Location parameters (normal / lognormal mu) may be negative; scale and
  // shape parameters may not.
  const bool p1_location =
      prior.family == Family::normal || prior.family == Family::log_normal;
  check(prior.bounds_p1, "parameter 1", !p1_location);
  if (prior.family == Family::exponential) {
    if (prior.bounds_p2)
      throw Error(errc::invalid_parameters, "exponential has a single parameter");
  } else {
    if (!prior.bounds_p2)
      throw Error(errc::invalid_parameters,
                  std::string(to_string(prior.family)) + " needs bounds for parameter 2");
    check(*prior.bounds_p2, "parameter 2", true);
  }
  if (prior.support) {
    if (prior.family != Family::beta)
      throw Error(errc::invalid_parameters, "support bounds apply to the beta family only");
    if (!(prior.support->lower < prior.support->upper))
      throw Error(errc::invalid_parameters, "support bounds must satisfy lower < upper");
  }
}

// Default uniform priors, derived from the observed statistics:
//   normal:      mu ~ U(min, max) in s1, U(q1, q3) otherwise; sigma ~ U(0, 50)
//   lognormal:   mu ~ U(log min, log max) in s1, U(log q1, log q3) otherwise;
//                sigma ~ U(0, 10)
//   exponential: mean ~ U(0, 40)
//   beta:        alpha, beta ~ U(0, 40)
//   weibull:     shape, scale ~ U(0, 50)
inline PriorConfig default_priors(Family family, const SummaryStats& stats,
                                  Scenario scenario) {
  const auto location_bounds = [&]() -> Interval {
    if (scenario == Scenario::s1)
      return {detail::require_field(stats.x_min, "x_min"),
              detail::require_field(stats.x_max, "x_max")};
    return {detail::require_field(stats.x_q1, "x_q1"),
            detail::require_field(stats.x_q3, "x_q3")};
  };

  PriorConfig prior;
  prior.family = family;
  switch (family) {
    case Family::normal:
      prior.bounds_p1 = location_bounds();
      prior.bounds_p2 = Interval{0.0, 50.0};
      break;
    case Family::log_normal: {
      const Interval raw = location_bounds();
      if (!(raw.lower > 0.0))
        throw Error(errc::non_positive_support,
                    "lognormal priors need positive statistics to take logs of");
      prior.bounds_p1 = Interval{std::log(raw.lower), std::log(raw.upper)};
      prior.bounds_p2 = Interval{0.0, 10.0};
      break;
    }
    case Family::exponential:
      prior.bounds_p1 = Interval{0.0, 40.0};
      break;
    case Family::beta:
      prior.bounds_p1 = Interval{0.0, 40.0};
      prior.bounds_p2 = Interval{0.0, 40.0};
      break;
    case Family::weibull:
      prior.bounds_p1 = Interval{0.0, 50.0};
      prior.bounds_p2 = Interval{0.0, 50.0};
      break;
  }
  return prior;
}

struct Acceptance {
  enum class Mode { percentile, epsilon };
  Mode mode = Mode::percentile;
  double value = 0.1;

  static Acceptance percentile(double pct) { return {Mode::percentile, pct}; }
  static Acceptance epsilon(double eps) { return {Mode::epsilon, eps}; }
};

enum class AbcEstimator { automatic, direct, plug_in, simulation };

constexpr std::string_view to_string(AbcEstimator e) noexcept {
  switch (e) {
    case AbcEstimator::automatic: return "auto";
    case AbcEstimator::direct: return "direct";
    case AbcEstimator::plug_in: return "plugin";
    case AbcEstimator::simulation: return "simulation";
  }
  return "?";
}

inline std::optional<AbcEstimator> parse_estimator(std::string_view text) noexcept {
  if (text == "auto") return AbcEstimator::automatic;
  if (text == "direct") return AbcEstimator::direct;
  if (text == "plugin" || text == "plug-in") return AbcEstimator::plug_in;
  if (text == "simulation") return AbcEstimator::simulation;
  return std::nullopt;
}

// Knobs of one rejection-sampler run. "automatic" resolves to the direct
// estimator for the normal family (averages of accepted mu/sigma already are
// the mean/SD) and to plug-in for every other family. The quantile rule is
// applied to pseudo-data; configure it to match the observed summaries.
struct AbcConfig {
  int n_iter = 50'000;
  Acceptance acceptance{};
  AbcEstimator estimator = AbcEstimator::automatic;
  std::uint64_t seed = 0;
  QuantileRule quantile_rule = QuantileRule::type7;
  bool standardize_distance = false;
};

struct AcceptedDraw {
  DistributionSpec spec{};
  double distance = 0.0;
};

struct AbcResult {
  std::vector<AcceptedDraw> accepted;  // in iteration order
  Estimate estimate{};
  int n_accepted = 0;
  double acceptance_threshold_used = 0.0;
};

// Euclidean distance between two summary vectors of equal length.
inline double distance(const SummaryVector& a, const SummaryVector& b) {
  if (a.count != b.count)
    throw Error(errc::length_mismatch,
                "summary vectors have lengths " + std::to_string(a.count) +
                    " and " + std::to_string(b.count));
  double ss = 0.0;
  for (std::size_t i = 0; i < a.count; ++i) {
    const double d = a.values[i] - b.values[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

namespace detail {

// Indices of the k smallest distances, ties broken by iteration order, the
// result sorted by iteration index. This ordered reduction is what makes
// percentile acceptance independent of the parallel schedule.
inline std::vector<std::uint32_t> top_k_indices(std::span<const double> distances,
                                                std::size_t k) {
  std::vector<std::uint32_t> idx(distances.size());
  std::iota(idx.begin(), idx.end(), 0u);
  k = std::min(k, idx.size());
  const auto closer = [&](std::uint32_t lhs, std::uint32_t rhs) {
    if (distances[lhs] != distances[rhs]) return distances[lhs] < distances[rhs];
    return lhs < rhs;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k) - 1,
                   idx.end(), closer);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::size_t percentile_count(int n_iter, double pct) {
  if (!(pct > 0.0 && pct <= 100.0))
    throw Error(errc::config_error, "acceptance percentile must lie in (0, 100]");
  const auto k = static_cast<std::size_t>(n_iter * pct / 100.0 + 1e-9);
  if (k < 1)
    throw Error(errc::config_error,
                "n_iter x percentile/100 must yield at least one accepted draw");
  return k;
}

// Accepted iteration indices plus the threshold actually used.
inline std::pair<std::vector<std::uint32_t>, double> accept_draws(
    std::span<const double> distances, int n_iter, const Acceptance& acc) {
  if (acc.mode == Acceptance::Mode::percentile) {
    auto idx = top_k_indices(distances, percentile_count(n_iter, acc.value));
    double threshold = 0.0;
    for (auto i : idx) threshold = std::max(threshold, distances[i]);
    return {std::move(idx), threshold};
  }
  if (!(acc.value > 0.0))
    throw Error(errc::config_error, "epsilon must be positive");
  std::vector<std::uint32_t> idx;
  for (std::uint32_t i = 0; i < distances.size(); ++i)
    if (distances[i] < acc.value) idx.push_back(i);
  return {std::move(idx), acc.value};
}

struct ObservedTarget {
  SummaryVector vec{};
  double scale = 1.0;  // common per-component divisor (observed range) when standardizing
  Scenario scenario = Scenario::s1;
  QuantileRule rule = QuantileRule::type7;
  int n = 0;
};

inline ObservedTarget make_target(const SummaryStats& stats, Scenario scenario,
                                  const AbcConfig& config) {
  ObservedTarget t;
  t.vec = to_vector(stats, scenario);
  t.scenario = scenario;
  t.rule = config.quantile_rule;
  t.n = stats.n;
  if (config.standardize_distance) {
    const auto view = t.vec.view();
    const auto [lo, hi] = std::minmax_element(view.begin(), view.end());
    const double range = *hi - *lo;
    t.scale = range > 0.0 ? range : 1.0;
  }
  return t;
}

// All observed statistics must sit inside the beta model's support window
// ([0,1] by default).
inline void check_beta_support(const SummaryStats& stats, const PriorConfig& prior) {
  if (prior.family != Family::beta) return;
  const double lo = prior.support ? prior.support->lower : 0.0;
  const double hi = prior.support ? prior.support->upper : 1.0;
  const auto inside = [&](const std::optional<double>& v) {
    return !v || (*v >= lo && *v <= hi);
  };
  if (!inside(stats.x_min) || !inside(stats.x_q1) ||
      !(stats.x_med >= lo && stats.x_med <= hi) || !inside(stats.x_q3) ||
      !inside(stats.x_max))
    throw Error(errc::incompatible_support,
                prior.support
                    ? "statistics fall outside the beta support window"
                    : "statistics fall outside [0,1]; supply beta support bounds");
}

inline DistributionSpec draw_spec(const PriorConfig& prior, RngStream& rng) {
  DistributionSpec spec;
  spec.family = prior.family;
  spec.p1 = rng.uniform_open(prior.bounds_p1.lower, prior.bounds_p1.upper);
  if (prior.bounds_p2)
    spec.p2 = rng.uniform_open(prior.bounds_p2->lower, prior.bounds_p2->upper);
  return spec;
}

// Pseudo-data distance for one parameter draw. buf is a reusable scratch
// buffer; it comes back sorted.
inline double simulate_distance(const DistributionSpec& spec,
                                const std::optional<Interval>& support,
                                const ObservedTarget& target, RngStream& rng,
                                std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(target.n));
  sample_into(spec, buf, rng);
  if (support) {
    const double lo = support->lower;
    const double width = support->width();
    for (auto& x : buf) x = lo + width * x;
  }
  std::sort(buf.begin(), buf.end());
  const SummaryVector sim = summarize_sorted_to_vector(buf, target.scenario, target.rule);
  double ss = 0.0;
  for (std::size_t i = 0; i < sim.count; ++i) {
    const double d = (sim.values[i] - target.vec.values[i]) / target.scale;
    ss += d * d;
  }
  const double result = std::sqrt(ss);
  // overflowed pseudo-data cannot match finite observations; report an
  // infinitely bad fit so NaNs never reach the top-k comparator
  return std::isfinite(result) ? result : std::numeric_limits<double>::infinity();
}

inline AbcEstimator resolve_estimator(AbcEstimator requested, Family family) {
  if (requested != AbcEstimator::automatic) return requested;
  return family == Family::normal ? AbcEstimator::direct : AbcEstimator::plug_in;
}

// Acceptance shares per candidate. When every accepted draw ties, the
// percentile cut among them is arbitrary, so the posterior is reported
// uniform and flagged degenerate.
inline std::pair<std::vector<double>, bool> posterior_shares(
    std::span<const std::uint32_t> model, std::span<const double> distances,
    std::span<const std::uint32_t> accepted_idx, std::size_t n_candidates) {
  std::vector<double> probs(n_candidates, 0.0);
  bool all_tied = accepted_idx.size() > 1;
  for (const auto i : accepted_idx)
    if (distances[i] != distances[accepted_idx.front()]) {
      all_tied = false;
      break;
    }
  if (all_tied) {
    for (auto& p : probs) p = 1.0 / static_cast<double>(n_candidates);
    return {std::move(probs), true};
  }
  for (const auto i : accepted_idx) probs[model[i]] += 1.0;
  for (auto& p : probs) p /= static_cast<double>(accepted_idx.size());
  return {std::move(probs), false};
}

struct ParamMeans {
  double p1 = 0.0;
  double p2 = 0.0;
  bool has_p2 = false;
};

inline ParamMeans accepted_param_means(std::span<const AcceptedDraw> accepted) {
  ParamMeans m;
  for (const auto& draw : accepted) {
    m.p1 += draw.spec.p1;
    if (draw.spec.p2) {
      m.p2 += *draw.spec.p2;
      m.has_p2 = true;
    }
  }
  const auto k = static_cast<double>(accepted.size());
  m.p1 /= k;
  if (m.has_p2) m.p2 /= k;
  return m;
}

}  // namespace detail

// One ABC rejection run: draw parameters from the uniform priors, simulate
// pseudo-data of the observed size, summarize it under the same scenario and
// quantile rule, and keep the draws whose summary vectors land closest to
// the observed one. Deterministic given the stream, including under
// parallel evaluation.
inline AbcResult abc_run(const SummaryStats& stats, Scenario scenario,
                         Family family, const PriorConfig& prior,
                         const AbcConfig& config, const RngStream& rng,
                         int threads = 1) {
  validate(stats, scenario);
  validate_prior(prior);
  if (prior.family != family)
    throw Error(errc::config_error, "prior is configured for a different family");
  if (config.n_iter < 1) throw Error(errc::config_error, "n_iter must be positive");
  detail::check_beta_support(stats, prior);

  const detail::ObservedTarget target = detail::make_target(stats, scenario, config);
  const auto n_iter = static_cast<std::size_t>(config.n_iter);

  std::vector<double> distances(n_iter);
  std::vector<double> p1s(n_iter);
  std::vector<double> p2s(prior.bounds_p2 ? n_iter : 0);

  constexpr std::size_t kChunk = 256;
  const std::size_t n_chunks = (n_iter + kChunk - 1) / kChunk;
  parallel_for(n_chunks, threads, [&](std::size_t chunk) {
    std::vector<double> buf;
    const std::size_t begin = chunk * kChunk;
    const std::size_t end = std::min(begin + kChunk, n_iter);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream = rng.split(i);
      const DistributionSpec spec = detail::draw_spec(prior, stream);
      distances[i] = detail::simulate_distance(spec, prior.support, target, stream, buf);
      p1s[i] = spec.p1;
      if (spec.p2) p2s[i] = *spec.p2;
    }
  });

  auto [accepted_idx, threshold] =
      detail::accept_draws(distances, config.n_iter, config.acceptance);
  if (accepted_idx.empty())
    throw Error(errc::no_accepted_draws,
                "no draw passed epsilon = " + std::to_string(config.acceptance.value));

  AbcResult result;
  result.accepted.reserve(accepted_idx.size());
  for (auto i : accepted_idx) {
    DistributionSpec spec;
    spec.family = family;
    spec.p1 = p1s[i];
    if (prior.bounds_p2) spec.p2 = p2s[i];
    result.accepted.push_back({spec, distances[i]});
  }
  result.n_accepted = static_cast<int>(result.accepted.size());
  result.acceptance_threshold_used = threshold;

  const AbcEstimator estimator = detail::resolve_estimator(config.estimator, family);
  const detail::ParamMeans means = detail::accepted_param_means(result.accepted);
  Estimate est;
  est.method = Method::abc;
  est.scenario = scenario;
  switch (estimator) {
    case AbcEstimator::direct: {
      if (family != Family::normal)
        throw Error(errc::config_error,
                    "the direct estimator reads parameters as (mean, sd) and is "
                    "meaningful for the normal family only");
      est.mean = means.p1;
      est.sd = means.p2;
      break;
    }
    case AbcEstimator::plug_in: {
      DistributionSpec spec;
      spec.family = family;
      spec.p1 = means.p1;
      if (means.has_p2) spec.p2 = means.p2;
      const Moments m = moments(spec);
      est.mean = m.mean;
      est.sd = m.sd;
      if (prior.support) {
        est.mean = prior.support->lower + prior.support->width() * est.mean;
        est.sd = prior.support->width() * est.sd;
      }
      break;
    }
    case AbcEstimator::simulation: {
      // Sample moments of one fresh pseudo-dataset per accepted draw,
      // averaged. Streams are re-derived from the accepted iteration
      // indices, so the estimate does not depend on acceptance order.
      std::vector<double> buf;
      double mean_acc = 0.0;
      double sd_acc = 0.0;
      for (std::size_t j = 0; j < accepted_idx.size(); ++j) {
        RngStream stream = rng.split(accepted_idx[j]).split(1);
        buf.resize(static_cast<std::size_t>(stats.n));
        sample_into(result.accepted[j].spec, buf, stream);
        if (prior.support) {
          const double lo = prior.support->lower;
          const double width = prior.support->width();
          for (auto& x : buf) x = lo + width * x;
        }
        const Moments m = sample_moments(buf);
        mean_acc += m.mean;
        sd_acc += m.sd;
      }
      est.mean = mean_acc / static_cast<double>(accepted_idx.size());
      est.sd = sd_acc / static_cast<double>(accepted_idx.size());
      break;
    }
    case AbcEstimator::automatic:
      break;  // resolved above
  }
  result.estimate = est;
  return result;
}

// Convenience overload seeding the stream from config.seed.
inline AbcResult abc_run(const SummaryStats& stats, Scenario scenario,
                         Family family, const PriorConfig& prior,
                         const AbcConfig& config, int threads = 1) {
  return abc_run(stats, scenario, family, prior, config, RngStream(config.seed),
                 threads);
}

struct CandidateScore {
  Family family = Family::normal;
  double posterior_prob = 0.0;
  int n_accepted = 0;
};

struct ModelSelectionResult {
  std::vector<CandidateScore> candidates;  // aligned with the input list
  std::size_t chosen_index = 0;
  Family chosen = Family::normal;
  bool degenerate = false;  // every accepted draw tied; probabilities reported uniform

  // Posterior-odds ratio of candidates i and j under equal model priors.
  double bayes_factor(std::size_t i, std::size_t j) const {
    return candidates.at(i).posterior_prob / candidates.at(j).posterior_prob;
  }
};

// ABC model choice: each iteration picks a candidate uniformly (equal model
// priors), draws parameters from that candidate's prior, and simulates. The
// globally closest draws are accepted and each candidate's posterior
// probability is approximated by its share of acceptances.
inline ModelSelectionResult select_distribution(
    const SummaryStats& stats, Scenario scenario,
    const std::vector<PriorConfig>& candidates, const AbcConfig& config,
    const RngStream& rng, int threads = 1) {
  if (candidates.size() < 2)
    throw Error(errc::config_error, "model selection needs at least two candidates");
  validate(stats, scenario);
  for (const auto& prior : candidates) {
    validate_prior(prior);
    detail::check_beta_support(stats, prior);
  }
  if (config.n_iter < 1) throw Error(errc::config_error, "n_iter must be positive");

  const detail::ObservedTarget target = detail::make_target(stats, scenario, config);
  const auto n_iter = static_cast<std::size_t>(config.n_iter);

  std::vector<double> distances(n_iter);
  std::vector<std::uint32_t> model(n_iter);

  constexpr std::size_t kChunk = 256;
  const std::size_t n_chunks = (n_iter + kChunk - 1) / kChunk;
  parallel_for(n_chunks, threads, [&](std::size_t chunk) {
    std::vector<double> buf;
    const std::size_t begin = chunk * kChunk;
    const std::size_t end = std::min(begin + kChunk, n_iter);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream = rng.split(i);
      const auto j = static_cast<std::uint32_t>(stream.uniform_index(candidates.size()));
      const DistributionSpec spec = detail::draw_spec(candidates[j], stream);
      distances[i] =
          detail::simulate_distance(spec, candidates[j].support, target, stream, buf);
      model[i] = j;
    }
  });

  auto [accepted_idx, threshold] =
      detail::accept_draws(distances, config.n_iter, config.acceptance);
  (void)threshold;
  if (accepted_idx.empty())
    throw Error(errc::no_accepted_draws,
                "no draw passed epsilon = " + std::to_string(config.acceptance.value));

  ModelSelectionResult result;
  result.candidates.resize(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j)
    result.candidates[j].family = candidates[j].family;
  for (auto i : accepted_idx) result.candidates[model[i]].n_accepted += 1;

  auto [probs, degenerate] =
      detail::posterior_shares(model, distances, accepted_idx, candidates.size());
  result.degenerate = degenerate;
  for (std::size_t j = 0; j < candidates.size(); ++j)
    result.candidates[j].posterior_prob = probs[j];

  result.chosen_index = 0;
  for (std::size_t j = 1; j < result.candidates.size(); ++j)
    if (result.candidates[j].posterior_prob >
        result.candidates[result.chosen_index].posterior_prob)
      result.chosen_index = j;
  result.chosen = result.candidates[result.chosen_index].family;
  return result;
}

inline ModelSelectionResult select_distribution(
    const SummaryStats& stats, Scenario scenario,
    const std::vector<PriorConfig>& candidates, const AbcConfig& config,
    int threads = 1) {
  return select_distribution(stats, scenario, candidates, config,
                             RngStream(config.seed), threads);
}

}  // namespace abcstat
