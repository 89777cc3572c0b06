#include "netclear/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "netclear/clearing.hpp"
#include "netclear/error.hpp"
#include "netclear/parallel.hpp"

namespace netclear {
namespace {

constexpr double kIntegralTol = 1e-9;

bool fits_budget(const std::vector<std::int64_t>& z, double budget) {
  const std::int64_t total = std::accumulate(z.begin(), z.end(), std::int64_t{0});
  return static_cast<double>(total) <= budget + kIntegralTol;
}

double path_max_beta(const PathValue& pv) {
  double m = 0.0;
  for (const auto& step : pv.steps) m = std::max(m, step.max_beta);
  return m;
}

} // namespace

Vector DiscreteAction::as_vector() const {
  return Vector(amounts.begin(), amounts.end());
}

std::vector<std::int64_t> integral_caps(std::span<const double> caps) {
  std::vector<std::int64_t> out(caps.size());
  for (std::size_t i = 0; i < caps.size(); ++i) {
    const double r = std::round(caps[i]);
    if (!(caps[i] >= 0.0) || std::abs(caps[i] - r) > kIntegralTol || r > 1e15)
      throw InvalidInput("caps must be nonnegative integers for discrete interventions (node " +
                         std::to_string(i) + ")");
    out[i] = static_cast<std::int64_t>(r);
  }
  return out;
}

RoundedSchedule sample_interventions(const std::vector<Vector>& fractional,
                                     std::span<const std::int64_t> caps, double budget,
                                     std::size_t tau, Rng& rng) {
  if (tau < 1) throw InvalidInput("sample_interventions: tau must be >= 1");
  const std::size_t n = caps.size();
  for (const Vector& z : fractional) {
    if (z.size() != n) throw InvalidInput("sample_interventions: schedule size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (z[i] < -kIntegralTol || z[i] > static_cast<double>(caps[i]) + kIntegralTol)
        throw InvalidInput("sample_interventions: fractional amount outside [0, L]");
      if (caps[i] == 0 && z[i] > kIntegralTol)
        throw InvalidInput("sample_interventions: positive amount on a node with L = 0");
    }
  }

  RoundedSchedule out;
  out.actions.resize(fractional.size());
  while (out.attempts < tau) {
    ++out.attempts;
    bool all_feasible = true;
    for (std::size_t k = 0; k < fractional.size(); ++k) {
      DiscreteAction& act = out.actions[k];
      act.amounts.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (caps[i] == 0) continue;
        const double p = std::clamp(fractional[k][i] / static_cast<double>(caps[i]), 0.0, 1.0);
        std::binomial_distribution<std::int64_t> bin(caps[i], p);
        act.amounts[i] = bin(rng);
      }
      act.feasible = fits_budget(act.amounts, budget);
      all_feasible = all_feasible && act.feasible;
    }
    out.feasible = all_feasible;
    if (all_feasible) break;
  }
  return out;
}

RoundingReport round_and_simulate(const InitialCondition& start, const SamplePath& path,
                                  const PathValue& relaxed, std::span<const std::int64_t> caps,
                                  double budget, const RoundingOptions& opts, Rng& rng) {
  if (relaxed.steps.size() != path.size())
    throw InvalidInput("round_and_simulate: fractional solution does not match the path");
  std::vector<Vector> schedule;
  schedule.reserve(relaxed.steps.size());
  for (const auto& step : relaxed.steps) schedule.push_back(step.intervention);

  RoundingReport rep;
  rep.value_rel = relaxed.value;
  const double relaxed_beta = path_max_beta(relaxed);
  std::size_t used = 0;
  while (true) {
    RoundedSchedule draw = sample_interventions(schedule, caps, budget, opts.tau - used, rng);
    used += draw.attempts;
    std::vector<Vector> integral;
    integral.reserve(draw.actions.size());
    for (const auto& act : draw.actions) integral.push_back(act.as_vector());
    rep.realized = simulate_interventions(start, path, integral, opts.gini_weights);
    rep.actions = std::move(draw.actions);
    rep.feasible = draw.feasible;
    rep.value_sol = rep.realized.value;
    rep.max_beta = std::max(relaxed_beta, path_max_beta(rep.realized));
    rep.bound = 1.0 - rep.max_beta;
    rep.ratio = rep.value_rel > 0.0 ? rep.value_sol / rep.value_rel : 1.0;
    const bool ratio_ok = !opts.recheck_ratio || rep.value_sol >= rep.bound * rep.value_rel - 1e-9;
    if ((rep.feasible && ratio_ok) || used >= opts.tau) break;
  }
  rep.attempts = used;
  return rep;
}

DiscreteEstimate aggregate_discrete(const EnvironmentModel& env, const InitialCondition& start,
                                    const InterventionPolicy& policy,
                                    const AggregateOptions& agg, const RoundingOptions& opts) {
  if (agg.samples < 1) throw InvalidInput("aggregate_discrete: need at least one sample");
  if (opts.tau < 1) throw InvalidInput("aggregate_discrete: tau must be >= 1");
  if (env.nodes() != start.state.size())
    throw InvalidInput("aggregate_discrete: environment and start state disagree on n");
  policy.validate(env.nodes());
  const std::vector<std::int64_t> caps = integral_caps(policy.caps);

  DiscreteEstimate est;
  est.reports.resize(agg.samples);
  if (agg.keep_paths) est.relaxed_paths.resize(agg.samples);
  parallel_for(agg.samples, agg.threads, [&](std::size_t i) {
    Rng env_rng = substream(agg.seed, i, Stream::environment);
    const SamplePath path = sample_path(env, agg.first_round, env.horizon(), env_rng);
    PathValue relaxed = value_given_sample_path(start, path, policy);
    Rng round_rng = substream(agg.seed, i, Stream::rounding);
    est.reports[i] = round_and_simulate(start, path, relaxed, caps, policy.budget, opts, round_rng);
    if (agg.keep_paths) est.relaxed_paths[i] = std::move(relaxed);
  });

  Vector sol(agg.samples), rel(agg.samples);
  for (std::size_t i = 0; i < agg.samples; ++i) {
    sol[i] = est.reports[i].value_sol;
    rel[i] = est.reports[i].value_rel;
  }
  std::tie(est.mean, est.standard_error) = mean_and_stderr(sol);
  est.mean_relaxed = mean_and_stderr(rel).first;
  return est;
}

ApproximationBound approximation_bound(const BoundInputs& in, double budget,
                                       std::optional<double> observed_max_beta) {
  if (!(in.min_external_liability > 0.0))
    throw InvalidInput("approximation_bound: delta_b must be positive");
  if (in.liability_mass < in.min_external_liability)
    throw InvalidInput("approximation_bound: Delta must be at least delta_b");
  if (in.horizon_len < 1) throw InvalidInput("approximation_bound: horizon must be >= 1");
  ApproximationBound out;
  const double ratio = in.min_external_liability / in.liability_mass;
  out.lower_bound = budget > in.liability_mass ? ratio : ratio / in.horizon_len;
  if (observed_max_beta) out.gamma_form = 1.0 - *observed_max_beta;
  return out;
}

std::vector<std::vector<std::int64_t>> enumerate_actions(std::span<const std::int64_t> caps,
                                                         std::int64_t budget) {
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> z(caps.size(), 0);
  auto rec = [&](auto& self, std::size_t i, std::int64_t left) -> void {
    if (i == caps.size()) {
      out.push_back(z);
      return;
    }
    for (std::int64_t v = 0; v <= std::min(caps[i], left); ++v) {
      z[i] = v;
      self(self, i + 1, left - v);
    }
    z[i] = 0;
  };
  if (budget >= 0) rec(rec, 0, budget);
  return out;
}

BruteForceResult brute_force_discrete(const InitialCondition& start, const SamplePath& path,
                                      double budget, std::span<const double> caps,
                                      std::size_t limit) {
  const std::size_t n = start.state.size();
  if (path.nodes() != n || caps.size() != n)
    throw InvalidInput("brute_force_discrete: dimension mismatch");
  if (!(budget >= 0.0)) throw InvalidInput("brute_force_discrete: budget must be >= 0");
  const std::vector<std::int64_t> icaps = integral_caps(caps);
  const auto ibudget = static_cast<std::int64_t>(std::floor(budget + kIntegralTol));
  const auto actions = enumerate_actions(icaps, ibudget);

  double count = 1.0;
  for (std::size_t k = 0; k < path.size(); ++k) count *= static_cast<double>(actions.size());
  if (count > static_cast<double>(limit))
    throw InvalidInput("brute_force_discrete: " + std::to_string(actions.size()) + "^" +
                       std::to_string(path.size()) + " action sequences exceed the limit of " +
                       std::to_string(limit));

  BruteForceResult best;
  best.value = -1.0;
  std::vector<std::size_t> choice(path.size());
  auto rec = [&](auto& self, std::size_t k, const SystemState& prev, const Vector& prev_clearing,
                 double acc) -> void {
    if (k == path.size()) {
      ++best.sequences;
      if (acc > best.value + 1e-12) {
        best.value = acc;
        best.actions.clear();
        for (std::size_t c : choice) best.actions.push_back(actions[c]);
      }
      return;
    }
    const ShockRealization& shock = path[k];
    const SystemState state = advance_state(prev, prev_clearing, shock);
    const RelativeLiabilityMatrix a = relative_matrix(state);
    for (std::size_t c = 0; c < actions.size(); ++c) {
      choice[k] = c;
      const Vector z(actions[c].begin(), actions[c].end());
      const Vector clearing = clear_fixed_point(a, state.totals(), shock.external_assets(), z);
      self(self, k + 1, state, clearing, acc + sum(clearing));
    }
  };
  rec(rec, 0, start.state, start.clearing, 0.0);
  return best;
}

std::vector<std::vector<std::int64_t>> discretize_payments(std::span<const double> clearing,
                                                           const RelativeLiabilityMatrix& a) {
  const std::size_t n = a.size();
  if (clearing.size() != n) throw InvalidInput("discretize_payments: dimension mismatch");
  std::vector<std::vector<std::int64_t>> out(n, std::vector<std::int64_t>(n + 1, 0));
  std::vector<std::size_t> order(n + 1);
  Vector share(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(clearing[i] >= 0.0)) throw InvalidInput("discretize_payments: negative payment");
    for (std::size_t j = 0; j < n; ++j) share[j] = a.entries(i, j);
    share[n] = std::max(0.0, 1.0 - a.row_sums[i]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return share[x] > share[y]; });
    const double total = clearing[i];
    double running = 0.0;
    for (std::size_t j : order) {
      const double amount = std::floor(share[j] * total + kIntegralTol);
      if (running + amount > total + kIntegralTol) continue;
      out[i][j] = static_cast<std::int64_t>(amount);
      running += amount;
    }
  }
  return out;
}

} // namespace netclear
