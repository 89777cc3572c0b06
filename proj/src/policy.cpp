#include "netclear/policy.hpp"

#include <cmath>
#include <string>

#include "netclear/clearing.hpp"
#include "netclear/error.hpp"
#include "netclear/lp.hpp"
#include "netclear/parallel.hpp"
#include "netclear/rng.hpp"

namespace netclear {
namespace {

constexpr std::size_t kMaxCutRounds = 10000;

LinearProgram round_program(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                            std::span<const double> assets, double budget,
                            std::span<const double> caps, std::span<const double> weights) {
  const std::size_t n = a.size();
  LinearProgram lp;
  for (std::size_t i = 0; i < n; ++i)
    lp.add_variable(weights.empty() ? 1.0 : weights[i], 0.0, totals[i]);
  for (std::size_t i = 0; i < n; ++i) lp.add_variable(0.0, 0.0, caps[i]);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<LpTerm> row{{i, 1.0}};
    for (std::size_t j = 0; j < n; ++j) {
      const double aji = a.entries(j, i);
      if (j != i && aji != 0.0) row.push_back({j, -aji});
    }
    row.push_back({n + i, -1.0});
    lp.add_constraint(std::move(row), Relation::less_equal, assets[i]);
  }
  std::vector<LpTerm> budget_row;
  for (std::size_t i = 0; i < n; ++i) budget_row.push_back({n + i, 1.0});
  lp.add_constraint(std::move(budget_row), Relation::less_equal, budget);
  return lp;
}

LpSolution solve_or_throw(const LinearProgram& lp) {
  LpSolution sol = solve_lp(lp);
  if (!sol.optimal()) throw NumericalError("per_round_lp: solver returned " + to_string(sol.status));
  return sol;
}

Vector extract_z(const LpSolution& sol, std::size_t n, std::span<const double> caps) {
  Vector z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::clamp(sol.primal[n + i], 0.0, caps[i]);
    if (v < 1e-12) v = 0.0;
    z[i] = v;
  }
  return z;
}

} // namespace

PolicyStepResult per_round_lp(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                              std::span<const double> assets, double budget,
                              std::span<const double> caps, const RoundFairness* fairness,
                              std::span<const double> objective_weights) {
  const std::size_t n = a.size();
  if (totals.size() != n || assets.size() != n || caps.size() != n)
    throw InvalidInput("per_round_lp: dimension mismatch");
  if (!objective_weights.empty()) {
    if (objective_weights.size() != n) throw InvalidInput("per_round_lp: weight size mismatch");
    for (double w : objective_weights)
      if (!(w > 0.0)) throw InvalidInput("per_round_lp: objective weights must be positive");
  }
  if (!(budget >= 0.0)) throw InvalidInput("per_round_lp: budget must be >= 0");
  for (std::size_t i = 0; i < n; ++i)
    if (!(caps[i] >= 0.0) || !(totals[i] >= 0.0) || !(assets[i] >= 0.0))
      throw InvalidInput("per_round_lp: P, c and L must be nonnegative");
  if (!check_nonvanishing(a))
    throw NumericalError("per_round_lp: max row sum of A is not below 1");
  if (fairness && fairness->weights.size() != n)
    throw InvalidInput("per_round_lp: fairness weights have the wrong size");

  LinearProgram lp = round_program(a, totals, assets, budget, caps, objective_weights);
  LpSolution sol;
  if (!fairness) {
    sol = solve_or_throw(lp);
  } else {
    const bool explicit_slacks =
        fairness->method == FairnessMethod::explicit_slacks ||
        (fairness->method == FairnessMethod::automatic &&
         unordered_pair_count(fairness->weights) <= kExplicitSlackPairLimit);
    if (explicit_slacks) {
      attach_fairness_block(lp, fairness_constraint_block(fairness->weights, fairness->g), n);
      sol = solve_or_throw(lp);
    } else {
      // Row generation on the projection of the slack block onto Z: each cut
      // is the aggregate row for the sign pattern of the current allocation.
      const Vector degree = fairness->weights.degree();
      std::size_t round = 0;
      sol = solve_lp_with_rows(lp, [&](const LpSolution& cur) -> std::optional<LpConstraint> {
        const Vector z = extract_z(cur, n, caps);
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += degree[i] * z[i];
        const double violation = fairness_violation(z, fairness->weights, fairness->g);
        if (violation <= 1e-10 * mass + 1e-13) return std::nullopt;
        if (++round > kMaxCutRounds)
          throw NumericalError("per_round_lp: fairness cut generation did not converge");
        return fairness_cut(z, fairness->weights, fairness->g, n);
      });
      if (!sol.optimal())
        throw NumericalError("per_round_lp: solver returned " + to_string(sol.status));
    }
  }

  PolicyStepResult out;
  out.totals.assign(totals.begin(), totals.end());
  out.clearing.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.clearing[i] = std::clamp(sol.primal[i], 0.0, totals[i]);
  out.intervention = extract_z(sol, n, caps);
  out.reward = sum(out.clearing);
  out.max_beta = a.max_row_sum();
  out.connectivity = a.row_sums;
  out.gini = gini_coefficient(out.intervention,
                              fairness ? fairness->weights : standard_weights(n));
  return out;
}

InitialCondition InitialCondition::empty(std::size_t n) {
  return {SystemState::empty(n), Vector(n, 0.0)};
}

void InterventionPolicy::validate(std::size_t n) const {
  if (!(budget >= 0.0) || !std::isfinite(budget)) throw InvalidInput("budget must be finite, >= 0");
  if (caps.size() != n)
    throw InvalidInput("caps vector has " + std::to_string(caps.size()) + " entries for " +
                       std::to_string(n) + " nodes");
  for (double c : caps)
    if (!(c >= 0.0)) throw InvalidInput("caps must be >= 0");
  if (fairness) {
    fairness->budget.validate();
    if (fairness->kind == GiniKind::property && fairness->q.size() != n)
      throw InvalidInput("property fairness needs one q value per node");
  }
}

PathValue value_given_sample_path(const InitialCondition& start, const SamplePath& path,
                                  const InterventionPolicy& policy) {
  const std::size_t n = start.state.size();
  if (path.nodes() != n) throw InvalidInput("sample path node count does not match the state");
  policy.validate(n);

  PathValue out;
  SystemState state = start.state;
  Vector clearing = start.clearing;
  for (const auto& shock : path) {
    state = advance_state(state, clearing, shock);
    const RelativeLiabilityMatrix a = relative_matrix(state);
    std::optional<RoundFairness> rf;
    if (policy.fairness) rf = policy.fairness->for_round(shock.round(), a);
    PolicyStepResult step = per_round_lp(a, state.totals(), shock.external_assets(),
                                         policy.budget, policy.caps, rf ? &*rf : nullptr);
    step.round = shock.round();
    clearing = step.clearing;
    out.value += step.reward;
    out.steps.push_back(std::move(step));
  }
  return out;
}

PathValue simulate_interventions(const InitialCondition& start, const SamplePath& path,
                                 const std::vector<Vector>& interventions,
                                 const FairnessSpec* gini_weights) {
  const std::size_t n = start.state.size();
  if (path.nodes() != n) throw InvalidInput("sample path node count does not match the state");
  if (interventions.size() != path.size())
    throw InvalidInput("need one intervention vector per round");
  PathValue out;
  SystemState state = start.state;
  Vector clearing = start.clearing;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const ShockRealization& shock = path[k];
    if (interventions[k].size() != n) throw InvalidInput("intervention vector has the wrong size");
    state = advance_state(state, clearing, shock);
    const RelativeLiabilityMatrix a = relative_matrix(state);
    PolicyStepResult step;
    step.round = shock.round();
    step.totals = state.totals();
    step.clearing = clear_fixed_point(a, state.totals(), shock.external_assets(), interventions[k]);
    step.intervention = interventions[k];
    step.reward = sum(step.clearing);
    step.max_beta = a.max_row_sum();
    step.connectivity = a.row_sums;
    step.gini = gini_coefficient(step.intervention, gini_weights
                                                        ? gini_weights->for_round(step.round, a).weights
                                                        : standard_weights(n));
    clearing = step.clearing;
    out.value += step.reward;
    out.steps.push_back(std::move(step));
  }
  return out;
}

std::pair<double, double> mean_and_stderr(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double s = 0.0;
  for (double v : values) s += v;
  const double mean = s / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

ValueEstimate aggregate_value(const EnvironmentModel& env, const InitialCondition& start,
                              const InterventionPolicy& policy, const AggregateOptions& opts) {
  if (opts.samples < 1) throw InvalidInput("aggregate_value: need at least one sample");
  if (env.nodes() != start.state.size())
    throw InvalidInput("aggregate_value: environment and start state disagree on n");
  policy.validate(env.nodes());

  ValueEstimate est;
  est.count = opts.samples;
  est.horizon_span = env.horizon() - opts.first_round + 1;
  est.samples.assign(opts.samples, 0.0);
  if (opts.keep_paths) est.paths.resize(opts.samples);

  parallel_for(opts.samples, opts.threads, [&](std::size_t i) {
    Rng rng = substream(opts.seed, i, Stream::environment);
    const SamplePath path = sample_path(env, opts.first_round, env.horizon(), rng);
    PathValue pv = value_given_sample_path(start, path, policy);
    est.samples[i] = pv.value;
    if (opts.keep_paths) est.paths[i] = std::move(pv);
  });

  std::tie(est.mean, est.standard_error) = mean_and_stderr(est.samples);
  return est;
}

std::size_t required_samples(double delta, double epsilon, int horizon_len, double liability_mass) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("required_samples: delta must be in (0,1)");
  if (!(epsilon > 0.0)) throw InvalidInput("required_samples: epsilon must be positive");
  if (horizon_len < 1) throw InvalidInput("required_samples: horizon must be >= 1");
  if (!(liability_mass > 0.0)) throw InvalidInput("required_samples: Delta must be positive");
  if (std::isinf(epsilon)) return 1;
  const double h = static_cast<double>(horizon_len);
  const double raw = std::log(2.0 / delta) * h * h * liability_mass * liability_mass /
                     (2.0 * epsilon * epsilon);
  // shave representation noise so exact integers are not bumped up by one
  const double n = std::ceil(raw * (1.0 - 1e-12));
  return static_cast<std::size_t>(std::max(1.0, n));
}

} // namespace netclear
