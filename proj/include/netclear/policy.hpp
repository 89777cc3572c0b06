#pragma once

// Fractional interventions: the joint clearing + intervention LP of one round,
// its sequential application along a sample path, and the Monte-Carlo
// estimate of the value function over sampled paths.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "netclear/environment.hpp"
#include "netclear/fairness.hpp"
#include "netclear/linalg.hpp"
#include "netclear/network.hpp"

namespace netclear {

struct PolicyStepResult {
  int round = 0;
  Vector totals;       // P(t)
  Vector clearing;     // P~*(t)
  Vector intervention; // Z*(t)
  double reward = 0.0; // 1^T P~*(t)
  double max_beta = 0.0;
  Vector connectivity; // beta_i(t)
  /// Gini of Z*(t) under the run's fairness weights (standard weights when
  /// the run has no fairness cap).
  double gini = 0.0;
};

/// max w^T P~ over (P~, Z) s.t. 0 <= P~ <= P, P~ <= A^T P~ + c + Z,
/// 0 <= Z <= L, 1^T Z <= B, plus the fairness rows when given. The weights w
/// default to all ones; the reported reward is always 1^T P~.
PolicyStepResult per_round_lp(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                              std::span<const double> assets, double budget,
                              std::span<const double> caps,
                              const RoundFairness* fairness = nullptr,
                              std::span<const double> objective_weights = {});

/// State at round t-1 together with the clearing chosen in that round.
struct InitialCondition {
  SystemState state;
  Vector clearing;

  static InitialCondition empty(std::size_t n);
};

struct InterventionPolicy {
  double budget = 0.0;
  Vector caps;
  std::optional<FairnessSpec> fairness;

  void validate(std::size_t n) const;
};

struct PathValue {
  double value = 0.0;
  std::vector<PolicyStepResult> steps;
};

/// Solves the rounds of `path` in order, feeding each optimal clearing into
/// the next round's state.
PathValue value_given_sample_path(const InitialCondition& start, const SamplePath& path,
                                  const InterventionPolicy& policy);

/// Plays a fixed intervention schedule along `path`, clearing each round at
/// the greatest fixed point. interventions[k] applies to path[k].
PathValue simulate_interventions(const InitialCondition& start, const SamplePath& path,
                                 const std::vector<Vector>& interventions,
                                 const FairnessSpec* gini_weights = nullptr);

struct ValueEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  Vector samples;
  std::size_t count = 0;
  int horizon_span = 0;
  std::vector<PathValue> paths; // filled when AggregateOptions::keep_paths
};

struct AggregateOptions {
  std::size_t samples = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  int first_round = 1;
  bool keep_paths = false;
};

/// Mean of value_given_sample_path over i.i.d. paths; path i is drawn from
/// substream(seed, i) so the result does not depend on the thread count.
ValueEstimate aggregate_value(const EnvironmentModel& env, const InitialCondition& start,
                              const InterventionPolicy& policy, const AggregateOptions& opts);

/// ceil(log(2/delta) (T-t+1)^2 Delta^2 / (2 eps^2)), at least 1.
std::size_t required_samples(double delta, double epsilon, int horizon_len, double liability_mass);

/// Sample mean and normal-approximation standard error, summed in index order.
std::pair<double, double> mean_and_stderr(std::span<const double> values);

} // namespace netclear
