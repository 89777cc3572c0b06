#pragma once

// Integral interventions: binomial rounding of the fractional schedule, the
// approximation bound it carries, an exhaustive oracle for small instances
// and the integer payment heuristic.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "netclear/environment.hpp"
#include "netclear/policy.hpp"

namespace netclear {

inline constexpr std::size_t kDefaultRetries = 64;
inline constexpr std::size_t kBruteForceLimit = 1'000'000;

struct DiscreteAction {
  std::vector<std::int64_t> amounts;
  bool feasible = false;

  Vector as_vector() const;
};

/// One accepted (or last) rounding of a whole schedule.
struct RoundedSchedule {
  std::vector<DiscreteAction> actions;
  std::size_t attempts = 0;
  bool feasible = false;
};

/// Every caps entry must be a nonnegative integer. Throws InvalidInput otherwise.
std::vector<std::int64_t> integral_caps(std::span<const double> caps);

/// Draws z_i ~ Bin(L_i, z*_i / L_i) independently for every node and round
/// and redraws the whole schedule until each round fits the budget, at most
/// tau times.
RoundedSchedule sample_interventions(const std::vector<Vector>& fractional,
                                     std::span<const std::int64_t> caps, double budget,
                                     std::size_t tau, Rng& rng);

struct RoundingOptions {
  std::size_t tau = kDefaultRetries;
  /// Also redraw when the realized value falls below (1 - max beta) of the
  /// fractional value.
  bool recheck_ratio = false;
  /// Weights used to report the realized Gini of the rounded actions.
  const FairnessSpec* gini_weights = nullptr;
};

struct RoundingReport {
  std::size_t attempts = 0;
  bool feasible = false;
  std::vector<DiscreteAction> actions;
  PathValue realized;  // V^SOL trajectory
  double value_sol = 0.0;
  double value_rel = 0.0;
  /// Largest max_i beta_i seen on the fractional and the rounded trajectory.
  double max_beta = 0.0;
  double ratio = 1.0; // value_sol / value_rel, 1 when value_rel = 0
  double bound = 1.0; // 1 - max_beta
};

/// Rounds the fractional schedule of `relaxed` and replays it on `path`.
RoundingReport round_and_simulate(const InitialCondition& start, const SamplePath& path,
                                  const PathValue& relaxed, std::span<const std::int64_t> caps,
                                  double budget, const RoundingOptions& opts, Rng& rng);

struct DiscreteEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  double mean_relaxed = 0.0;
  std::vector<RoundingReport> reports;
  std::vector<PathValue> relaxed_paths; // filled when keep_paths
};

/// Path i is drawn from substream(seed, i, environment) and rounded with
/// substream(seed, i, rounding).
DiscreteEstimate aggregate_discrete(const EnvironmentModel& env, const InitialCondition& start,
                                    const InterventionPolicy& policy,
                                    const AggregateOptions& agg, const RoundingOptions& opts);

struct BoundInputs {
  double min_external_liability = 0.0; // delta_b
  double liability_mass = 0.0;         // Delta
  int horizon_len = 1;                 // T - t + 1
};

struct ApproximationBound {
  double lower_bound = 0.0;
  std::optional<double> gamma_form; // 1 - sup max beta, when observed
};

/// delta_b / Delta when B > Delta, else delta_b / ((T - t + 1) Delta).
ApproximationBound approximation_bound(const BoundInputs& in, double budget,
                                       std::optional<double> observed_max_beta = std::nullopt);

struct BruteForceResult {
  double value = 0.0;
  std::vector<std::vector<std::int64_t>> actions;
  std::size_t sequences = 0;
};

/// All integral vectors 0 <= z <= L with 1^T z <= B, in lexicographic order.
std::vector<std::vector<std::int64_t>> enumerate_actions(std::span<const std::int64_t> caps,
                                                         std::int64_t budget);

/// Exhaustive search over integral action sequences; the first optimum in
/// lexicographic order wins ties. Throws InvalidInput past `limit` sequences.
BruteForceResult brute_force_discrete(const InitialCondition& start, const SamplePath& path,
                                      double budget, std::span<const double> caps,
                                      std::size_t limit = kBruteForceLimit);

/// Per node, integer payments to recipients 0..n-1 and to the outside (slot n):
/// shares sorted decreasingly, each recipient given floor(share * P~_i).
std::vector<std::vector<std::int64_t>> discretize_payments(std::span<const double> clearing,
                                                           const RelativeLiabilityMatrix& a);

} // namespace netclear
