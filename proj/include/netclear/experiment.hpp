#pragma once

// Experiment runner: JSON configuration, orchestration of the policies over
// sampled paths, and the CSV/JSON result files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "netclear/discrete.hpp"
#include "netclear/environment.hpp"
#include "netclear/error.hpp"
#include "netclear/fairness.hpp"
#include "netclear/policy.hpp"

namespace netclear {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public InvalidInput {
public:
  using InvalidInput::InvalidInput;
};

enum class RunMode { zero_input, fractional, discrete, horizon_lp };

std::string to_string(RunMode m);
RunMode parse_run_mode(const std::string& s);

struct ReplayFiles {
  std::filesystem::path internal;
  std::filesystem::path external;
};

struct EnvironmentConfig {
  EnvironmentKind kind = EnvironmentKind::replay;
  SbmParams sbm;
  GammaParams gamma;
  ReplayFiles replay;
  std::vector<std::pair<double, ReplayFiles>> components; // mixture
};

struct FairnessConfig {
  FairnessSpec spec;
  /// Also run without the cap and report the price of fairness.
  bool paired = false;
};

/// Picks N from the concentration bound instead of a fixed sample count.
struct AccuracyConfig {
  double delta = 0.05;
  double epsilon = 0.1;
  std::optional<double> liability_mass; // Delta; taken from the environment when absent
};

struct ExperimentConfig {
  EnvironmentConfig environment;
  std::optional<int> horizon;
  double budget = 0.0;
  std::optional<double> caps_scalar;
  Vector caps_vector;
  RunMode mode = RunMode::fractional;
  std::size_t samples = 1;
  std::optional<AccuracyConfig> accuracy;
  std::optional<std::size_t> retries;
  bool recheck_ratio = false;
  std::optional<FairnessConfig> fairness;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::filesystem::path output_dir = "results";
  bool write_trace = true;

  /// L * 1 for a scalar cap, the vector otherwise.
  Vector caps(std::size_t n) const;
};

/// Parses and validates; relative file paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

EnvironmentModel build_environment(const ExperimentConfig& cfg);

/// Checks everything that needs the built environment (node counts, caps,
/// integrality for discrete mode, sample count). Throws ConfigError.
void validate_config(const ExperimentConfig& cfg, const EnvironmentModel& env);

/// Sample count: fixed, or required_samples() under the accuracy block.
std::size_t resolve_samples(const ExperimentConfig& cfg, const EnvironmentModel& env);

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool degenerate = false; // zero variance in x or y
  std::size_t points = 0;
};

OlsFit ordinary_least_squares(std::span<const double> x, std::span<const double> y);

struct NodeSummary {
  std::size_t node = 0;
  double total_payments = 0.0;      // mean over samples of sum_t P~_i(t)
  double total_interventions = 0.0; // mean over samples of sum_t Z_i(t)
  double mean_beta = 0.0;           // mean over samples and rounds of beta_i(t)
};

struct ScatterSummary {
  std::vector<NodeSummary> nodes;
  OlsFit interventions_on_payments;
  OlsFit interventions_on_beta;
};

ScatterSummary summarize_scatter(const std::vector<PathValue>& traces);

struct PofSummary {
  double value_unconstrained = 0.0;
  double value_constrained = 0.0;
  double pof = 1.0;
};

struct DiscreteSummary {
  double mean_relaxed = 0.0;
  double mean_ratio = 1.0;
  double min_ratio = 1.0;
  double max_beta = 0.0;
  std::size_t infeasible = 0;
  double mean_attempts = 0.0;
  ApproximationBound bound;
  double delta_b = 0.0;
  double liability_mass = 0.0;
};

struct HorizonSummary {
  bool certificate_valid = true;
  double max_violation = 0.0;
  double primal = 0.0;     // mean over samples
  double dual = 0.0;
  double sequential = 0.0;
  double max_abs_myopic_gap = 0.0;
  double max_abs_duality_gap = 0.0;
};

struct SummaryReport {
  RunMode mode = RunMode::fractional;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  int horizon = 0;
  std::size_t nodes = 0;
  double budget = 0.0;
  double value_mean = 0.0;
  double value_stderr = 0.0;
  Vector round_rewards;
  ScatterSummary scatter;
  std::string gini_kind = "standard";
  Vector round_g;
  Vector round_gini; // mean over samples
  double max_gini = 0.0; // over samples and rounds
  std::optional<PofSummary> pof;
  std::optional<DiscreteSummary> discrete;
  std::optional<HorizonSummary> horizon_lp;
  std::filesystem::path output_dir;
  std::vector<std::string> files;

  std::string to_json() const;
};

/// Runs the configured experiment and writes the result files into
/// cfg.output_dir; the outputs depend only on (config, seed), not on threads.
SummaryReport run_experiment(const ExperimentConfig& cfg);

} // namespace netclear
