#pragma once

// Exogenous shock generators. Every model exposes the same sampling contract:
// draw the shocks of rounds [from, to] given a generator handle.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "netclear/network.hpp"
#include "netclear/rng.hpp"

namespace netclear {

enum class EnvironmentKind { sbm_core_periphery, gamma_transactions, replay, mixture };

std::string to_string(EnvironmentKind k);

/// Two-block stochastic blockmodel; nodes [0, n_core) form the core.
struct SbmParams {
  std::size_t n_core = 0;
  std::size_t n_periphery = 0;
  double p_cc = 0.0;
  double p_cp = 0.0;
  double p_pc = 0.0;
  double p_pp = 0.0;
  double liability_rate = 1.0;
  double asset_level = 0.0;
  double b_floor = kDefaultExternalFloor;

  std::size_t nodes() const noexcept { return n_core + n_periphery; }
  double edge_probability(std::size_t i, std::size_t j) const noexcept;
  void validate() const;
};

/// Transaction counts of one round: internal i -> j counts plus the counts
/// of transactions leaving to and arriving from outside the network.
struct TransactionCounts {
  std::size_t n = 0;
  std::vector<std::uint64_t> internal; // row-major n x n
  std::vector<std::uint64_t> external_out;
  std::vector<std::uint64_t> external_in;

  std::uint64_t at(std::size_t i, std::size_t j) const { return internal[i * n + j]; }
  void validate() const;
};

/// One count table per round; a single table is reused for every round.
struct GammaParams {
  std::vector<TransactionCounts> rounds;

  std::size_t nodes() const { return rounds.empty() ? 0 : rounds.front().n; }
  const TransactionCounts& for_round(int round) const;
  void validate() const;
};

/// Finite mixture of fixed paths, each covering rounds 1..T.
struct MixtureComponent {
  double weight = 0.0;
  SamplePath path;
};

class EnvironmentModel {
public:
  static EnvironmentModel sbm(SbmParams params, int horizon);
  static EnvironmentModel gamma(GammaParams params, int horizon);
  static EnvironmentModel replay(SamplePath path);
  static EnvironmentModel mixture(std::vector<MixtureComponent> components);

  EnvironmentKind kind() const noexcept { return kind_; }
  std::size_t nodes() const noexcept { return nodes_; }
  int horizon() const noexcept { return horizon_; }
  bool deterministic() const noexcept { return kind_ == EnvironmentKind::replay; }

  const SbmParams& sbm_params() const { return std::get<SbmParams>(params_); }
  const GammaParams& gamma_params() const { return std::get<GammaParams>(params_); }
  const SamplePath& replay_path() const { return std::get<SamplePath>(params_); }
  const std::vector<MixtureComponent>& components() const {
    return std::get<std::vector<MixtureComponent>>(params_);
  }

  /// sup over the environment of ||b||_1 + ||l||_1 when it is finite and
  /// known in closed form (replay and mixture); nullopt for the random models.
  std::optional<double> liability_mass_bound() const;
  /// min b_i(t) over the environment when known (replay and mixture).
  std::optional<double> min_external_liability() const;

private:
  EnvironmentKind kind_ = EnvironmentKind::replay;
  std::size_t nodes_ = 0;
  int horizon_ = 0;
  std::variant<SbmParams, GammaParams, SamplePath, std::vector<MixtureComponent>> params_;
};

/// Shocks for rounds [from_round, to_round]. The synthetic kinds draw rounds
/// i.i.d.; replay returns the stored rounds verbatim.
SamplePath sample_path(const EnvironmentModel& model, int from_round, int to_round, Rng& rng);

ShockRealization sample_sbm_round(const SbmParams& params, int round, Rng& rng);
ShockRealization sample_gamma_round(const TransactionCounts& counts, int round, Rng& rng);

/// Reads `t,i,j,amount` internal rows and `t,i,b,c` external rows.
EnvironmentModel load_replay(const std::filesystem::path& internal_csv,
                             const std::filesystem::path& external_csv);
SamplePath read_replay_path(const std::filesystem::path& internal_csv,
                            const std::filesystem::path& external_csv);
void write_replay(const SamplePath& path, const std::filesystem::path& internal_csv,
                  const std::filesystem::path& external_csv);

} // namespace netclear
