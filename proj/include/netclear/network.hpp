#pragma once

// Domain types for the dynamic clearing network and the state transition that
// carries unpaid liabilities from one round to the next.

#include <cstddef>
#include <span>
#include <vector>

#include "netclear/linalg.hpp"

namespace netclear {

inline constexpr double kDefaultExternalFloor = 1e-6;
inline constexpr double kStateTolerance = 1e-9;

/// Exogenous environment of one round: external liabilities b(t), external
/// assets c(t) and the newly generated internal liabilities l_ij(t).
class ShockRealization {
public:
  ShockRealization() = default;

  /// Validates b >= floor > 0, c >= 0, l >= 0 with zero diagonal and matching sizes.
  ShockRealization(int round, Vector external_liabilities, Vector external_assets,
                   Matrix internal_liabilities, double external_floor = kDefaultExternalFloor);

  int round() const noexcept { return round_; }
  std::size_t size() const noexcept { return external_liabilities_.size(); }
  const Vector& external_liabilities() const noexcept { return external_liabilities_; }
  const Vector& external_assets() const noexcept { return external_assets_; }
  const Matrix& internal_liabilities() const noexcept { return internal_liabilities_; }

  /// ||b||_1 + ||l||_1, the per-round liability mass.
  double liability_mass() const;

  ShockRealization with_round(int round) const;

private:
  int round_ = 1;
  Vector external_liabilities_;
  Vector external_assets_;
  Matrix internal_liabilities_;
};

/// Contiguous run of shocks for rounds t..T.
class SamplePath {
public:
  SamplePath() = default;
  explicit SamplePath(std::vector<ShockRealization> shocks);

  std::size_t size() const noexcept { return shocks_.size(); }
  bool empty() const noexcept { return shocks_.empty(); }
  std::size_t nodes() const noexcept { return shocks_.empty() ? 0 : shocks_.front().size(); }
  int first_round() const noexcept { return shocks_.empty() ? 0 : shocks_.front().round(); }
  int last_round() const noexcept { return shocks_.empty() ? 0 : shocks_.back().round(); }

  const ShockRealization& operator[](std::size_t k) const { return shocks_.at(k); }
  auto begin() const noexcept { return shocks_.begin(); }
  auto end() const noexcept { return shocks_.end(); }
  const std::vector<ShockRealization>& shocks() const noexcept { return shocks_; }

  /// sup over rounds of ||b||_1 + ||l||_1.
  double max_liability_mass() const;
  /// min over rounds and nodes of b_i(t).
  double min_external_liability() const;

private:
  std::vector<ShockRealization> shocks_;
};

/// Outstanding liabilities at the start of a round, before clearing.
class SystemState {
public:
  SystemState() = default;

  /// Debt-free state with n nodes (the state before round 1).
  static SystemState empty(std::size_t n);

  /// Builds a state from explicit values and checks the invariants.
  SystemState(Matrix pairwise, Vector totals, Vector last_clearing);

  std::size_t size() const noexcept { return totals_.size(); }
  const Matrix& pairwise() const noexcept { return pairwise_; }
  const Vector& totals() const noexcept { return totals_; }
  const Vector& last_clearing() const noexcept { return last_clearing_; }

  /// P_i(t) - sum_j p_ij(t): the externally owed part of node i's debt.
  double external_part(std::size_t i) const;

private:
  Matrix pairwise_;
  Vector totals_;
  Vector last_clearing_;
};

/// a_ij = p_ij / P_i with row sums beta_i.
struct RelativeLiabilityMatrix {
  Matrix entries;
  Vector row_sums;

  std::size_t size() const noexcept { return row_sums.size(); }
  double max_row_sum() const;
};

/// Action Z(t) with the per-round budget B and caps L it was chosen under.
struct InterventionVector {
  Vector amounts;
  double budget = 0.0;
  Vector caps;

  /// sum Z <= B + tol and 0 <= Z_i <= L_i + tol.
  bool feasible(double tol = kStateTolerance) const;
};

/// Carries the unpaid part of each liability forward and adds the new shock:
///   p_ij(t) = l_ij(t) + p_ij(t-1) (1 - P~_i(t-1) / P_i(t-1))
///   P_i(t)  = b_i(t) + l_i(t) + P_i(t-1) - P~_i(t-1)
/// The carry factor is 0 when P_i(t-1) = 0.
SystemState advance_state(const SystemState& state, std::span<const double> clearing,
                          const ShockRealization& shock);

RelativeLiabilityMatrix relative_matrix(const SystemState& state);

/// True iff max_i beta_i < 1 - margin.
bool check_nonvanishing(const RelativeLiabilityMatrix& a, double margin = 1e-12);

} // namespace netclear
