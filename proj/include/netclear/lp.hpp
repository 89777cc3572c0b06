#pragma once

// Generic linear program model and a dense bounded-variable two-phase primal
// simplex. Problems in this library are small (tens to a few hundred
// variables), so a dense tableau whose row updates run through the SIMD axpy
// kernel is enough.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netclear/linalg.hpp"

namespace netclear {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { less_equal, equal, greater_equal };

struct LpTerm {
  std::size_t var;
  double coef;
};

struct LpConstraint {
  std::vector<LpTerm> terms;
  Relation relation = Relation::less_equal;
  double rhs = 0.0;
};

struct VariableBounds {
  double lo = 0.0;
  double hi = kInfinity;
};

/// maximize objective^T x subject to the constraint rows and variable bounds.
class LinearProgram {
public:
  LinearProgram() = default;

  std::size_t add_variable(double objective, double lo = 0.0, double hi = kInfinity);
  std::size_t add_constraint(std::vector<LpTerm> terms, Relation rel, double rhs);

  std::size_t num_variables() const noexcept { return objective_.size(); }
  std::size_t num_constraints() const noexcept { return constraints_.size(); }

  const Vector& objective() const noexcept { return objective_; }
  Vector& objective() noexcept { return objective_; }
  const std::vector<VariableBounds>& bounds() const noexcept { return bounds_; }
  std::vector<VariableBounds>& bounds() noexcept { return bounds_; }
  const std::vector<LpConstraint>& constraints() const noexcept { return constraints_; }

  /// Throws InvalidInput on out-of-range indices, NaNs or inverted bounds.
  void validate() const;

  /// a_r^T x for row r.
  double row_activity(std::size_t r, std::span<const double> x) const;

private:
  Vector objective_;
  std::vector<VariableBounds> bounds_;
  std::vector<LpConstraint> constraints_;
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_failure };

std::string to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::numerical_failure;
  Vector primal;
  /// One multiplier per constraint row (>= 0 on <= rows, <= 0 on >= rows).
  Vector dual;
  /// c_j - a_j^T y: multipliers of the active variable bounds.
  Vector reduced_costs;
  double objective_value = 0.0;
  std::size_t iterations = 0;

  bool optimal() const noexcept { return status == LpStatus::optimal; }
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degenerate_switch = 50;
  /// 0 means 50 * (rows + columns).
  std::size_t max_iterations = 0;
};

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});

/// Returns a violated inequality row at the given optimum, or nothing.
using RowSeparator = std::function<std::optional<LpConstraint>(const LpSolution&)>;

/// Row generation: solves lp, then appends each row the separator returns
/// and reoptimizes from the previous basis with the dual simplex. The added
/// rows stay in lp. Stops at the first optimum the separator accepts or at
/// the first non-optimal status.
LpSolution solve_lp_with_rows(LinearProgram& lp, const RowSeparator& separate,
                              const SimplexOptions& opts = {});

/// b^T y plus the bound terms of the reduced costs: the Lagrangian dual
/// objective at the reported multipliers. Equals objective_value at an
/// optimum; +inf when the multipliers are dual infeasible.
double dual_objective(const LinearProgram& lp, const LpSolution& sol);

/// Largest violation of rows and bounds at x.
double primal_infeasibility(const LinearProgram& lp, std::span<const double> x);

/// Largest |y_r * (b_r - a_r^T x)| over the rows.
double complementary_slackness_gap(const LinearProgram& lp, const LpSolution& sol);

} // namespace netclear
