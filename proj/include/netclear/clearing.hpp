#pragma once

// Round clearing for a fixed intervention: the greatest fixed point of
//   P~ = P ^ (A^T P~ + c + Z)
// computed two independent ways, by Picard iteration and as a linear program.

#include <cstddef>
#include <span>
#include <vector>

#include "netclear/linalg.hpp"
#include "netclear/lp.hpp"
#include "netclear/network.hpp"

namespace netclear {

struct PicardOptions {
  /// Stop once the sup-norm step is below rel_tol * max(1, ||P||_inf).
  double rel_tol = 1e-13;
  /// Accepted residual when the iteration cap is reached.
  double accept_tol = 1e-9;
  /// Record the l1 step length of every iteration.
  bool record_residuals = false;
};

struct PicardResult {
  Vector clearing;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::vector<double> l1_residuals;
};

/// Iteration cap ceil(log(1e-12 / ||P||_inf) / log(max beta)) + 64.
std::size_t picard_iteration_cap(double max_beta, double total_norm_inf);

/// Picard iteration from P~0 = P. Throws NumericalError when max beta >= 1
/// or the cap is hit with a residual above accept_tol.
PicardResult clear_fixed_point_detailed(const RelativeLiabilityMatrix& a,
                                        std::span<const double> totals,
                                        std::span<const double> assets,
                                        std::span<const double> intervention,
                                        const PicardOptions& opts = {});

Vector clear_fixed_point(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                         std::span<const double> assets, std::span<const double> intervention);

/// max 1^T P~ s.t. 0 <= P~ <= P, (I - A^T) P~ <= c + Z.
LinearProgram clearing_program(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                               std::span<const double> assets,
                               std::span<const double> intervention);

struct LpClearing {
  Vector clearing;
  LpSolution solution;
};

LpClearing clear_lp_detailed(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                             std::span<const double> assets,
                             std::span<const double> intervention);

Vector clear_lp(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                std::span<const double> assets, std::span<const double> intervention);

} // namespace netclear
