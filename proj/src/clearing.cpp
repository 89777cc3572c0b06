#include "netclear/clearing.hpp"

#include <cmath>
#include <string>

#include "netclear/error.hpp"
#include "netclear/simd/kernels.hpp"

namespace netclear {
namespace {

void check_inputs(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                  std::span<const double> assets, std::span<const double> intervention) {
  const std::size_t n = a.size();
  if (a.entries.rows() != n || a.entries.cols() != n || totals.size() != n ||
      assets.size() != n || intervention.size() != n)
    throw InvalidInput("clearing: dimension mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (!(totals[i] >= 0.0) || !(assets[i] >= 0.0) || !(intervention[i] >= 0.0))
      throw InvalidInput("clearing: P, c and Z must be nonnegative");
}

} // namespace

std::size_t picard_iteration_cap(double max_beta, double total_norm_inf) {
  if (total_norm_inf <= 0.0 || max_beta <= 0.0) return 65;
  const double ratio = std::log(1e-12 / total_norm_inf) / std::log(max_beta);
  return static_cast<std::size_t>(std::ceil(std::max(ratio, 0.0))) + 64;
}

PicardResult clear_fixed_point_detailed(const RelativeLiabilityMatrix& a,
                                        std::span<const double> totals,
                                        std::span<const double> assets,
                                        std::span<const double> intervention,
                                        const PicardOptions& opts) {
  check_inputs(a, totals, assets, intervention);
  if (!check_nonvanishing(a))
    throw NumericalError("clear_fixed_point: max row sum of A is not below 1 (no contraction)");

  const std::size_t n = a.size();
  const double pnorm = norm_inf(totals);
  PicardResult res;
  res.clearing.assign(totals.begin(), totals.end());
  if (n == 0 || pnorm == 0.0) return res;

  Vector shift(n);
  for (std::size_t i = 0; i < n; ++i) shift[i] = assets[i] + intervention[i];

  const std::size_t cap = picard_iteration_cap(a.max_row_sum(), pnorm);
  const double stop = opts.rel_tol * std::max(1.0, pnorm);
  const auto& k = simd::active();

  Vector incoming(n);
  Vector next(n);
  for (std::size_t it = 0; it < cap; ++it) {
    // incoming = A^T x, accumulated row by row
    std::fill(incoming.begin(), incoming.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = res.clearing[i];
      if (xi != 0.0 && a.row_sums[i] > 0.0) k.axpy(xi, a.entries.row(i).data(), incoming.data(), n);
    }
    k.min_affine(totals.data(), incoming.data(), shift.data(), next.data(), n);
    res.residual = k.max_abs_diff(next.data(), res.clearing.data(), n);
    if (opts.record_residuals)
      res.l1_residuals.push_back(k.sum_abs_diff(next.data(), res.clearing.data(), n));
    res.clearing.swap(next);
    res.iterations = it + 1;
    if (res.residual <= stop) return res;
  }
  if (res.residual <= opts.accept_tol * std::max(1.0, pnorm)) return res;
  throw NumericalError("clear_fixed_point: iteration cap " + std::to_string(cap) +
                       " exceeded, residual " + std::to_string(res.residual));
}

Vector clear_fixed_point(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                         std::span<const double> assets, std::span<const double> intervention) {
  return clear_fixed_point_detailed(a, totals, assets, intervention).clearing;
}

LinearProgram clearing_program(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                               std::span<const double> assets,
                               std::span<const double> intervention) {
  check_inputs(a, totals, assets, intervention);
  const std::size_t n = a.size();
  LinearProgram lp;
  for (std::size_t i = 0; i < n; ++i) lp.add_variable(1.0, 0.0, totals[i]);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<LpTerm> row;
    row.push_back({i, 1.0});
    for (std::size_t j = 0; j < n; ++j) {
      const double aji = a.entries(j, i);
      if (j != i && aji != 0.0) row.push_back({j, -aji});
    }
    lp.add_constraint(std::move(row), Relation::less_equal, assets[i] + intervention[i]);
  }
  return lp;
}

LpClearing clear_lp_detailed(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                             std::span<const double> assets,
                             std::span<const double> intervention) {
  if (!check_nonvanishing(a))
    throw NumericalError("clear_lp: max row sum of A is not below 1 (no contraction)");
  LinearProgram lp = clearing_program(a, totals, assets, intervention);
  LpClearing out;
  out.solution = solve_lp(lp);
  if (!out.solution.optimal())
    throw NumericalError("clear_lp: solver returned " + to_string(out.solution.status));
  out.clearing = out.solution.primal;
  return out;
}

Vector clear_lp(const RelativeLiabilityMatrix& a, std::span<const double> totals,
                std::span<const double> assets, std::span<const double> intervention) {
  return clear_lp_detailed(a, totals, assets, intervention).clearing;
}

} // namespace netclear
