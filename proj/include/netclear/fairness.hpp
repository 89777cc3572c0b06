#pragma once

// Generalized Gini coefficients over a weighted graph of node pairs and the
// linear constraints that cap them inside the per-round intervention LP.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netclear/linalg.hpp"
#include "netclear/lp.hpp"
#include "netclear/network.hpp"

namespace netclear {

enum class GiniKind { standard, spatial, property };

std::string to_string(GiniKind k);
GiniKind parse_gini_kind(const std::string& s);

/// Pair weights w_ij >= 0 with zero diagonal. Edges are the ordered pairs
/// with w_ij > 0, so (i, j) and (j, i) are separate terms.
struct FairnessWeights {
  GiniKind kind = GiniKind::standard;
  Matrix weights;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t size() const noexcept { return weights.rows(); }
  /// sum_j (w_ij + w_ji) for node i: the coefficient of Z_i in the denominator.
  Vector degree() const;
};

/// Builds the edge list from an arbitrary weight matrix. Throws on negative
/// or non-finite weights and on a nonzero diagonal.
FairnessWeights make_weights(GiniKind kind, Matrix weights);

FairnessWeights standard_weights(std::size_t n);
FairnessWeights spatial_weights(const RelativeLiabilityMatrix& a);
/// |q_i - q_j|, restricted to pairs with a_ij > 0 unless masked is false.
FairnessWeights property_weights(std::span<const double> q, const RelativeLiabilityMatrix& a,
                                 bool masked = true);

/// sum_E w_ij |Z_i - Z_j| / sum_i Z_i sum_j (w_ij + w_ji); 0 when the
/// denominator vanishes.
double gini_coefficient(std::span<const double> z, const FairnessWeights& w);

/// sum_E w_ij |Z_i - Z_j| - g sum_i D_i Z_i. Nonpositive iff Z is g-fair.
double fairness_violation(std::span<const double> z, const FairnessWeights& w, double g);

/// The absolute-value linearization in local variable numbering: Z occupies
/// 0..n-1 and the slacks occupy n..n+slack_count-1, one per unordered pair
/// {i, j} with w_ij + w_ji > 0.
struct FairnessConstraintBlock {
  std::size_t nodes = 0;
  std::size_t slack_count = 0;
  std::vector<LpConstraint> rows;
};

FairnessConstraintBlock fairness_constraint_block(const FairnessWeights& w, double g);

/// Adds the slack variables (objective 0, bounds [0, inf)) and the rows of
/// block to lp, mapping local Z_i to z_offset + i. Returns the index of the
/// first slack variable.
std::size_t attach_fairness_block(LinearProgram& lp, const FairnessConstraintBlock& block,
                                  std::size_t z_offset);

/// The single aggregated row that the slack block implies for the sign
/// pattern of z (the supporting cut of the convex fairness constraint at z).
LpConstraint fairness_cut(std::span<const double> z, const FairnessWeights& w, double g,
                          std::size_t z_offset);

/// g(t) schedule; constant unless per_round is given.
struct FairnessBudget {
  double g = 1.0;
  std::vector<double> per_round;

  double at(int round) const;
  void validate() const;
};

enum class FairnessMethod {
  /// explicit slacks for small edge sets, cuts otherwise
  automatic,
  explicit_slacks,
  cutting_planes,
};

/// What the per-round LP needs to impose a fairness cap.
struct RoundFairness {
  FairnessWeights weights;
  double g = 1.0;
  FairnessMethod method = FairnessMethod::automatic;
};

/// Fairness configuration for a whole run; weights are rebuilt every round
/// because the spatial and property kinds depend on A(t).
struct FairnessSpec {
  GiniKind kind = GiniKind::standard;
  FairnessBudget budget;
  Vector q;
  bool masked = true;
  FairnessMethod method = FairnessMethod::automatic;

  RoundFairness for_round(int round, const RelativeLiabilityMatrix& a) const;
};

/// Unordered pairs up to which the automatic method uses explicit slacks.
inline constexpr std::size_t kExplicitSlackPairLimit = 600;

/// Number of unordered pairs {i, j} with w_ij + w_ji > 0.
std::size_t unordered_pair_count(const FairnessWeights& w);

/// E[OPT sans fairness] / E[OPT with fairness]; +inf when only the
/// constrained value is zero, 1 when both are.
double price_of_fairness(double v_unconstrained, double v_constrained);

} // namespace netclear
