#include "netclear/fairness.hpp"

#include <cmath>

#include "netclear/error.hpp"

namespace netclear {

std::string to_string(GiniKind k) {
  switch (k) {
  case GiniKind::standard:
    return "standard";
  case GiniKind::spatial:
    return "spatial";
  case GiniKind::property:
    return "property";
  }
  return "unknown";
}

GiniKind parse_gini_kind(const std::string& s) {
  if (s == "standard" || s == "gc") return GiniKind::standard;
  if (s == "spatial" || s == "sgc") return GiniKind::spatial;
  if (s == "property" || s == "pgc") return GiniKind::property;
  throw InvalidInput("unknown fairness kind '" + s + "'");
}

Vector FairnessWeights::degree() const {
  const std::size_t n = size();
  Vector d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += weights(i, j) + weights(j, i);
  return d;
}

FairnessWeights make_weights(GiniKind kind, Matrix weights) {
  if (weights.rows() != weights.cols()) throw InvalidInput("fairness weights must be square");
  FairnessWeights w;
  w.kind = kind;
  const std::size_t n = weights.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = weights(i, j);
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput("fairness weights must be >= 0");
      if (i == j && v != 0.0) throw InvalidInput("fairness weights need a zero diagonal");
      if (v > 0.0) w.edges.emplace_back(i, j);
    }
  w.weights = std::move(weights);
  return w;
}

FairnessWeights standard_weights(std::size_t n) {
  Matrix m = Matrix::square(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.0;
  return make_weights(GiniKind::standard, std::move(m));
}

FairnessWeights spatial_weights(const RelativeLiabilityMatrix& a) {
  Matrix m = a.entries;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) = 0.0;
  return make_weights(GiniKind::spatial, std::move(m));
}

FairnessWeights property_weights(std::span<const double> q, const RelativeLiabilityMatrix& a,
                                 bool masked) {
  const std::size_t n = a.size();
  if (q.size() != n) throw InvalidInput("property weights: q has the wrong length");
  Matrix m = Matrix::square(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (masked && !(a.entries(i, j) > 0.0)) continue;
      m(i, j) = std::abs(q[i] - q[j]);
    }
  return make_weights(GiniKind::property, std::move(m));
}

namespace {

double weighted_spread(std::span<const double> z, const FairnessWeights& w) {
  double s = 0.0;
  for (auto [i, j] : w.edges) s += w.weights(i, j) * std::abs(z[i] - z[j]);
  return s;
}

double weighted_mass(std::span<const double> z, const FairnessWeights& w) {
  const Vector d = w.degree();
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * z[i];
  return s;
}

void check_allocation(std::span<const double> z, const FairnessWeights& w) {
  if (z.size() != w.size()) throw InvalidInput("gini: allocation size does not match weights");
  for (double v : z)
    if (!(v >= 0.0)) throw InvalidInput("gini: allocations must be nonnegative");
}

} // namespace

double gini_coefficient(std::span<const double> z, const FairnessWeights& w) {
  check_allocation(z, w);
  const double den = weighted_mass(z, w);
  if (den <= 0.0) return 0.0;
  return weighted_spread(z, w) / den;
}

double fairness_violation(std::span<const double> z, const FairnessWeights& w, double g) {
  check_allocation(z, w);
  return weighted_spread(z, w) - g * weighted_mass(z, w);
}

std::size_t unordered_pair_count(const FairnessWeights& w) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j)
      if (w.weights(i, j) + w.weights(j, i) > 0.0) ++count;
  return count;
}

FairnessConstraintBlock fairness_constraint_block(const FairnessWeights& w, double g) {
  if (!(g >= 0.0 && g <= 1.0)) throw InvalidInput("fairness cap g must lie in [0, 1]");
  const std::size_t n = w.size();
  FairnessConstraintBlock block;
  block.nodes = n;

  // (i, j) and (j, i) share |Z_i - Z_j|, so one slack per unordered pair
  std::vector<LpTerm> aggregate;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double weight = w.weights(i, j) + w.weights(j, i);
      if (weight <= 0.0) continue;
      const std::size_t slack = n + block.slack_count++;
      // Z_i - Z_j <= varpi and Z_j - Z_i <= varpi
      block.rows.push_back({{{i, 1.0}, {j, -1.0}, {slack, -1.0}}, Relation::less_equal, 0.0});
      block.rows.push_back({{{i, -1.0}, {j, 1.0}, {slack, -1.0}}, Relation::less_equal, 0.0});
      aggregate.push_back({slack, weight});
    }
  const Vector d = w.degree();
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] != 0.0) aggregate.push_back({i, -g * d[i]});
  block.rows.push_back({std::move(aggregate), Relation::less_equal, 0.0});
  return block;
}

std::size_t attach_fairness_block(LinearProgram& lp, const FairnessConstraintBlock& block,
                                  std::size_t z_offset) {
  if (z_offset + block.nodes > lp.num_variables())
    throw InvalidInput("attach_fairness_block: Z range outside the program");
  const std::size_t first = lp.num_variables();
  for (std::size_t e = 0; e < block.slack_count; ++e) lp.add_variable(0.0, 0.0, kInfinity);
  for (const auto& row : block.rows) {
    std::vector<LpTerm> terms;
    terms.reserve(row.terms.size());
    for (const auto& t : row.terms) {
      const std::size_t var =
          t.var < block.nodes ? z_offset + t.var : first + (t.var - block.nodes);
      terms.push_back({var, t.coef});
    }
    lp.add_constraint(std::move(terms), row.relation, row.rhs);
  }
  return first;
}

LpConstraint fairness_cut(std::span<const double> z, const FairnessWeights& w, double g,
                          std::size_t z_offset) {
  const std::size_t n = w.size();
  if (z.size() != n) throw InvalidInput("fairness_cut: allocation size mismatch");
  Vector coef(n, 0.0);
  for (auto [i, j] : w.edges) {
    const double s = z[i] >= z[j] ? 1.0 : -1.0;
    coef[i] += s * w.weights(i, j);
    coef[j] -= s * w.weights(i, j);
  }
  const Vector d = w.degree();
  LpConstraint row;
  row.relation = Relation::less_equal;
  row.rhs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = coef[i] - g * d[i];
    if (c != 0.0) row.terms.push_back({z_offset + i, c});
  }
  return row;
}

double FairnessBudget::at(int round) const {
  if (per_round.empty()) return g;
  if (round < 1 || static_cast<std::size_t>(round) > per_round.size())
    throw InvalidInput("fairness budget has no entry for round " + std::to_string(round));
  return per_round[static_cast<std::size_t>(round) - 1];
}

void FairnessBudget::validate() const {
  auto check = [](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("fairness cap g must lie in [0, 1]");
  };
  check(g);
  for (double v : per_round) check(v);
}

RoundFairness FairnessSpec::for_round(int round, const RelativeLiabilityMatrix& a) const {
  RoundFairness rf;
  rf.g = budget.at(round);
  rf.method = method;
  switch (kind) {
  case GiniKind::standard:
    rf.weights = standard_weights(a.size());
    break;
  case GiniKind::spatial:
    rf.weights = spatial_weights(a);
    break;
  case GiniKind::property:
    rf.weights = property_weights(q, a, masked);
    break;
  }
  return rf;
}

double price_of_fairness(double v_unconstrained, double v_constrained) {
  if (v_constrained > 0.0) return v_unconstrained / v_constrained;
  if (v_unconstrained > 0.0) return kInfinity;
  return 1.0;
}

} // namespace netclear
