#include "netclear/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netclear/error.hpp"
#include "netclear/simd/kernels.hpp"

namespace netclear {

std::size_t LinearProgram::add_variable(double objective, double lo, double hi) {
  objective_.push_back(objective);
  bounds_.push_back({lo, hi});
  return objective_.size() - 1;
}

std::size_t LinearProgram::add_constraint(std::vector<LpTerm> terms, Relation rel, double rhs) {
  constraints_.push_back({std::move(terms), rel, rhs});
  return constraints_.size() - 1;
}

void LinearProgram::validate() const {
  if (bounds_.size() != objective_.size()) throw InvalidInput("lp: bounds/objective size mismatch");
  for (std::size_t j = 0; j < objective_.size(); ++j) {
    if (!std::isfinite(objective_[j])) throw InvalidInput("lp: non-finite objective coefficient");
    const auto& b = bounds_[j];
    if (std::isnan(b.lo) || std::isnan(b.hi) || b.lo == kInfinity || b.hi == -kInfinity)
      throw InvalidInput("lp: malformed bounds on variable " + std::to_string(j));
  }
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    const auto& c = constraints_[r];
    if (!std::isfinite(c.rhs)) throw InvalidInput("lp: non-finite rhs in row " + std::to_string(r));
    for (const auto& t : c.terms) {
      if (t.var >= objective_.size())
        throw InvalidInput("lp: row " + std::to_string(r) + " references unknown variable");
      if (!std::isfinite(t.coef)) throw InvalidInput("lp: non-finite coefficient");
    }
  }
}

double LinearProgram::row_activity(std::size_t r, std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : constraints_[r].terms) s += t.coef * x[t.var];
  return s;
}

std::string to_string(LpStatus s) {
  switch (s) {
  case LpStatus::optimal:
    return "optimal";
  case LpStatus::infeasible:
    return "infeasible";
  case LpStatus::unbounded:
    return "unbounded";
  case LpStatus::numerical_failure:
    return "numerical_failure";
  }
  return "unknown";
}

namespace {

enum class VarMap { shift, flip, split };

struct ColumnMap {
  VarMap kind;
  std::size_t col;
  double offset; // lo for shift, hi for flip
};

enum class ColState : unsigned char { basic, at_lower, at_upper };

class Tableau {
public:
  Tableau(const LinearProgram& lp, const SimplexOptions& opts) : lp_(lp), opts_(opts) { build(); }

  LpSolution solve();
  /// Appends the last row of the program to the optimal tableau and
  /// reoptimizes from the current basis.
  LpSolution resolve_with_new_row();

private:
  enum class Outcome { optimal, unbounded, infeasible, iteration_limit };

  void build();
  std::size_t iteration_cap() const;
  Outcome iterate(std::size_t& iterations, std::size_t cap);
  Outcome dual_iterate(std::size_t& iterations, std::size_t cap);
  Vector column_values() const;
  LpSolution finish(Outcome o);
  void pivot(std::size_t r, std::size_t q);
  void reset_reduced_costs(const Vector& costs);

  const LinearProgram& lp_;
  SimplexOptions opts_;

  std::vector<ColumnMap> var_map_;
  std::size_t structural_cols_ = 0;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;

  Matrix tab_;
  Vector beta_;
  Vector reduced_;
  Vector upper_;
  std::vector<std::size_t> basis_;
  std::vector<ColState> state_;
  std::vector<bool> artificial_;
  std::vector<std::size_t> ident_col_;
  std::vector<double> row_sign_;
  std::vector<std::size_t> nonzero_;
  Vector cost_;
  std::size_t iterations_ = 0;
  bool phase_two_ = false;
};

void Tableau::build() {
  const auto& bounds = lp_.bounds();
  const std::size_t n = lp_.num_variables();
  var_map_.resize(n);
  std::size_t col = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& b = bounds[j];
    if (std::isfinite(b.lo)) {
      var_map_[j] = {VarMap::shift, col++, b.lo};
    } else if (std::isfinite(b.hi)) {
      var_map_[j] = {VarMap::flip, col++, b.hi};
    } else {
      var_map_[j] = {VarMap::split, col, 0.0};
      col += 2;
    }
  }
  structural_cols_ = col;

  rows_ = lp_.num_constraints();
  std::vector<Relation> rel(rows_);
  Vector rhs(rows_);
  row_sign_.assign(rows_, 1.0);
  std::size_t extra = 0;
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto& c = lp_.constraints()[r];
    double b = c.rhs;
    for (const auto& t : c.terms) {
      const auto& m = var_map_[t.var];
      if (m.kind != VarMap::split) b -= t.coef * m.offset;
    }
    Relation rr = c.relation;
    if (b < 0.0) {
      row_sign_[r] = -1.0;
      b = -b;
      if (rr == Relation::less_equal)
        rr = Relation::greater_equal;
      else if (rr == Relation::greater_equal)
        rr = Relation::less_equal;
    }
    rel[r] = rr;
    rhs[r] = b;
    extra += (rr == Relation::greater_equal) ? 2 : 1;
  }
  cols_ = structural_cols_ + extra;

  tab_ = Matrix(rows_, cols_);
  beta_ = rhs;
  basis_.assign(rows_, 0);
  ident_col_.assign(rows_, 0);
  upper_.assign(cols_, kInfinity);
  state_.assign(cols_, ColState::at_lower);
  artificial_.assign(cols_, false);

  for (std::size_t j = 0; j < n; ++j) {
    const auto& m = var_map_[j];
    if (m.kind == VarMap::shift) upper_[m.col] = bounds[j].hi - bounds[j].lo;
  }

  std::size_t next = structural_cols_;
  for (std::size_t r = 0; r < rows_; ++r) {
    const double s = row_sign_[r];
    for (const auto& t : lp_.constraints()[r].terms) {
      const auto& m = var_map_[t.var];
      switch (m.kind) {
      case VarMap::shift:
        tab_(r, m.col) += s * t.coef;
        break;
      case VarMap::flip:
        tab_(r, m.col) -= s * t.coef;
        break;
      case VarMap::split:
        tab_(r, m.col) += s * t.coef;
        tab_(r, m.col + 1) -= s * t.coef;
        break;
      }
    }
    if (rel[r] == Relation::less_equal) {
      tab_(r, next) = 1.0;
      ident_col_[r] = next++;
    } else {
      if (rel[r] == Relation::greater_equal) tab_(r, next++) = -1.0;
      tab_(r, next) = 1.0;
      artificial_[next] = true;
      ident_col_[r] = next++;
    }
    basis_[r] = ident_col_[r];
    state_[ident_col_[r]] = ColState::basic;
  }
}

void Tableau::reset_reduced_costs(const Vector& costs) {
  reduced_ = costs;
  for (std::size_t i = 0; i < rows_; ++i) {
    const double cb = costs[basis_[i]];
    if (cb != 0.0) simd::axpy(-cb, tab_.row(i), reduced_);
  }
  for (std::size_t i = 0; i < rows_; ++i) reduced_[basis_[i]] = 0.0;
}

void Tableau::pivot(std::size_t r, std::size_t q) {
  auto prow = tab_.row(r);
  simd::scale(1.0 / prow[q], prow);
  prow[q] = 1.0;
  // Sparse pivot rows skip the zero columns; adding -f * 0 would leave them unchanged.
  nonzero_.clear();
  for (std::size_t j = 0; j < cols_; ++j)
    if (prow[j] != 0.0) nonzero_.push_back(j);
  const bool sparse = nonzero_.size() * 4 < cols_;
  auto update = [&](std::span<double> row, double f) {
    if (sparse) {
      for (std::size_t j : nonzero_) row[j] -= f * prow[j];
    } else {
      simd::axpy(-f, prow, row);
    }
  };
  for (std::size_t i = 0; i < rows_; ++i) {
    if (i == r) continue;
    auto row = tab_.row(i);
    const double f = row[q];
    if (f == 0.0) continue;
    update(row, f);
    row[q] = 0.0;
  }
  const double fq = reduced_[q];
  if (fq != 0.0) update(reduced_, fq);
  reduced_[q] = 0.0;
}

Tableau::Outcome Tableau::iterate(std::size_t& iterations, std::size_t cap) {
  std::size_t degenerate_run = 0;
  while (true) {
    if (iterations >= cap) return Outcome::iteration_limit;
    const bool bland = degenerate_run >= opts_.degenerate_switch;

    std::size_t q = cols_;
    double best = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (state_[j] == ColState::basic || upper_[j] <= 0.0) continue;
      if (phase_two_ && artificial_[j]) continue;
      double score = 0.0;
      if (state_[j] == ColState::at_lower && reduced_[j] > opts_.optimality_tol)
        score = reduced_[j];
      else if (state_[j] == ColState::at_upper && reduced_[j] < -opts_.optimality_tol)
        score = -reduced_[j];
      if (score <= 0.0) continue;
      if (bland) {
        q = j;
        break;
      }
      if (score > best) {
        best = score;
        q = j;
      }
    }
    if (q == cols_) return Outcome::optimal;

    const double dir = state_[q] == ColState::at_lower ? 1.0 : -1.0;
    // Two-pass ratio test: bound the step with slightly relaxed limits, then
    // take the largest pivot among the rows that block within that bound.
    auto row_limit = [&](std::size_t i, double alpha, double slack) {
      if (alpha > opts_.pivot_tol) return (std::max(beta_[i], 0.0) + slack) / alpha;
      if (alpha < -opts_.pivot_tol && std::isfinite(upper_[basis_[i]]))
        return (std::max(upper_[basis_[i]] - beta_[i], 0.0) + slack) / -alpha;
      return kInfinity;
    };
    double relaxed = upper_[q];
    for (std::size_t i = 0; i < rows_; ++i)
      relaxed = std::min(relaxed, row_limit(i, tab_(i, q) * dir, opts_.feasibility_tol));
    double theta = upper_[q];
    std::size_t leave = rows_;
    double leave_alpha = 0.0;
    if (std::isfinite(relaxed)) {
      for (std::size_t i = 0; i < rows_; ++i) {
        const double alpha = tab_(i, q) * dir;
        const double limit = row_limit(i, alpha, 0.0);
        if (limit > relaxed) continue;
        bool take = leave == rows_;
        if (!take)
          take = bland ? (limit < theta - 1e-12 ||
                          (limit <= theta + 1e-12 && basis_[i] < basis_[leave]))
                       : std::abs(alpha) > std::abs(leave_alpha);
        if (take) {
          theta = limit;
          leave = i;
          leave_alpha = alpha;
        }
      }
      if (leave < rows_ && theta > upper_[q]) {
        theta = upper_[q];
        leave = rows_;
      }
    }

    if (!std::isfinite(theta)) return Outcome::unbounded;
    ++iterations;
    degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

    if (theta != 0.0)
      for (std::size_t i = 0; i < rows_; ++i) beta_[i] -= tab_(i, q) * dir * theta;

    if (leave == rows_) {
      state_[q] = state_[q] == ColState::at_lower ? ColState::at_upper : ColState::at_lower;
      continue;
    }

    const std::size_t out = basis_[leave];
    state_[out] = leave_alpha > 0.0 ? ColState::at_lower : ColState::at_upper;
    beta_[leave] = dir > 0.0 ? theta : upper_[q] - theta;
    basis_[leave] = q;
    state_[q] = ColState::basic;
    pivot(leave, q);
  }
}

std::size_t Tableau::iteration_cap() const {
  return opts_.max_iterations ? opts_.max_iterations : 50 * (rows_ + cols_) + 1000;
}

LpSolution Tableau::solve() {
  const std::size_t cap = iteration_cap();
  std::size_t& iterations = iterations_;

  const bool needs_phase_one =
      std::any_of(artificial_.begin(), artificial_.end(), [](bool a) { return a; });
  if (needs_phase_one) {
    Vector cost(cols_, 0.0);
    for (std::size_t j = 0; j < cols_; ++j)
      if (artificial_[j]) cost[j] = -1.0;
    reset_reduced_costs(cost);
    const Outcome o = iterate(iterations, cap);
    if (o == Outcome::iteration_limit) {
      LpSolution sol;
      sol.status = LpStatus::numerical_failure;
      sol.iterations = iterations;
      return sol;
    }
    double infeas = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      scale = std::max(scale, std::abs(beta_[i]));
      if (artificial_[basis_[i]]) infeas += std::max(beta_[i], 0.0);
    }
    for (std::size_t j = 0; j < cols_; ++j)
      if (artificial_[j] && state_[j] == ColState::at_upper) infeas += upper_[j];
    if (infeas > 1e-7 * scale) {
      LpSolution sol;
      sol.status = LpStatus::infeasible;
      sol.iterations = iterations;
      return sol;
    }
    for (std::size_t j = 0; j < cols_; ++j)
      if (artificial_[j]) {
        upper_[j] = 0.0;
        if (state_[j] == ColState::at_upper) state_[j] = ColState::at_lower;
      }
    for (std::size_t i = 0; i < rows_; ++i)
      if (artificial_[basis_[i]]) beta_[i] = 0.0;
  }

  phase_two_ = true;
  cost_.assign(cols_, 0.0);
  for (std::size_t j = 0; j < lp_.num_variables(); ++j) {
    const auto& m = var_map_[j];
    const double c = lp_.objective()[j];
    switch (m.kind) {
    case VarMap::shift:
      cost_[m.col] = c;
      break;
    case VarMap::flip:
      cost_[m.col] = -c;
      break;
    case VarMap::split:
      cost_[m.col] = c;
      cost_[m.col + 1] = -c;
      break;
    }
  }
  reset_reduced_costs(cost_);
  return finish(iterate(iterations, cap));
}

Vector Tableau::column_values() const {
  Vector colval(cols_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j)
    if (state_[j] == ColState::at_upper) colval[j] = upper_[j];
  for (std::size_t i = 0; i < rows_; ++i) colval[basis_[i]] = beta_[i];
  return colval;
}

LpSolution Tableau::finish(Outcome o) {
  LpSolution sol;
  sol.iterations = iterations_;
  if (o == Outcome::iteration_limit) {
    sol.status = LpStatus::numerical_failure;
    return sol;
  }
  if (o == Outcome::unbounded) {
    sol.status = LpStatus::unbounded;
    return sol;
  }
  if (o == Outcome::infeasible) {
    sol.status = LpStatus::infeasible;
    return sol;
  }

  const Vector colval = column_values();
  const std::size_t n = lp_.num_variables();
  sol.primal.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& m = var_map_[j];
    const auto& b = lp_.bounds()[j];
    double x = 0.0;
    switch (m.kind) {
    case VarMap::shift:
      x = m.offset + colval[m.col];
      break;
    case VarMap::flip:
      x = m.offset - colval[m.col];
      break;
    case VarMap::split:
      x = colval[m.col] - colval[m.col + 1];
      break;
    }
    sol.primal[j] = std::clamp(x, b.lo, b.hi);
  }

  sol.dual.assign(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double y = -reduced_[ident_col_[r]] * row_sign_[r];
    // clean sign noise on inequality rows
    const Relation rel = lp_.constraints()[r].relation;
    if (rel == Relation::less_equal) y = std::max(y, 0.0);
    if (rel == Relation::greater_equal) y = std::min(y, 0.0);
    sol.dual[r] = y;
  }
  sol.reduced_costs = lp_.objective();
  for (std::size_t r = 0; r < rows_; ++r)
    for (const auto& t : lp_.constraints()[r].terms) sol.reduced_costs[t.var] -= t.coef * sol.dual[r];

  sol.objective_value = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective_value += lp_.objective()[j] * sol.primal[j];

  double scale = 1.0;
  for (const auto& c : lp_.constraints()) scale = std::max(scale, std::abs(c.rhs));
  for (double x : sol.primal) scale = std::max(scale, std::abs(x));
  if (!std::isfinite(sol.objective_value) ||
      primal_infeasibility(lp_, sol.primal) > 1e-7 * scale) {
    sol.status = LpStatus::numerical_failure;
    return sol;
  }
  sol.status = LpStatus::optimal;
  return sol;
}


LpSolution Tableau::resolve_with_new_row() {
  const LpConstraint& c = lp_.constraints().back();
  if (c.relation == Relation::equal)
    throw InvalidInput("row generation accepts inequality rows only");
  const double sign = c.relation == Relation::greater_equal ? -1.0 : 1.0;

  // the row in column space, as sign * (a x) + slack = sign * b
  Vector a(cols_ + 1, 0.0);
  double b = c.rhs;
  for (const auto& t : c.terms) {
    const auto& m = var_map_[t.var];
    switch (m.kind) {
    case VarMap::shift:
      a[m.col] += t.coef;
      b -= t.coef * m.offset;
      break;
    case VarMap::flip:
      a[m.col] -= t.coef;
      b -= t.coef * m.offset;
      break;
    case VarMap::split:
      a[m.col] += t.coef;
      a[m.col + 1] -= t.coef;
      break;
    }
  }
  for (double& v : a) v *= sign;
  b *= sign;

  const Vector colval = column_values();
  double activity = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) activity += a[j] * colval[j];

  Matrix grown(rows_ + 1, cols_ + 1);
  for (std::size_t i = 0; i < rows_; ++i) std::copy_n(tab_.row(i).data(), cols_, grown.row(i).data());
  auto row = grown.row(rows_);
  std::copy(a.begin(), a.end(), row.begin());
  row[cols_] = 1.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    const double f = row[basis_[i]];
    if (f == 0.0) continue;
    simd::axpy(-f, grown.row(i), row);
    row[basis_[i]] = 0.0;
  }
  tab_ = std::move(grown);

  const std::size_t slack = cols_;
  beta_.push_back(b - activity);
  basis_.push_back(slack);
  ident_col_.push_back(slack);
  row_sign_.push_back(sign);
  upper_.push_back(kInfinity);
  state_.push_back(ColState::basic);
  artificial_.push_back(false);
  reduced_.push_back(0.0);
  cost_.push_back(0.0);
  ++rows_;
  ++cols_;

  const std::size_t cap = iterations_ + iteration_cap();
  Outcome o = dual_iterate(iterations_, cap);
  // clean up reduced costs that drifted past the tolerance
  if (o == Outcome::optimal) o = iterate(iterations_, cap);
  return finish(o);
}

Tableau::Outcome Tableau::dual_iterate(std::size_t& iterations, std::size_t cap) {
  while (true) {
    std::size_t r = rows_;
    double worst = opts_.feasibility_tol;
    bool below = false;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double x = beta_[i];
      if (-x > worst) {
        worst = -x;
        r = i;
        below = true;
      } else if (x - upper_[basis_[i]] > worst) {
        worst = x - upper_[basis_[i]];
        r = i;
        below = false;
      }
    }
    if (r == rows_) return Outcome::optimal;
    if (iterations >= cap) return Outcome::iteration_limit;

    // Entering candidates move x_B(r) back toward its violated bound; the
    // ratio test keeps every reduced cost on its dual-feasible side.
    auto row = tab_.row(r);
    const double toward = below ? -1.0 : 1.0;
    auto candidate = [&](std::size_t j, double& ratio) {
      if (state_[j] == ColState::basic || upper_[j] <= 0.0) return false;
      if (artificial_[j]) return false;
      const double dir = state_[j] == ColState::at_lower ? 1.0 : -1.0;
      const double alpha = row[j] * dir * toward;
      if (alpha <= opts_.pivot_tol) return false;
      const double slack = state_[j] == ColState::at_lower ? std::max(-reduced_[j], 0.0)
                                                           : std::max(reduced_[j], 0.0);
      ratio = slack / alpha;
      return true;
    };
    double relaxed = kInfinity;
    for (std::size_t j = 0; j < cols_; ++j) {
      double ratio;
      if (candidate(j, ratio)) {
        const double alpha = std::abs(row[j]);
        relaxed = std::min(relaxed, ratio + opts_.optimality_tol / alpha);
      }
    }
    if (!std::isfinite(relaxed)) return Outcome::infeasible;
    std::size_t q = cols_;
    for (std::size_t j = 0; j < cols_; ++j) {
      double ratio;
      if (candidate(j, ratio) && ratio <= relaxed &&
          (q == cols_ || std::abs(row[j]) > std::abs(row[q])))
        q = j;
    }

    ++iterations;
    const double target = below ? 0.0 : upper_[basis_[r]];
    const double alpha = row[q];
    const double delta = (beta_[r] - target) / alpha;
    for (std::size_t i = 0; i < rows_; ++i)
      if (i != r) beta_[i] -= tab_(i, q) * delta;
    const double entering = (state_[q] == ColState::at_upper ? upper_[q] : 0.0) + delta;
    state_[basis_[r]] = below ? ColState::at_lower : ColState::at_upper;
    beta_[r] = entering;
    basis_[r] = q;
    state_[q] = ColState::basic;
    pivot(r, q);
  }
}

} // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
  lp.validate();
  for (const auto& b : lp.bounds())
    if (b.lo > b.hi) {
      LpSolution sol;
      sol.status = LpStatus::infeasible;
      return sol;
    }
  Tableau tab(lp, opts);
  return tab.solve();
}

LpSolution solve_lp_with_rows(LinearProgram& lp, const RowSeparator& separate,
                              const SimplexOptions& opts) {
  lp.validate();
  for (const auto& b : lp.bounds())
    if (b.lo > b.hi) {
      LpSolution sol;
      sol.status = LpStatus::infeasible;
      return sol;
    }
  Tableau tab(lp, opts);
  LpSolution sol = tab.solve();
  while (sol.optimal()) {
    std::optional<LpConstraint> row = separate(sol);
    if (!row) break;
    lp.add_constraint(std::move(row->terms), row->relation, row->rhs);
    lp.validate();
    sol = tab.resolve_with_new_row();
  }
  return sol;
}

double primal_infeasibility(const LinearProgram& lp, std::span<const double> x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const auto& b = lp.bounds()[j];
    worst = std::max({worst, b.lo - x[j], x[j] - b.hi});
  }
  for (std::size_t r = 0; r < lp.num_constraints(); ++r) {
    const auto& c = lp.constraints()[r];
    const double act = lp.row_activity(r, x);
    switch (c.relation) {
    case Relation::less_equal:
      worst = std::max(worst, act - c.rhs);
      break;
    case Relation::greater_equal:
      worst = std::max(worst, c.rhs - act);
      break;
    case Relation::equal:
      worst = std::max(worst, std::abs(act - c.rhs));
      break;
    }
  }
  return worst;
}

double dual_objective(const LinearProgram& lp, const LpSolution& sol) {
  double v = 0.0;
  for (std::size_t r = 0; r < lp.num_constraints(); ++r) v += sol.dual[r] * lp.constraints()[r].rhs;
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const double rc = sol.reduced_costs[j];
    if (std::abs(rc) <= 1e-12) continue;
    const double bound = rc > 0.0 ? lp.bounds()[j].hi : lp.bounds()[j].lo;
    if (!std::isfinite(bound)) return kInfinity;
    v += rc * bound;
  }
  return v;
}

double complementary_slackness_gap(const LinearProgram& lp, const LpSolution& sol) {
  double worst = 0.0;
  for (std::size_t r = 0; r < lp.num_constraints(); ++r) {
    const double slack = lp.constraints()[r].rhs - lp.row_activity(r, sol.primal);
    worst = std::max(worst, std::abs(sol.dual[r] * slack));
  }
  return worst;
}

} // namespace netclear
