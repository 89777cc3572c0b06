#include "netclear/network.hpp"

#include <cmath>
#include <string>

#include "netclear/error.hpp"

namespace netclear {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace

ShockRealization::ShockRealization(int round, Vector external_liabilities,
                                   Vector external_assets, Matrix internal_liabilities,
                                   double external_floor)
    : round_(round),
      external_liabilities_(std::move(external_liabilities)),
      external_assets_(std::move(external_assets)),
      internal_liabilities_(std::move(internal_liabilities)) {
  const std::size_t n = external_liabilities_.size();
  require(round_ >= 1, "shock round must be >= 1");
  require(external_floor > 0.0, "external liability floor must be positive");
  require(external_assets_.size() == n, "shock: external assets size mismatch");
  require(internal_liabilities_.rows() == n && internal_liabilities_.cols() == n,
          "shock: internal liability matrix must be n x n");
  for (std::size_t i = 0; i < n; ++i) {
    const double b = external_liabilities_[i];
    if (!(std::isfinite(b) && b >= external_floor))
      throw InvalidInput("shock round " + std::to_string(round_) + ": external liability b_" +
                         std::to_string(i) + " = " + std::to_string(b) +
                         " is below the positive floor");
    require(finite_nonnegative(external_assets_[i]),
            "shock: external assets must be finite and >= 0");
    require(internal_liabilities_(i, i) == 0.0, "shock: internal liabilities need a zero diagonal");
    for (std::size_t j = 0; j < n; ++j)
      require(finite_nonnegative(internal_liabilities_(i, j)),
              "shock: internal liabilities must be finite and >= 0");
  }
}

double ShockRealization::liability_mass() const {
  return sum(external_liabilities_) + sum(internal_liabilities_.data());
}

ShockRealization ShockRealization::with_round(int round) const {
  ShockRealization copy = *this;
  require(round >= 1, "shock round must be >= 1");
  copy.round_ = round;
  return copy;
}

SamplePath::SamplePath(std::vector<ShockRealization> shocks) : shocks_(std::move(shocks)) {
  require(!shocks_.empty(), "sample path must be nonempty");
  const std::size_t n = shocks_.front().size();
  for (std::size_t k = 0; k < shocks_.size(); ++k) {
    require(shocks_[k].size() == n, "sample path: inconsistent node count across rounds");
    if (k > 0)
      require(shocks_[k].round() == shocks_[k - 1].round() + 1,
              "sample path: rounds must be contiguous");
  }
}

double SamplePath::max_liability_mass() const {
  double m = 0.0;
  for (const auto& s : shocks_) m = std::max(m, s.liability_mass());
  return m;
}

double SamplePath::min_external_liability() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : shocks_)
    for (double b : s.external_liabilities()) m = std::min(m, b);
  return m;
}

SystemState SystemState::empty(std::size_t n) {
  SystemState s;
  s.pairwise_ = Matrix::square(n);
  s.totals_.assign(n, 0.0);
  s.last_clearing_.assign(n, 0.0);
  return s;
}

SystemState::SystemState(Matrix pairwise, Vector totals, Vector last_clearing)
    : pairwise_(std::move(pairwise)),
      totals_(std::move(totals)),
      last_clearing_(std::move(last_clearing)) {
  const std::size_t n = totals_.size();
  require(pairwise_.rows() == n && pairwise_.cols() == n, "state: pairwise matrix must be n x n");
  require(last_clearing_.size() == n, "state: last clearing size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    require(finite_nonnegative(totals_[i]), "state: totals must be finite and >= 0");
    require(finite_nonnegative(last_clearing_[i]), "state: last clearing must be >= 0");
    for (std::size_t j = 0; j < n; ++j)
      require(finite_nonnegative(pairwise_(i, j)), "state: pairwise liabilities must be >= 0");
    require(external_part(i) >= -kStateTolerance * std::max(1.0, totals_[i]),
            "state: totals must cover the internal liabilities");
  }
}

double SystemState::external_part(std::size_t i) const {
  return totals_[i] - pairwise_.row_sum(i);
}

double RelativeLiabilityMatrix::max_row_sum() const {
  double m = 0.0;
  for (double b : row_sums) m = std::max(m, b);
  return m;
}

bool InterventionVector::feasible(double tol) const {
  if (amounts.size() != caps.size()) return false;
  for (std::size_t i = 0; i < amounts.size(); ++i)
    if (amounts[i] < -tol || amounts[i] > caps[i] + tol) return false;
  return sum(amounts) <= budget + tol;
}

SystemState advance_state(const SystemState& state, std::span<const double> clearing,
                          const ShockRealization& shock) {
  const std::size_t n = state.size();
  require(shock.size() == n, "advance_state: shock dimension does not match state");
  require(clearing.size() == n, "advance_state: clearing dimension does not match state");

  const Vector& prev_totals = state.totals();
  Vector paid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = clearing[i];
    const double slack = kStateTolerance * std::max(1.0, prev_totals[i]);
    if (!(std::isfinite(x) && x >= -slack && x <= prev_totals[i] + slack))
      throw InvalidInput("advance_state: clearing of node " + std::to_string(i) +
                         " is outside [0, P_i]");
    paid[i] = std::clamp(x, 0.0, prev_totals[i]);
  }

  Matrix pairwise = shock.internal_liabilities();
  Vector totals(n);
  const Matrix& prev = state.pairwise();
  for (std::size_t i = 0; i < n; ++i) {
    const double carry = prev_totals[i] > 0.0 ? 1.0 - paid[i] / prev_totals[i] : 0.0;
    for (std::size_t j = 0; j < n; ++j) pairwise(i, j) += prev(i, j) * carry;
    const double new_internal = shock.internal_liabilities().row_sum(i);
    totals[i] = shock.external_liabilities()[i] + new_internal + (prev_totals[i] - paid[i]);
  }
  return SystemState(std::move(pairwise), std::move(totals), std::move(paid));
}

RelativeLiabilityMatrix relative_matrix(const SystemState& state) {
  const std::size_t n = state.size();
  RelativeLiabilityMatrix a{Matrix::square(n), Vector(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const double total = state.totals()[i];
    if (total <= 0.0) continue;
    double rs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = state.pairwise()(i, j) / total;
      a.entries(i, j) = v;
      rs += v;
    }
    a.row_sums[i] = rs;
  }
  return a;
}

bool check_nonvanishing(const RelativeLiabilityMatrix& a, double margin) {
  return a.max_row_sum() < 1.0 - margin;
}

} // namespace netclear
