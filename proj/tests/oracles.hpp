#pragma once

// Independent reference computations used to derive expected values in the
// tests. None of them share code with the library's solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "netclear/linalg.hpp"
#include "netclear/lp.hpp"
#include "netclear/network.hpp"

namespace oracle {

using netclear::Matrix;
using netclear::Vector;

/// Solves M x = r by Gaussian elimination with partial pivoting.
inline std::optional<Vector> gauss_solve(Matrix m, Vector r) {
  const std::size_t n = r.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
    if (std::abs(m(p, k)) < 1e-13) return std::nullopt;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
      std::swap(r[k], r[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
      r[i] -= f * r[k];
    }
  }
  Vector x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = r[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= m(k, j) * x[j];
    x[k] = s / m(k, k);
  }
  return x;
}

/// Eisenberg-Noe fictitious default algorithm: grow the default set until
/// the payments of defaulting nodes, solved exactly, leave everyone else solvent.
inline Vector fictitious_default(const Matrix& a, const Vector& totals, const Vector& cash) {
  const std::size_t n = totals.size();
  std::vector<bool> def(n, false);
  Vector p = totals;
  for (std::size_t round = 0; round <= n; ++round) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (def[i]) continue;
      double inflow = cash[i];
      for (std::size_t j = 0; j < n; ++j) inflow += a(j, i) * p[j];
      if (inflow < totals[i] - 1e-12) {
        def[i] = true;
        changed = true;
      }
    }
    if (!changed && round > 0) break;
    std::vector<std::size_t> d;
    for (std::size_t i = 0; i < n; ++i)
      if (def[i]) d.push_back(i);
    // x_i = sum_{j in D} a_ji x_j + sum_{j not in D} a_ji P_j + cash_i   (i in D)
    Matrix m(d.size(), d.size());
    Vector r(d.size());
    for (std::size_t u = 0; u < d.size(); ++u) {
      const std::size_t i = d[u];
      r[u] = cash[i];
      for (std::size_t j = 0; j < n; ++j)
        if (!def[j]) r[u] += a(j, i) * totals[j];
      for (std::size_t v = 0; v < d.size(); ++v)
        m(u, v) = (u == v ? 1.0 : 0.0) - a(d[v], i);
    }
    const auto x = gauss_solve(m, r);
    p = totals;
    for (std::size_t u = 0; u < d.size(); ++u) p[d[u]] = std::max(0.0, (*x)[u]);
    if (!changed) break;
  }
  return p;
}

/// Maximum of an LP by enumerating every basic solution of its rows and
/// finite bounds. Only for a handful of variables. nullopt when infeasible.
inline std::optional<double> vertex_enumeration(const netclear::LinearProgram& lp) {
  const std::size_t n = lp.num_variables();
  struct Row {
    Vector a;
    double b;
  };
  std::vector<Row> hyper;
  for (const auto& c : lp.constraints()) {
    Vector a(n, 0.0);
    for (const auto& t : c.terms) a[t.var] += t.coef;
    hyper.push_back({a, c.rhs});
  }
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n, 0.0);
    e[j] = 1.0;
    if (std::isfinite(lp.bounds()[j].lo)) hyper.push_back({e, lp.bounds()[j].lo});
    if (std::isfinite(lp.bounds()[j].hi)) hyper.push_back({e, lp.bounds()[j].hi});
  }
  auto feasible = [&](const Vector& x) {
    for (std::size_t r = 0; r < lp.num_constraints(); ++r) {
      const auto& c = lp.constraints()[r];
      double s = 0.0;
      for (const auto& t : c.terms) s += t.coef * x[t.var];
      const double tol = 1e-8 * (1.0 + std::abs(c.rhs));
      if (c.relation == netclear::Relation::less_equal && s > c.rhs + tol) return false;
      if (c.relation == netclear::Relation::greater_equal && s < c.rhs - tol) return false;
      if (c.relation == netclear::Relation::equal && std::abs(s - c.rhs) > tol) return false;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] < lp.bounds()[j].lo - 1e-8 || x[j] > lp.bounds()[j].hi + 1e-8) return false;
    return true;
  };
  std::optional<double> best;
  std::vector<std::size_t> pick(n);
  auto rec = [&](auto& self, std::size_t k, std::size_t from) -> void {
    if (k == n) {
      Matrix m(n, n);
      Vector r(n);
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t j = 0; j < n; ++j) m(u, j) = hyper[pick[u]].a[j];
        r[u] = hyper[pick[u]].b;
      }
      const auto x = gauss_solve(m, r);
      if (!x || !feasible(*x)) return;
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v += lp.objective()[j] * (*x)[j];
      if (!best || v > *best) best = v;
      return;
    }
    for (std::size_t h = from; h < hyper.size(); ++h) {
      pick[k] = h;
      self(self, k + 1, h + 1);
    }
  };
  rec(rec, 0, 0);
  return best;
}

/// Direct double sum over ordered pairs.
inline double naive_gini(const Vector& z, const Matrix& w) {
  const std::size_t n = z.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      num += w(i, j) * std::abs(z[i] - z[j]);
      den += w(i, j) * (z[i] + z[j]);
    }
  return den > 0.0 ? num / den : 0.0;
}

/// Random relative liability matrix with row sums at most max_beta.
inline Matrix random_relative(std::size_t n, double max_beta, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && u(rng) < density) {
        a(i, j) = u(rng);
        s += a(i, j);
      }
    const double target = max_beta * u(rng);
    if (s > 0.0)
      for (std::size_t j = 0; j < n; ++j) a(i, j) *= target / s;
  }
  return a;
}

inline netclear::RelativeLiabilityMatrix wrap(const Matrix& a) {
  netclear::RelativeLiabilityMatrix r{a, Vector(a.rows(), 0.0)};
  for (std::size_t i = 0; i < a.rows(); ++i) r.row_sums[i] = a.row_sum(i);
  return r;
}

} // namespace oracle
