#include "netclear/horizon.hpp"

#include <algorithm>
#include <cmath>

#include "netclear/policy.hpp"

namespace netclear {
namespace {

void check_inputs(const SamplePath& path, double budget, std::span<const double> caps,
                  const ConstantProportionCertificate& cert) {
  if (path.empty()) throw InvalidInput("horizon LP: empty sample path");
  const std::size_t n = path.nodes();
  if (caps.size() != n) throw InvalidInput("horizon LP: caps size mismatch");
  if (!(budget >= 0.0)) throw InvalidInput("horizon LP: budget must be >= 0");
  for (double l : caps)
    if (!(l >= 0.0)) throw InvalidInput("horizon LP: caps must be >= 0");
  if (cert.zeta.rows() != n || cert.zeta.cols() != n)
    throw InvalidInput("horizon LP: certificate has the wrong size");
  if (!cert.valid)
    throw CertificateError("liability proportions are not constant over the horizon (max deviation " +
                           std::to_string(cert.max_violation) + ")");
}

/// h(t) = sum_{t' <= t} (b(t') + l(t')) for every round of the path.
std::vector<Vector> cumulative_liabilities(const SamplePath& path) {
  const std::size_t n = path.nodes();
  std::vector<Vector> h;
  Vector acc(n, 0.0);
  for (const auto& shock : path) {
    const Matrix& l = shock.internal_liabilities();
    for (std::size_t i = 0; i < n; ++i) acc[i] += shock.external_liabilities()[i] + l.row_sum(i);
    h.push_back(acc);
  }
  return h;
}

/// Row (I - zeta^T) x over block `offset`, minus the intervention block.
std::vector<LpTerm> default_row(const Matrix& zeta, std::size_t i, std::size_t x_offset,
                                std::size_t z_offset) {
  const std::size_t n = zeta.rows();
  std::vector<LpTerm> row{{x_offset + i, 1.0 - zeta(i, i)}};
  for (std::size_t j = 0; j < n; ++j)
    if (j != i && zeta(j, i) != 0.0) row.push_back({x_offset + j, -zeta(j, i)});
  row.push_back({z_offset + i, -1.0});
  return row;
}

double clamp_tiny(double v, double scale) {
  if (v < 0.0 && v >= -1e-9 * std::max(1.0, scale)) return 0.0;
  return v;
}

} // namespace

ConstantProportionCertificate check_constant_proportions(const SamplePath& path, double tol) {
  if (path.empty()) throw InvalidInput("check_constant_proportions: empty sample path");
  const std::size_t n = path.nodes();
  ConstantProportionCertificate cert;
  cert.zeta = Matrix::square(n);
  auto ratio = [](const ShockRealization& s, std::size_t i, std::size_t j) {
    const Matrix& l = s.internal_liabilities();
    return l(i, j) / (s.external_liabilities()[i] + l.row_sum(i));
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cert.zeta(i, j) = ratio(path[0], i, j);
  for (const auto& shock : path)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cert.max_violation =
            std::max(cert.max_violation, std::abs(ratio(shock, i, j) - cert.zeta(i, j)));
  bool substochastic = true;
  for (std::size_t i = 0; i < n; ++i) substochastic = substochastic && cert.zeta.row_sum(i) < 1.0;
  cert.valid = substochastic && cert.max_violation <= tol;
  return cert;
}

HorizonSolution solve_horizon_primal(const SamplePath& path, double budget,
                                     std::span<const double> caps,
                                     const ConstantProportionCertificate& cert,
                                     HorizonObjective objective) {
  check_inputs(path, budget, caps, cert);
  const std::size_t n = path.nodes();
  const std::size_t T = path.size();
  const auto h = cumulative_liabilities(path);
  const std::size_t z0 = T * n;

  LinearProgram lp;
  for (std::size_t t = 0; t < T; ++t) {
    const double w = objective == HorizonObjective::plain ? 1.0 : static_cast<double>(T - t);
    for (std::size_t i = 0; i < n; ++i) lp.add_variable(w, 0.0, h[t][i]);
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) lp.add_variable(0.0, 0.0, caps[i]);

  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<LpTerm> row;
      for (std::size_t s = 0; s <= t; ++s) row.push_back({s * n + i, 1.0});
      lp.add_constraint(std::move(row), Relation::less_equal, h[t][i]);
    }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      lp.add_constraint(default_row(cert.zeta, i, t * n, z0 + t * n), Relation::less_equal,
                        path[t].external_assets()[i]);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<LpTerm> row;
    for (std::size_t i = 0; i < n; ++i) row.push_back({z0 + t * n + i, 1.0});
    lp.add_constraint(std::move(row), Relation::less_equal, budget);
  }

  HorizonSolution out;
  out.lp = solve_lp(lp);
  if (!out.lp.optimal())
    throw NumericalError("horizon primal: solver returned " + to_string(out.lp.status));
  for (std::size_t t = 0; t < T; ++t) {
    Vector p(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = std::max(0.0, out.lp.primal[t * n + i]);
      z[i] = std::clamp(out.lp.primal[z0 + t * n + i], 0.0, caps[i]);
    }
    out.value += sum(p);
    out.clearing.push_back(std::move(p));
    out.intervention.push_back(std::move(z));
  }
  return out;
}

HorizonDual solve_horizon_dual(const SamplePath& path, double budget, std::span<const double> caps,
                               const ConstantProportionCertificate& cert) {
  check_inputs(path, budget, caps, cert);
  const std::size_t n = path.nodes();
  const std::size_t T = path.size();
  const auto h = cumulative_liabilities(path);
  const Matrix& zeta = cert.zeta;

  // lambda(t), mu(t), xi(t) blocks of n and one nu(t) per round; the solver
  // maximizes, so the costs are negated.
  const std::size_t lam0 = 0, mu0 = T * n, xi0 = 2 * T * n, nu0 = 3 * T * n;
  LinearProgram lp;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) lp.add_variable(-h[t][i]);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) lp.add_variable(-path[t].external_assets()[i]);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) lp.add_variable(-caps[i]);
  for (std::size_t t = 0; t < T; ++t) lp.add_variable(-budget);

  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      // mu_i(t) - sum_j zeta_ij mu_j(t) + sum_{t' >= t} lambda_i(t') >= 1
      std::vector<LpTerm> row{{mu0 + t * n + i, 1.0 - zeta(i, i)}};
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && zeta(i, j) != 0.0) row.push_back({mu0 + t * n + j, -zeta(i, j)});
      for (std::size_t s = t; s < T; ++s) row.push_back({lam0 + s * n + i, 1.0});
      lp.add_constraint(std::move(row), Relation::greater_equal, 1.0);
    }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      lp.add_constraint({{xi0 + t * n + i, 1.0}, {nu0 + t, 1.0}, {mu0 + t * n + i, -1.0}},
                        Relation::greater_equal, 0.0);

  HorizonDual out;
  out.lp = solve_lp(lp);
  if (!out.lp.optimal())
    throw NumericalError("horizon dual: solver returned " + to_string(out.lp.status));
  const Vector& x = out.lp.primal;
  out.value = -out.lp.objective_value;
  for (std::size_t t = 0; t < T; ++t) {
    out.lambda.emplace_back(x.begin() + lam0 + t * n, x.begin() + lam0 + (t + 1) * n);
    out.mu.emplace_back(x.begin() + mu0 + t * n, x.begin() + mu0 + (t + 1) * n);
    out.xi.emplace_back(x.begin() + xi0 + t * n, x.begin() + xi0 + (t + 1) * n);
    out.nu.push_back(x[nu0 + t]);
  }
  return out;
}

PrefixSolution solve_prefix_oneshot(const SamplePath& path, double budget,
                                    std::span<const double> caps,
                                    const ConstantProportionCertificate& cert) {
  check_inputs(path, budget, caps, cert);
  const std::size_t n = path.nodes();
  const std::size_t T = path.size();
  const auto h = cumulative_liabilities(path);
  std::vector<Vector> f;
  Vector acc(n, 0.0);
  for (const auto& shock : path) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += shock.external_assets()[i];
    f.push_back(acc);
  }

  // vec(Q~(1:T)) then vec(W(1:T)); the default rows use diag(zeta, ..., zeta)
  const std::size_t w0 = T * n;
  LinearProgram lp;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) lp.add_variable(1.0, 0.0, h[t][i]);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      lp.add_variable(0.0, 0.0, static_cast<double>(t + 1) * caps[i]);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      lp.add_constraint(default_row(cert.zeta, i, t * n, w0 + t * n), Relation::less_equal,
                        f[t][i]);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<LpTerm> row;
    for (std::size_t i = 0; i < n; ++i) row.push_back({w0 + t * n + i, 1.0});
    lp.add_constraint(std::move(row), Relation::less_equal, static_cast<double>(t + 1) * budget);
  }
  // the cumulative rows alone let Q~ and W shrink between rounds
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      lp.add_constraint({{t * n + i, 1.0}, {(t - 1) * n + i, -1.0}}, Relation::greater_equal, 0.0);
      lp.add_constraint({{w0 + t * n + i, 1.0}, {w0 + (t - 1) * n + i, -1.0}},
                        Relation::greater_equal, 0.0);
    }

  const LpSolution sol = solve_lp(lp);
  if (!sol.optimal()) throw NumericalError("prefix LP: solver returned " + to_string(sol.status));

  PrefixSolution out;
  out.objective = sol.objective_value;
  Vector prev_q(n, 0.0), prev_w(n, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    Vector q(sol.primal.begin() + t * n, sol.primal.begin() + (t + 1) * n);
    Vector w(sol.primal.begin() + w0 + t * n, sol.primal.begin() + w0 + (t + 1) * n);
    Vector p(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = clamp_tiny(q[i] - prev_q[i], h[t][i]);
      if (p[i] < 0.0)
        throw NumericalError("prefix LP: recovered payment of node " + std::to_string(i) +
                             " in round " + std::to_string(path[t].round()) + " is negative (" +
                             std::to_string(p[i]) + ")");
      z[i] = clamp_tiny(w[i] - prev_w[i], caps[i]);
    }
    out.rewards.push_back(sum(p));
    out.value += out.rewards.back();
    prev_q = q;
    prev_w = w;
    out.cumulative_payments.push_back(std::move(q));
    out.cumulative_interventions.push_back(std::move(w));
    out.clearing.push_back(std::move(p));
    out.intervention.push_back(std::move(z));
  }
  return out;
}

MyopicReport verify_myopic_optimality(const SamplePath& path, double budget,
                                      std::span<const double> caps) {
  MyopicReport rep;
  rep.certificate = check_constant_proportions(path);
  rep.applicable = rep.certificate.valid;

  InterventionPolicy policy{budget, Vector(caps.begin(), caps.end()), std::nullopt};
  rep.sequential_value =
      value_given_sample_path(InitialCondition::empty(path.nodes()), path, policy).value;

  // the LPs are still well defined with the first-round proportions
  ConstantProportionCertificate forced = rep.certificate;
  forced.valid = true;
  bool substochastic = true;
  for (std::size_t i = 0; i < forced.zeta.rows(); ++i)
    substochastic = substochastic && forced.zeta.row_sum(i) < 1.0;
  if (substochastic) {
    rep.horizon_value = solve_horizon_primal(path, budget, caps, forced).value;
    rep.dual_value = solve_horizon_dual(path, budget, caps, forced).value;
  }
  rep.gap = rep.sequential_value - rep.horizon_value;
  rep.duality_gap = rep.horizon_value - rep.dual_value;
  return rep;
}

double phi(const ConnectivityProbe& p, double x, double y) {
  const double carry = p.previous_total > 0.0 ? 1.0 - y / p.previous_total : 0.0;
  const double owed = p.new_liability + p.carried_liability * carry;
  const double total = p.new_total_liability + p.previous_total - y;
  return x * owed / total;
}

std::array<double, 3> phi_hessian(const ConnectivityProbe& p, double x, double y, double step) {
  const double hx = step * std::max(1.0, std::abs(x));
  const double hy = step * std::max(1.0, std::abs(y));
  const double f0 = phi(p, x, y);
  const double fxx = (phi(p, x + hx, y) - 2.0 * f0 + phi(p, x - hx, y)) / (hx * hx);
  const double fyy = (phi(p, x, y + hy) - 2.0 * f0 + phi(p, x, y - hy)) / (hy * hy);
  const double fxy = (phi(p, x + hx, y + hy) - phi(p, x + hx, y - hy) - phi(p, x - hx, y + hy) +
                      phi(p, x - hx, y - hy)) /
                     (4.0 * hx * hy);
  return {fxx, fxy, fyy};
}

} // namespace netclear
