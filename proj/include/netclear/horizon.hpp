#pragma once

// Whole-horizon linear programs for environments whose liability proportions
// l_ij(t) / (b_i(t) + l_i(t)) do not change over time. Under that condition
// A(t) is the constant matrix zeta and the payment dynamics become linear.

#include <array>
#include <string>
#include <vector>

#include "netclear/error.hpp"
#include "netclear/linalg.hpp"
#include "netclear/lp.hpp"
#include "netclear/network.hpp"

namespace netclear {

inline constexpr double kCertificateTolerance = 1e-9;

/// Raised when a horizon LP is requested for an environment without constant proportions.
class CertificateError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

struct ConstantProportionCertificate {
  Matrix zeta;
  bool valid = false;
  double max_violation = 0.0;
};

/// zeta from the first round; valid iff every round stays within tol of it
/// and every row of zeta sums below 1.
ConstantProportionCertificate check_constant_proportions(const SamplePath& path,
                                                         double tol = kCertificateTolerance);

enum class HorizonObjective {
  plain,           // sum_t 1^T P~(t)
  prefix_weighted, // sum_t 1^T Q~(t) = sum_t (T - t + 1) 1^T P~(t)
};

struct HorizonSolution {
  double value = 0.0; // sum_t 1^T P~(t), whatever the objective
  std::vector<Vector> clearing;
  std::vector<Vector> intervention;
  LpSolution lp;
};

/// Paths start from the debt-free state: h(t) = sum_{t' <= t} (b + l).
HorizonSolution solve_horizon_primal(const SamplePath& path, double budget,
                                     std::span<const double> caps,
                                     const ConstantProportionCertificate& cert,
                                     HorizonObjective objective = HorizonObjective::plain);

struct HorizonDual {
  double value = 0.0;
  std::vector<Vector> lambda;
  std::vector<Vector> mu;
  Vector nu;
  std::vector<Vector> xi;
  LpSolution lp;
};

/// The dual program, built and solved as its own LP.
HorizonDual solve_horizon_dual(const SamplePath& path, double budget, std::span<const double> caps,
                               const ConstantProportionCertificate& cert);

struct PrefixSolution {
  double objective = 0.0; // sum_t 1^T Q~(t)
  double value = 0.0;     // sum_t 1^T P~(t) of the recovered schedule
  std::vector<Vector> cumulative_payments;      // Q~(t)
  std::vector<Vector> cumulative_interventions; // W(t)
  std::vector<Vector> clearing;                 // Q~(t) - Q~(t-1)
  std::vector<Vector> intervention;             // W(t) - W(t-1)
  Vector rewards;
};

/// One static clearing problem over the stacked prefix sums. Each block
/// only sees cumulative totals, so the program relaxes the horizon primal:
/// it agrees with it when the optimal prefix payments are nondecreasing.
/// Throws NumericalError when a recovered payment is negative beyond 1e-9.
PrefixSolution solve_prefix_oneshot(const SamplePath& path, double budget,
                                    std::span<const double> caps,
                                    const ConstantProportionCertificate& cert);

struct MyopicReport {
  bool applicable = false;
  double sequential_value = 0.0;
  double horizon_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;         // sequential - horizon
  double duality_gap = 0.0; // horizon - dual
  ConstantProportionCertificate certificate;

  std::string status() const { return applicable ? "applicable" : "inapplicable"; }
};

/// Compares the round-by-round LP policy with the horizon LP; both values are
/// reported even when the certificate fails.
MyopicReport verify_myopic_optimality(const SamplePath& path, double budget,
                                      std::span<const double> caps);

/// Inputs of phi(x, y) = x * a_ji(t), with a_ji(t) written as a function of
/// x = P~_j(t) and y = P~_j(t-1).
struct ConnectivityProbe {
  double new_liability = 0.0;      // l_ji(t)
  double carried_liability = 0.0;  // p_ji(t-1)
  double previous_total = 0.0;     // P_j(t-1)
  double new_total_liability = 0.0; // b_j(t) + l_j(t)
};

double phi(const ConnectivityProbe& probe, double x, double y);

/// Central-difference Hessian (d2/dx2, d2/dxdy, d2/dy2) of phi at (x, y).
std::array<double, 3> phi_hessian(const ConnectivityProbe& probe, double x, double y,
                                  double step = 1e-3);

} // namespace netclear
