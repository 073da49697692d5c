#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ovl/rng.hpp"

namespace ovl {

// Euclidean projection onto { x >= 0, sum x = total } by sort-and-threshold.
// Already-feasible inputs come back unchanged.
void projectSimplex(std::span<double> x, double total);

// One replicator step of the budget split, driven by prices as fitness.
// The drift runs on normalized fractions b = B/total, which preserves the
// total exactly for any budget; the projection is a numerical safety net.
// Components that were exactly zero stay zero (simplex faces are invariant);
// positive components are floored at 1e-6 * total so rounding can never
// evict a trajectory from the interior.
void replicatorStep(std::span<double> budgets, std::span<const double> lambda, double gamma,
                    double total);

// KL-shaped distance sum_l Bstar_l ln(Bstar_l / B_l); +inf if any component
// of either argument is not strictly positive.
double lyapunovValue(std::span<const double> budgets, std::span<const double> bstar);

// map from a budget vector to the equilibrium prices it induces
using PriceMap = std::function<std::vector<double>(std::span<const double> budgets)>;

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> points;
  const std::vector<double>& at(double t) const;  // nearest stored point
};

// RK4 integration of dB_l/dt = B_l (lambda_l(B) - sum_k lambda_k(B) B_k/total),
// the replicator flow on the scaled simplex. Aborts if the trajectory leaves
// the simplex by more than simplexTol.
OdeTrajectory integrateReplicatorOde(const PriceMap& lambdaBar, std::vector<double> b0,
                                     double horizon, double dt, double simplexTol = 1e-7);

struct MonotonicityReport {
  long long samples = 0;
  long long satisfied = 0;  // <B - B', lambda(B) - lambda(B')> < 0
  double worstInner = 0.0;  // largest inner product seen (violations are >= 0)
  double satisfiedFraction() const {
    return samples == 0 ? 0.0 : static_cast<double>(satisfied) / samples;
  }
};

// Samples budget pairs on the simplex and tests the monotone response of the
// price map; decides whether the tuner's convergence guarantees apply.
MonotonicityReport monotonicityProbe(const PriceMap& lambdaBar, int dim, double total,
                                     long long samples, Rng& rng);

}  // namespace ovl
