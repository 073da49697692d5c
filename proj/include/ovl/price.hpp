#pragma once

#include <span>
#include <vector>

#include "ovl/exact.hpp"

namespace ovl {

// Projected subgradient step on the dual: one price per link (or tunnel),
// driven by the gap between the observed queue norm and its budget, clamped
// to [0, K].
void priceUpdate(std::span<double> lambda, std::span<const double> queueNorm,
                 std::span<const double> budgets, double beta, double K);

// Exponential smoother for the queue observation fed to priceUpdate;
// off by default in the controllers.
struct QueueSmoother {
  double weight = 1.0;  // 1.0 = no smoothing
  std::vector<double> value;
  void observe(std::span<const double> queueNorm) {
    if (value.empty()) value.assign(queueNorm.begin(), queueNorm.end());
    for (std::size_t i = 0; i < value.size(); i++)
      value[i] = (1.0 - weight) * value[i] + weight * queueNorm[i];
  }
};

// D(lambda) = sum_f min_pi_f E[sum_l lambda_l Q^f_l] - sum_l lambda_l B_l,
// computed by exact dynamic programming per flow on the enumerated models.
// Test and diagnostics oracle only.
double dualFunctionEstimate(const std::vector<FlowModel>& models,
                            std::span<const double> lambda, std::span<const double> budgets);

double dualFunctionEstimate(const CompiledSpec& spec, std::span<const double> lambda,
                            std::span<const double> budgets, std::size_t stateCap = 200000);

}  // namespace ovl
