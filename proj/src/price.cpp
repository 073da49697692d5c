#include "ovl/price.hpp"

#include <algorithm>

namespace ovl {

void priceUpdate(std::span<double> lambda, std::span<const double> queueNorm,
                 std::span<const double> budgets, double beta, double K) {
  for (std::size_t l = 0; l < lambda.size(); l++) {
    double v = lambda[l] + beta * (queueNorm[l] - budgets[l]);
    lambda[l] = std::clamp(v, 0.0, K);
  }
}

double dualFunctionEstimate(const std::vector<FlowModel>& models,
                            std::span<const double> lambda, std::span<const double> budgets) {
  double d = 0.0;
  for (const FlowModel& m : models) d += solveAverageCost(m, lambda).averageCost;
  for (std::size_t l = 0; l < lambda.size(); l++) d -= lambda[l] * budgets[l];
  return d;
}

double dualFunctionEstimate(const CompiledSpec& spec, std::span<const double> lambda,
                            std::span<const double> budgets, std::size_t stateCap) {
  std::vector<FlowModel> models;
  models.reserve(spec.flowCount());
  for (int f = 0; f < spec.flowCount(); f++) models.emplace_back(spec, f, stateCap);
  return dualFunctionEstimate(models, lambda, budgets);
}

}  // namespace ovl
