#include "ovl/replicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ovl {

void projectSimplex(std::span<double> x, double total) {
  const int n = static_cast<int>(x.size());
  static thread_local std::vector<double> sorted;
  sorted.assign(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  int support = 0;
  for (int i = 0; i < n; i++) {
    cum += sorted[i];
    double t = (cum - total) / (i + 1);
    if (sorted[i] - t > 0.0) {
      theta = t;
      support = i + 1;
    }
  }
  (void)support;
  for (double& v : x) v = std::max(v - theta, 0.0);
}

void replicatorStep(std::span<double> budgets, std::span<const double> lambda, double gamma,
                    double total) {
  const std::size_t n = budgets.size();
  double avg = 0.0;
  for (std::size_t i = 0; i < n; i++) avg += lambda[i] * (budgets[i] / total);
  bool touched = false;
  for (std::size_t i = 0; i < n; i++) {
    if (budgets[i] == 0.0) continue;  // faces are invariant
    double b = budgets[i] / total;
    b += gamma * b * (lambda[i] - avg);
    double v = total * b;
    double floor = 1e-6 * total;
    budgets[i] = std::max(v, floor);
    if (budgets[i] != v) touched = true;
  }
  // drift preserves the total exactly; project only if flooring or rounding
  // moved the sum
  double sum = 0.0;
  for (double v : budgets) sum += v;
  if (touched || std::abs(sum - total) > 1e-12 * std::max(1.0, total))
    projectSimplex(budgets, total);
}

double lyapunovValue(std::span<const double> budgets, std::span<const double> bstar) {
  double v = 0.0;
  for (std::size_t i = 0; i < budgets.size(); i++) {
    if (budgets[i] <= 0.0 || bstar[i] <= 0.0)
      return std::numeric_limits<double>::infinity();
    v += bstar[i] * std::log(bstar[i] / budgets[i]);
  }
  return v;
}

const std::vector<double>& OdeTrajectory::at(double t) const {
  std::size_t lo = 0, hi = times.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (times[mid] < t)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo > 0 && std::abs(times[lo - 1] - t) < std::abs(times[lo] - t)) lo--;
  return points[lo];
}

OdeTrajectory integrateReplicatorOde(const PriceMap& lambdaBar, std::vector<double> b0,
                                     double horizon, double dt, double simplexTol) {
  const std::size_t n = b0.size();
  double total = 0.0;
  for (double v : b0) total += v;

  auto field = [&](const std::vector<double>& b, std::vector<double>& out) {
    std::vector<double> lam = lambdaBar(b);
    double avg = 0.0;
    for (std::size_t i = 0; i < n; i++) avg += lam[i] * b[i] / total;
    out.resize(n);
    for (std::size_t i = 0; i < n; i++) out[i] = b[i] * (lam[i] - avg);
  };

  OdeTrajectory traj;
  std::vector<double> b = std::move(b0);
  std::vector<double> k1, k2, k3, k4, tmp(n);
  double t = 0.0;
  traj.times.push_back(t);
  traj.points.push_back(b);
  while (t < horizon - 1e-12) {
    double h = std::min(dt, horizon - t);
    field(b, k1);
    for (std::size_t i = 0; i < n; i++) tmp[i] = b[i] + 0.5 * h * k1[i];
    field(tmp, k2);
    for (std::size_t i = 0; i < n; i++) tmp[i] = b[i] + 0.5 * h * k2[i];
    field(tmp, k3);
    for (std::size_t i = 0; i < n; i++) tmp[i] = b[i] + h * k3[i];
    field(tmp, k4);
    for (std::size_t i = 0; i < n; i++)
      b[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t += h;

    double sum = 0.0, worst = 0.0;
    for (double v : b) {
      sum += v;
      worst = std::min(worst, v);
    }
    if (std::abs(sum - total) > simplexTol || worst < -simplexTol)
      throw std::runtime_error("replicator ode left the simplex at t=" + std::to_string(t) +
                               " (sum drift " + std::to_string(sum - total) + ", min " +
                               std::to_string(worst) + "); reduce dt");
    traj.times.push_back(t);
    traj.points.push_back(b);
  }
  return traj;
}

MonotonicityReport monotonicityProbe(const PriceMap& lambdaBar, int dim, double total,
                                     long long samples, Rng& rng) {
  auto sampleSimplex = [&]() {
    std::vector<double> x(dim);
    double sum = 0.0;
    for (double& v : x) {
      v = -std::log(1.0 - rng.uniform());
      sum += v;
    }
    for (double& v : x) v = v / sum * total;
    return x;
  };

  MonotonicityReport rep;
  rep.worstInner = -std::numeric_limits<double>::infinity();
  for (long long k = 0; k < samples; k++) {
    std::vector<double> a = sampleSimplex(), b = sampleSimplex();
    std::vector<double> la = lambdaBar(a), lb = lambdaBar(b);
    double inner = 0.0;
    for (int i = 0; i < dim; i++) inner += (a[i] - b[i]) * (la[i] - lb[i]);
    rep.samples++;
    if (inner < 0.0) rep.satisfied++;
    rep.worstInner = std::max(rep.worstInner, inner);
  }
  return rep;
}

}  // namespace ovl
