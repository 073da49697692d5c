#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ovl/controllers.hpp"
#include "ovl/metrics.hpp"
#include "ovl/network.hpp"

namespace ovl {

struct SimConfig {
  long long horizon = 0;
  std::uint64_t seed = 1;
  std::string controller = "fixed-split";
  UnderlayPolicy policy = UnderlayPolicy::StaticSplit;
  long long stride = 0;        // 0 = auto: about 5000 sampled rows
  long long warmupSlots = -1;  // -1 = 10% of the horizon
  ControllerParams ctrl;

  long long resolvedWarmup() const { return warmupSlots < 0 ? horizon / 10 : warmupSlots; }
  long long resolvedStride() const {
    return stride > 0 ? stride : std::max<long long>(1, horizon / 5000);
  }
  void check() const;  // horizon >= 1, stride >= 1, warmup < horizon
};

// Drives the slot loop: controller decide, injections, capacity sampling,
// service and routing, external arrivals, bookkeeping, controller observe.
// Deterministic for a fixed (spec, config, seed).
MetricsLog runSimulation(const CompiledSpec& spec, const SimConfig& cfg);
MetricsLog runSimulation(const CompiledSpec& spec, const SimConfig& cfg, Controller& ctrl);

struct SweepRow {
  std::string controller;
  double rate = 0.0;
  std::uint64_t runSeed = 0;
  double avgDelay = 0.0;
  double avgQueue = 0.0;          // link queues
  double avgQueueWithBacklog = 0.0;
  double throughput = 0.0;        // delivered per slot, all flows
  long long drops = 0;
};

// One run per rate with every flow's arrivals set to bernoulli(n, rate/n).
// Runs fan out over a small thread pool; per-run seeds derive from the base
// seed by fixed offsets, so results do not depend on the parallelism.
std::vector<SweepRow> sweepArrivalRate(const NetworkSpec& base, const SimConfig& cfg,
                                       const std::string& controller,
                                       std::span<const double> rates, int arrivalN = 2,
                                       int jobs = 0);

NetworkSpec withArrivalRate(const NetworkSpec& base, double rate, int arrivalN = 2);

std::string sweepCsv(std::span<const SweepRow> rows);

}  // namespace ovl
