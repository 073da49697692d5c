#pragma once

#include <cstdint>
#include <string>

#include "ovl/network.hpp"
#include "ovl/sim.hpp"

namespace ovl {

// A scenario file bundles the network description, the run configuration and
// the controller hyperparameters. JSON, schema-checked on load: unknown keys
// are rejected with the offending path.
struct Scenario {
  std::string name;
  NetworkSpec net;
  SimConfig sim;
  int sweepArrivalN = 2;       // n for bernoulli(n, rate/n) when sweeping rates
  double warmupFraction = -1;  // >= 0 when the file gave a fraction; lets
                               // horizon overrides rescale the warmup
  void applyHorizonOverride(long long horizon) {
    if (horizon > 0) sim.horizon = horizon;
    if (warmupFraction >= 0)
      sim.warmupSlots = static_cast<long long>(warmupFraction * sim.horizon);
  }
};

Scenario loadScenario(const std::string& path);
Scenario parseScenario(const std::string& text, const std::string& what = "scenario");

// FNV-1a over the raw file bytes; pins the run manifest to its input
std::uint64_t hashFile(const std::string& path);

std::string manifestJson(const Scenario& sc, const std::string& scenarioPath,
                         std::uint64_t scenarioHash, const SimConfig& cfg);

}  // namespace ovl
