#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ovl/network.hpp"

namespace ovl {

struct OracleTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Enumerated average-cost MDP for one flow under the static underlay split.
//
// Because each link shares its capacity in fixed ratios regardless of queue
// contents, the service a flow receives on link l is Binomial(C_l(t), mu_{l,f})
// and its queue process decouples from the other flows. Slot order mirrors the
// simulator: inject, serve-and-route, external arrivals, with buffer caps at
// each append. States are (backlog, q over R_f) at decision time.
class FlowModel {
 public:
  struct ActionList {
    std::vector<std::vector<int>> u;  // lexicographically ordered injection vectors
  };

  FlowModel(const CompiledSpec& spec, int flow, std::size_t stateCap = 200000,
            std::size_t branchCap = 2000000);

  const CompiledSpec& spec() const { return *spec_; }
  int flow() const { return flow_; }
  int stateCount() const { return static_cast<int>(states_.size()); }
  int backlogOf(int s) const { return states_[s].backlog; }
  std::span<const int> queuesOf(int s) const { return states_[s].q; }
  int initialState() const { return 0; }

  // feasible injection vectors for a state: all splits of
  // min(backlog, total cap) across the ingress links within per-link caps
  const std::vector<std::vector<int>>& actions(int s) const;
  int actionCount(int s) const { return static_cast<int>(actions(s).size()); }

  const std::vector<std::pair<int, double>>& transitions(int s, int a) const {
    return trans_[s][a];
  }

  // price-weighted holding cost of a state: sum over R_f of lambda_l * q_l
  // (prices indexed by global link id)
  double stageCost(int s, std::span<const double> prices) const;
  // total packets in link queues for a state (excludes the source backlog)
  int queueMass(int s) const;

  std::span<const int> flowLinks() const;  // global link ids of R_f, by position

 private:
  struct StateInfo {
    int backlog;
    std::vector<int> q;
  };

  int internState(const StateInfo& s);
  void expand(int s, std::size_t branchCap);

  const CompiledSpec* spec_;
  int flow_;
  std::vector<StateInfo> states_;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> trans_;
  std::vector<ActionList> actionsByTarget_;  // index = injection total
  std::vector<std::vector<double>> sharePmf_;  // per position in R_f: service-unit pmf
  std::vector<double> arrivalPmf_;
  std::unordered_map<std::uint64_t, int> index_;
  std::uint64_t radix_ = 0;
};

// Exact relative value iteration on the enumerated model.
struct RviSolution {
  std::vector<std::vector<double>> q;       // action values per state
  std::vector<int> greedy;                  // lowest-index minimizer per state
  std::vector<std::vector<int>> optimalSet; // minimizers within tolerance
  double averageCost = 0.0;
  int iterations = 0;
};

RviSolution solveAverageCost(const FlowModel& model, std::span<const double> prices,
                             double tol = 1e-12, int maxIter = 2000000);

// Stationary distribution of the chain induced by a (possibly randomized)
// stationary policy; probabilities of actions per state.
using PolicyFn = std::function<std::vector<double>(int state)>;

std::vector<double> stationaryDistribution(const FlowModel& model, const PolicyFn& policy,
                                           double tol = 1e-14, int maxIter = 2000000);

struct PolicyStats {
  double meanQueueMass = 0.0;            // link queues only
  double meanBacklog = 0.0;
  std::vector<double> meanQueueByLink;   // per position in R_f
  std::vector<double> injectionRate;     // per ingress ordinal
};

PolicyStats evaluatePolicy(const FlowModel& model, const PolicyFn& policy);

inline PolicyFn deterministicPolicy(const FlowModel& model, std::vector<int> actionOf) {
  return [&model, actionOf = std::move(actionOf)](int s) {
    std::vector<double> p(model.actionCount(s), 0.0);
    p[actionOf[s]] = 1.0;
    return p;
  };
}

inline PolicyFn uniformPolicy(const FlowModel& model) {
  return [&model](int s) {
    int n = model.actionCount(s);
    return std::vector<double>(n, 1.0 / n);
  };
}

}  // namespace ovl
