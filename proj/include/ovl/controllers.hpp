#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ovl/network.hpp"
#include "ovl/price.hpp"
#include "ovl/qlearning.hpp"
#include "ovl/replicator.hpp"
#include "ovl/schedule.hpp"

namespace ovl {

// Decision-time observation. Controllers read only their declared scope:
//   poc          own-flow queue vectors and source backlogs
//   poc-t        source backlogs and per-tunnel in-flight counts
//   bp           source backlogs
//   obp          source backlogs and per-tunnel in-flight counts
//   random/fixed source backlogs
struct SlotView {
  long long slot = 0;
  const CompiledSpec* net = nullptr;
  const QueueState* queues = nullptr;
  std::span<const int> backlog;   // per flow
  std::span<const int> inflight;  // per tunnel
};

struct SlotFeedback {
  long long slot = 0;
  const CompiledSpec* net = nullptr;
  const QueueState* queues = nullptr;          // end of slot
  std::span<const double> linkQueueNorm;       // ||Q_l|| per link, end of slot
  std::span<const int> inflight;               // per tunnel, end of slot
  std::span<const int> backlog;                // per flow, end of slot
  const StepRecord* record = nullptr;
};

class Controller {
 public:
  virtual ~Controller() = default;
  // fill inject[f] (aligned with flow f's ingress links) for this slot
  virtual void decide(const SlotView& view, std::vector<std::vector<int>>& inject) = 0;
  virtual void observe(const SlotFeedback& fb) { (void)fb; }
  virtual std::span<const double> prices() const { return {}; }
  virtual std::span<const double> budgets() const { return {}; }
  virtual void dumpState(const std::string& dir) const { (void)dir; }
  virtual std::unique_ptr<Controller> clone() const = 0;
};

struct ControllerParams {
  double priceCap = 100.0;   // K
  double totalBudget = 0.0;  // B; required by poc and poc-t
  std::vector<double> budgetsInit;  // optional explicit split (per link / per tunnel)
  double lambdaInit = 1.0;
  std::vector<double> lambdaInitVec;  // optional per-entity initial prices
  StepSchedule alpha = StepSchedule::power(1.0, 0.6);
  StepSchedule beta = StepSchedule::power(1.0, 0.8);
  StepSchedule gamma = StepSchedule::power(1.0, 1.0);
  double eps0 = 0.2;
  double epsTau = 1e4;
  double priceSmoothing = 1.0;  // exponential window weight; 1 = off
  bool pocTLeastPrice = false;  // route by price alone instead of price * in-flight
  // evaluate alpha at the pair's own update counter (asynchronous updates need
  // per-pair step decay for rarely visited states); false uses the slot index
  bool alphaPerPair = true;
  // clip learning-state components at this value instead of the buffer cap
  // (0 = buffer cap). Deep buffers otherwise blow up the table while the
  // routing choice only needs relative fullness. Must be at least the flow's
  // total injection cap so the feasible action set stays exact.
  int stateClip = 0;
  // separate clip for queues on non-ingress links (-1 = same as stateClip;
  // 0 collapses them). Downstream components mostly fragment the table: the
  // link prices already feed downstream congestion into the stage cost.
  int downstreamClip = -1;
};

// ids: poc, poc-t, bp, obp, random-split, fixed-split
std::unique_ptr<Controller> makeController(const std::string& id, const CompiledSpec& spec,
                                           const ControllerParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Price-based overlay controller: per-flow tabular routing learner (fast),
// link prices by projected subgradient (middle), budget split by replicator
// dynamics (slow), advanced in that order once per slot.
class PocController : public Controller {
 public:
  PocController(const CompiledSpec& spec, const ControllerParams& params, std::uint64_t seed);

  void decide(const SlotView& view, std::vector<std::vector<int>>& inject) override;
  void observe(const SlotFeedback& fb) override;
  std::span<const double> prices() const override { return lambda_; }
  std::span<const double> budgets() const override { return budgets_; }
  void dumpState(const std::string& dir) const override;
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<PocController>(*this);
  }

  const FlowLearner& learner(int f) const { return learners_[f]; }
  // greedy action for an arbitrary state, for policy inspection in tests
  int greedyAction(int f, std::uint64_t state) const;

 private:
  std::uint64_t observedState(int f, const QueueState& qs) const;

  const CompiledSpec* net_;
  ControllerParams prm_;
  std::vector<FlowLearner> learners_;
  std::vector<Rng> flowRng_;
  std::vector<std::uint64_t> lastState_;
  std::vector<int> lastAction_;
  std::vector<double> lastCost_;
  std::vector<double> lambda_;
  std::vector<double> budgets_;
  QueueSmoother smoother_;
  long long t_ = 0;
};

// Tunnel-level controller: virtual queues count packets in flight per tunnel;
// each source sends to the tunnel with the least holding cost
// lambda_tau * Qhat_tau. Prices and budgets run per tunnel.
class PocTunnelController : public Controller {
 public:
  PocTunnelController(const CompiledSpec& spec, const ControllerParams& params);

  void decide(const SlotView& view, std::vector<std::vector<int>>& inject) override;
  void observe(const SlotFeedback& fb) override;
  std::span<const double> prices() const override { return lambda_; }
  std::span<const double> budgets() const override { return budgets_; }
  void dumpState(const std::string& dir) const override;
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<PocTunnelController>(*this);
  }

 private:
  const CompiledSpec* net_;
  ControllerParams prm_;
  std::vector<double> lambda_;
  std::vector<double> budgets_;
  long long t_ = 0;
};

// Backpressure on overlay endpoint queues: tunnel weight = source backlog
// minus destination queue (identically zero here); every positive-weight
// tunnel transmits up to its ingress cap, packets permitting.
class BackpressureController : public Controller {
 public:
  BackpressureController(const CompiledSpec& spec, bool countInFlight);
  void decide(const SlotView& view, std::vector<std::vector<int>>& inject) override;
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<BackpressureController>(*this);
  }

 private:
  const CompiledSpec* net_;
  bool countInFlight_;  // obp: weight = backlog - in-flight on the tunnel
};

class RandomSplitController : public Controller {
 public:
  RandomSplitController(const CompiledSpec& spec, std::uint64_t seed);
  void decide(const SlotView& view, std::vector<std::vector<int>>& inject) override;
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<RandomSplitController>(*this);
  }

 private:
  const CompiledSpec* net_;
  Rng rng_;
};

class FixedSplitController : public Controller {
 public:
  explicit FixedSplitController(const CompiledSpec& spec);
  void decide(const SlotView& view, std::vector<std::vector<int>>& inject) override;
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<FixedSplitController>(*this);
  }

 private:
  const CompiledSpec* net_;
  std::vector<int> cursor_;  // per flow round-robin position
};

}  // namespace ovl
