#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "helpers.hpp"
#include "ovl/controllers.hpp"
#include "ovl/scenario.hpp"
#include "ovl/sim.hpp"

using namespace ovl;
using namespace ovl::testutil;

namespace {

NetworkSpec toyParallel(double p1 = 0.55, double p2 = 0.75) {
  return parallelSpec(CountDist::bernoulli(1, p1), CountDist::bernoulli(1, p2),
                      CountDist::deterministic(2), CountDist::deterministic(1), 2);
}

ControllerParams pocDefaults() {
  ControllerParams p;
  p.totalBudget = 2.4;
  return p;
}

std::vector<std::vector<int>> freshInject(const CompiledSpec& spec) {
  std::vector<std::vector<int>> inject(spec.flowCount());
  for (int f = 0; f < spec.flowCount(); f++)
    inject[f].assign(spec.flow(f).ingress.size(), 0);
  return inject;
}

}  // namespace

TEST_CASE("unknown controller ids are rejected") {
  CompiledSpec spec(toyParallel());
  CHECK_THROWS_AS(makeController("dijkstra", spec, pocDefaults(), 1), std::invalid_argument);
}

// step-size conditions of the layered scheme, decided symbolically for the
// supported schedule family: square-summable but not summable, and each
// slower layer vanishing relative to the faster one
TEST_CASE("default and preset step schedules satisfy the timescale conditions") {
  ControllerParams d;
  CHECK(d.alpha.summableConditions());
  CHECK(d.beta.summableConditions());
  CHECK(d.gamma.summableConditions());
  CHECK(timescaleSeparated(d.alpha, d.beta));
  CHECK(timescaleSeparated(d.beta, d.gamma));
  CHECK_FALSE(timescaleSeparated(d.beta, d.alpha));

  // the 1/t with 1/(t log t) pairing
  StepSchedule invT = StepSchedule::power(1.0, 1.0);
  StepSchedule invTLog = StepSchedule::harmonicLog(1.0);
  CHECK(invT.summableConditions());
  CHECK(invTLog.summableConditions());
  CHECK(timescaleSeparated(invT, invTLog));
  CHECK_FALSE(timescaleSeparated(invTLog, invT));

  // degenerate schedules: a frozen layer separates from anything, a live
  // constant does not decay at all
  CHECK(timescaleSeparated(d.alpha, StepSchedule::zero()));
  CHECK_FALSE(StepSchedule::constant(0.5).summableConditions());
  CHECK_FALSE(StepSchedule::power(1.0, 0.4).summableConditions());  // not square-summable
  CHECK_FALSE(StepSchedule::power(1.0, 1.2).summableConditions());  // sums converge
}

TEST_CASE("a zero gamma schedule freezes the budget split") {
  CompiledSpec spec(toyParallel());
  ControllerParams p = pocDefaults();
  p.gamma = StepSchedule::zero();
  PocController ctrl(spec, p, 7);
  std::vector<double> before(ctrl.budgets().begin(), ctrl.budgets().end());
  SimConfig cfg;
  cfg.horizon = 20000;
  cfg.seed = 7;
  cfg.controller = "poc";
  runSimulation(spec, cfg, ctrl);
  std::vector<double> after(ctrl.budgets().begin(), ctrl.budgets().end());
  CHECK(after == before);

  // with the default schedule the split moves
  PocController live(spec, pocDefaults(), 7);
  runSimulation(spec, cfg, live);
  std::vector<double> moved(live.budgets().begin(), live.budgets().end());
  CHECK(moved != before);
}

// with beta = gamma = 0 and fixed prices, poc is exactly the tabular routing
// learner; a hand-rolled loop over the same dynamics reproduces it bit for bit
TEST_CASE("frozen poc equals a standalone learner loop bit for bit") {
  CompiledSpec spec(toyParallel());
  std::vector<double> prices = {1.0, 0.6, 0.1};
  const std::uint64_t seed = 99;
  const long long T = 30000;

  ControllerParams p = pocDefaults();
  p.lambdaInitVec = prices;
  p.beta = StepSchedule::zero();
  p.gamma = StepSchedule::zero();
  PocController ctrl(spec, p, mixSeed(seed, 0xC0));
  SimConfig cfg;
  cfg.horizon = T;
  cfg.seed = seed;
  cfg.controller = "poc";
  runSimulation(spec, cfg, ctrl);

  // standalone learner over a hand-driven slot loop
  FlowLearner fl = FlowLearner::build(spec, 0);
  Rng actRng(mixSeed(mixSeed(seed, 0xC0), 0x71));  // poc's per-flow stream
  Rng envRng(mixSeed(seed, 0x0E));                 // engine stream
  QueueState state;
  state.init(spec);
  StepRecord rec;
  rec.init(spec);
  std::vector<int> q(3);
  auto encode = [&]() {
    for (int pos = 0; pos < 3; pos++) q[pos] = state.len(spec.queueIndex(0, pos));
    return fl.codec.encode(state.backlogLen(0), q);
  };
  for (long long t = 0; t < T; t++) {
    std::uint64_t s = encode();
    int a = fl.selectAction(s, epsilonAt(t, p.eps0, p.epsTau), actRng);
    std::vector<std::vector<int>> inject = {fl.catalog.feasible(state.backlogLen(0))[a]};
    rec.reset();
    applyInjections(state, spec, inject, t, rec);
    std::vector<int> caps(spec.linkCount());
    for (int l = 0; l < spec.linkCount(); l++) caps[l] = spec.link(l).capacity.sample(envRng);
    serveAndRoute(state, caps, spec, envRng, UnderlayPolicy::StaticSplit, t, rec);
    std::vector<int> arr(1);
    arr[0] = spec.flow(0).arrivals.sample(envRng);
    appendArrivals(state, spec, arr, t, rec);
    fl.qUpdate({s, a, encode()}, prices, p.alpha.at(fl.table.visits(s, a)));
  }

  // identical tables, including visit counts
  const FlowLearner& trained = ctrl.learner(0);
  CHECK(trained.table.stateCount() == fl.table.stateCount());
  bool identical = true;
  fl.table.forEach([&](std::uint64_t s, int a, const QTable::Slot& slot) {
    identical = identical && trained.table.value(s, a) == slot.v &&
                trained.table.visits(s, a) == slot.visits;
  });
  CHECK(identical);
}

TEST_CASE("poc decisions read only the flow's own queues and backlog") {
  Scenario sc = loadScenario(scenarioPath("fig2.json"));
  CompiledSpec spec(sc.net);
  ControllerParams p = pocDefaults();
  p.totalBudget = 6.0;
  PocController base(spec, p, 3);

  QueueState stateA;
  stateA.init(spec);
  // give flow 1 some backlog and queue contents
  for (int k = 0; k < 3; k++) {
    Packet pk;
    pk.entry = 0;
    stateA.backlog[0].push(pk);
    stateA.queues[spec.queueIndex(0, 2)].push(pk);
  }
  QueueState stateB = stateA;
  // perturb flow 2's queues and backlog only
  for (int k = 0; k < 5; k++) {
    Packet pk;
    pk.entry = 0;
    stateB.backlog[1].push(pk);
    stateB.queues[spec.queueIndex(1, 1)].push(pk);
  }

  std::vector<int> backlogA = {3, 0}, backlogB = {3, 5};
  std::vector<int> inflight(spec.tunnelCount(), 0);

  auto cloneA = base.clone();
  auto cloneB = base.clone();
  auto injectA = freshInject(spec), injectB = freshInject(spec);
  SlotView viewA{0, &spec, &stateA, backlogA, inflight};
  SlotView viewB{0, &spec, &stateB, backlogB, inflight};
  cloneA->decide(viewA, injectA);
  cloneB->decide(viewB, injectB);
  CHECK(injectA[0] == injectB[0]);  // flow 1 unaffected by flow 2's state
}

TEST_CASE("poc-t decisions never inspect underlay queues") {
  Scenario sc = loadScenario(scenarioPath("fig2.json"));
  CompiledSpec spec(sc.net);
  ControllerParams p = pocDefaults();
  p.totalBudget = 6.0;
  PocTunnelController base(spec, p);

  QueueState stateA, stateB;
  stateA.init(spec);
  stateB.init(spec);
  for (int k = 0; k < 7; k++) {
    Packet pk;
    pk.entry = 0;
    stateB.queues[spec.queueIndex(0, 3)].push(pk);  // deep underlay perturbation
    stateB.queues[spec.queueIndex(1, 2)].push(pk);
  }
  std::vector<int> backlog = {4, 2};
  std::vector<int> inflight = {1, 0, 2, 5};

  auto cloneA = base.clone();
  auto cloneB = base.clone();
  auto injectA = freshInject(spec), injectB = freshInject(spec);
  SlotView viewA{0, &spec, &stateA, backlog, inflight};
  SlotView viewB{0, &spec, &stateB, backlog, inflight};
  cloneA->decide(viewA, injectA);
  cloneB->decide(viewB, injectB);
  CHECK(injectA == injectB);
}

TEST_CASE("single-tunnel poc-t equals fixed-split and keeps tunnel books closed") {
  NetworkSpec raw = chainSpec(CountDist::bernoulli(1, 0.7), CountDist::deterministic(1),
                              CountDist::bernoulli(1, 0.5), 10);
  CompiledSpec spec(raw);
  SimConfig cfg;
  cfg.horizon = 100000;
  cfg.seed = 21;
  cfg.controller = "poc-t";
  cfg.ctrl.totalBudget = 1.0;
  MetricsLog a = runSimulation(spec, cfg);
  cfg.controller = "fixed-split";
  MetricsLog b = runSimulation(spec, cfg);
  CHECK(a.deliveredTotal[0] == b.deliveredTotal[0]);
  CHECK(a.injectedTunnel[0] - a.deliveredTunnel[0] - a.droppedTunnel[0] ==
        a.finalInflight[0]);
}

TEST_CASE("identical tunnels settle into an even split") {
  CompiledSpec spec(toyParallel(0.6, 0.6));
  SimConfig cfg;
  cfg.horizon = 1000000;
  cfg.seed = 17;
  cfg.controller = "poc-t";
  cfg.ctrl.totalBudget = 2.0;
  MetricsLog log = runSimulation(spec, cfg);
  double inj0 = static_cast<double>(log.injectedTunnel[0]);
  double injAll = inj0 + log.injectedTunnel[1];
  CHECK(std::abs(inj0 / injAll - 0.5) < 0.05);
}

TEST_CASE("poc-t shifts load toward the faster tunnel and beats a random split") {
  CompiledSpec spec(toyParallel(0.8, 0.4));  // tunnel p1 serves twice as fast
  SimConfig cfg;
  cfg.horizon = 1000000;
  cfg.seed = 29;
  cfg.ctrl.totalBudget = 2.0;
  cfg.controller = "poc-t";
  MetricsLog tunnel = runSimulation(spec, cfg);
  cfg.controller = "random-split";
  MetricsLog uniform = runSimulation(spec, cfg);

  double shareFast = static_cast<double>(tunnel.injectedTunnel[0]) /
                     (tunnel.injectedTunnel[0] + tunnel.injectedTunnel[1]);
  CHECK(shareFast > 0.55);
  CHECK(tunnel.avgDelayAllFlows() <= uniform.avgDelayAllFlows());
}

TEST_CASE("backpressure holds off when source queues are empty") {
  CompiledSpec spec(sharedLinkSpec(0.5, CountDist::deterministic(1), 10));
  auto ctrl = makeController("bp", spec, {}, 1);
  QueueState state;
  state.init(spec);
  std::vector<int> backlog = {0, 0};
  std::vector<int> inflight(spec.tunnelCount(), 0);
  auto inject = freshInject(spec);
  SlotView view{0, &spec, &state, backlog, inflight};
  ctrl->decide(view, inject);
  for (const auto& u : inject)
    for (int v : u) CHECK(v == 0);
}

TEST_CASE("backpressure serves the backlogged flow and idles the empty one") {
  CompiledSpec spec(sharedLinkSpec(0.5, CountDist::deterministic(1), 10));
  auto ctrl = makeController("bp", spec, {}, 1);
  QueueState state;
  state.init(spec);
  std::vector<int> backlog = {4, 0};
  std::vector<int> inflight(spec.tunnelCount(), 0);
  auto inject = freshInject(spec);
  SlotView view{0, &spec, &state, backlog, inflight};
  ctrl->decide(view, inject);
  CHECK(std::accumulate(inject[0].begin(), inject[0].end(), 0) > 0);
  CHECK(std::accumulate(inject[1].begin(), inject[1].end(), 0) == 0);
}

TEST_CASE("bp gives symmetric flows symmetric long-run throughput") {
  Scenario sc = loadScenario(scenarioPath("fig2.json"));
  NetworkSpec raw = withArrivalRate(sc.net, 0.6);
  CompiledSpec spec(raw);
  SimConfig cfg;
  cfg.horizon = 400000;
  cfg.seed = 5;
  cfg.controller = "bp";
  MetricsLog log = runSimulation(spec, cfg);
  double t1 = log.throughput(0), t2 = log.throughput(1);
  CHECK(std::abs(t1 - t2) / std::max(t1, t2) < 0.05);
}

TEST_CASE("obp reduces to bp when nothing is in flight") {
  CompiledSpec spec(toyParallel());
  auto bp = makeController("bp", spec, {}, 1);
  auto obp = makeController("obp", spec, {}, 1);
  QueueState state;
  state.init(spec);
  std::vector<int> backlog = {2};
  std::vector<int> inflight = {0, 0};
  auto injectA = freshInject(spec), injectB = freshInject(spec);
  SlotView view{0, &spec, &state, backlog, inflight};
  bp->decide(view, injectA);
  obp->decide(view, injectB);
  CHECK(injectA == injectB);
}

TEST_CASE("obp starves a tunnel that is saturated with in-flight packets") {
  CompiledSpec spec(toyParallel());
  auto bp = makeController("bp", spec, {}, 1);
  auto obp = makeController("obp", spec, {}, 1);
  QueueState state;
  state.init(spec);
  std::vector<int> backlog = {2};
  std::vector<int> inflight = {10, 0};  // tunnel 0 loaded
  auto injectA = freshInject(spec), injectB = freshInject(spec);
  SlotView view{0, &spec, &state, backlog, inflight};
  bp->decide(view, injectA);
  obp->decide(view, injectB);
  CHECK(injectB[0][0] < injectA[0][0]);
  CHECK(injectB[0][0] == 0);
}

TEST_CASE("obp keeps total occupancy at or below bp under load") {
  Scenario sc = loadScenario(scenarioPath("fig2.json"));
  NetworkSpec raw = withArrivalRate(sc.net, 0.8);
  double bpSum = 0.0, obpSum = 0.0;
  for (int s = 0; s < 10; s++) {
    CompiledSpec spec(raw);
    SimConfig cfg;
    cfg.horizon = 150000;
    cfg.seed = 1000 + s;
    cfg.controller = "bp";
    MetricsLog bpLog = runSimulation(spec, cfg);
    cfg.controller = "obp";
    MetricsLog obpLog = runSimulation(spec, cfg);
    auto occupancy = [](const MetricsLog& log) {
      double backlog = 0.0;
      for (int f = 0; f < log.flowCount; f++) backlog += log.flowBacklogSum[f];
      return log.avgTotalQueue() + backlog / log.measuredSlots();
    };
    bpSum += occupancy(bpLog);
    obpSum += occupancy(obpLog);
  }
  CHECK(obpSum <= bpSum);
}

TEST_CASE("every controller respects injection caps and availability") {
  CompiledSpec spec(toyParallel());
  QueueState state;
  state.init(spec);
  Rng rng(8);
  for (const char* id : {"poc", "poc-t", "bp", "obp", "random-split", "fixed-split"}) {
    ControllerParams p = pocDefaults();
    auto ctrl = makeController(id, spec, p, 11);
    for (int rep = 0; rep < 300; rep++) {
      int avail = rng.below(8);
      std::vector<int> backlog = {avail};
      std::vector<int> inflight = {rng.below(5), rng.below(5)};
      auto inject = freshInject(spec);
      SlotView view{rep, &spec, &state, backlog, inflight};
      ctrl->decide(view, inject);
      int total = 0;
      for (std::size_t i = 0; i < inject[0].size(); i++) {
        CHECK(inject[0][i] >= 0);
        CHECK(inject[0][i] <= spec.flow(0).injectCap[i]);
        total += inject[0][i];
      }
      CHECK(total <= avail);
    }
  }
}
