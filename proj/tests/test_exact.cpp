#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "ovl/exact.hpp"

using namespace ovl;
using namespace ovl::testutil;

// deterministic pipeline: inject at t, serve at t, reach the egress queue at
// t, leave at t+1; end-of-slot masses are q_in = 0, q_e = A(t-1), backlog =
// A(t), so the stationary mean link-queue mass equals the arrival rate p
TEST_CASE("pipeline chain has closed-form stationary means") {
  for (double p : {0.3, 0.5, 0.8}) {
    CompiledSpec spec(chainSpec(CountDist::deterministic(1), CountDist::deterministic(1),
                                CountDist::bernoulli(1, p), 30));
    FlowModel model(spec, 0);
    PolicyStats st = evaluatePolicy(model, uniformPolicy(model));
    CHECK(st.meanQueueMass == doctest::Approx(p).epsilon(1e-9));
    CHECK(st.meanBacklog == doctest::Approx(p).epsilon(1e-9));
    CHECK(st.meanQueueByLink[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(st.meanQueueByLink[1] == doctest::Approx(p).epsilon(1e-9));
    CHECK(st.injectionRate[0] == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("transition rows are probability distributions") {
  CompiledSpec spec(parallelSpec(CountDist::bernoulli(1, 0.55), CountDist::bernoulli(1, 0.75),
                                 CountDist::deterministic(2), CountDist::deterministic(1), 2));
  FlowModel model(spec, 0);
  CHECK(model.stateCount() <= 40);
  long long pairs = 0;
  for (int s = 0; s < model.stateCount(); s++) {
    for (int a = 0; a < model.actionCount(s); a++) {
      pairs++;
      double sum = 0.0;
      for (const auto& [nxt, pr] : model.transitions(s, a)) {
        CHECK(pr > 0.0);
        CHECK(nxt >= 0);
        CHECK(nxt < model.stateCount());
        sum += pr;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(pairs <= 81);  // the desk-scale guarantee for this scenario
}

TEST_CASE("stationary distribution is a fixed point") {
  CompiledSpec spec(parallelSpec(CountDist::bernoulli(1, 0.55), CountDist::bernoulli(1, 0.75),
                                 CountDist::deterministic(2), CountDist::deterministic(1), 2));
  FlowModel model(spec, 0);
  auto policy = uniformPolicy(model);
  std::vector<double> mu = stationaryDistribution(model, policy);
  double total = 0.0;
  for (double v : mu) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  std::vector<double> push(mu.size(), 0.0);
  for (int s = 0; s < model.stateCount(); s++) {
    auto ap = policy(s);
    for (int a = 0; a < model.actionCount(s); a++)
      for (const auto& [nxt, pr] : model.transitions(s, a)) push[nxt] += mu[s] * ap[a] * pr;
  }
  for (int s = 0; s < model.stateCount(); s++)
    CHECK(push[s] == doctest::Approx(mu[s]).epsilon(1e-8));
}

TEST_CASE("exact relative value iteration beats one-sided and uniform policies") {
  CompiledSpec spec(parallelSpec(CountDist::bernoulli(1, 0.55), CountDist::bernoulli(1, 0.75),
                                 CountDist::deterministic(2), CountDist::deterministic(1), 2));
  FlowModel model(spec, 0);
  std::vector<double> prices = {1.0, 0.6, 0.1};
  RviSolution sol = solveAverageCost(model, prices);

  auto costOf = [&](const PolicyFn& pol) {
    std::vector<double> mu = stationaryDistribution(model, pol);
    double c = 0.0;
    for (int s = 0; s < model.stateCount(); s++) c += mu[s] * model.stageCost(s, prices);
    return c;
  };

  double optimal = costOf(deterministicPolicy(model, sol.greedy));
  CHECK(optimal == doctest::Approx(sol.averageCost).epsilon(1e-6));

  // every alternative simple policy pays at least as much
  CHECK(costOf(uniformPolicy(model)) >= optimal - 1e-9);
  for (int arm = 0; arm < 2; arm++) {
    PolicyFn oneArm = [&model, arm](int s) {
      // send every packet to one ingress link whenever possible
      const auto& acts = model.actions(s);
      std::vector<double> p(acts.size(), 0.0);
      int best = 0;
      for (std::size_t a = 0; a < acts.size(); a++)
        if (acts[a][arm] > acts[best][arm]) best = static_cast<int>(a);
      p[best] = 1.0;
      return p;
    };
    CHECK(costOf(oneArm) >= optimal - 1e-9);
  }
}

TEST_CASE("rvi greedy policy prefers the cheaper faster path when queues tie") {
  CompiledSpec spec(parallelSpec(CountDist::bernoulli(1, 0.55), CountDist::bernoulli(1, 0.75),
                                 CountDist::deterministic(2), CountDist::deterministic(1), 2));
  FlowModel model(spec, 0);
  // link p2 is both faster (0.75 vs 0.55) and cheaper (0.6 vs 1.0)
  std::vector<double> prices = {1.0, 0.6, 0.1};
  RviSolution sol = solveAverageCost(model, prices);
  for (int s = 0; s < model.stateCount(); s++) {
    if (model.backlogOf(s) == 0) continue;
    auto q = model.queuesOf(s);
    if (q[0] == q[1] && q[1] < spec.bufferCap()) {
      const auto& act = model.actions(s)[sol.greedy[s]];
      CHECK(act[1] == 1);  // all-else-equal states route to p2
    }
  }
}

TEST_CASE("enumeration refuses state spaces beyond the cap") {
  CompiledSpec spec(parallelSpec(CountDist::bernoulli(1, 0.55), CountDist::bernoulli(1, 0.75),
                                 CountDist::deterministic(2), CountDist::bernoulli(2, 0.5), 40));
  CHECK_THROWS_AS(FlowModel(spec, 0, 50), OracleTooLarge);
}
