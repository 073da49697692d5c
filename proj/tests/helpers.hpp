#pragma once

// shared builders for the test suites

#include <cmath>
#include <string>
#include <vector>

#include "ovl/network.hpp"
#include "ovl/rng.hpp"

namespace ovl::testutil {

inline std::string scenarioPath(const std::string& name) {
  return std::string(OVL_SCENARIO_DIR) + "/" + name;
}

// s -> u -> d with one ingress and one egress link
inline NetworkSpec chainSpec(CountDist ingressCap, CountDist egressCap, CountDist arrivals,
                             int bufferCap) {
  NetworkSpec spec;
  spec.bufferCap = bufferCap;
  spec.nodes = {{"s", NodeRole::Overlay}, {"u", NodeRole::Underlay}, {"d", NodeRole::Overlay}};
  spec.links = {{"in", "s", "u", ingressCap}, {"e", "u", "d", egressCap}};
  FlowSpec f;
  f.id = "f1";
  f.source = "s";
  f.dest = "d";
  f.arrivals = arrivals;
  f.route = {"in", "e"};
  spec.flows = {f};
  spec.sharing[{"in", "f1"}] = 1.0;
  spec.sharing[{"e", "f1"}] = 1.0;
  spec.routing[{"f1", "in", "e"}] = 1.0;
  return spec;
}

// s -> u (two parallel ingress links) -> d, single flow
inline NetworkSpec parallelSpec(CountDist cap1, CountDist cap2, CountDist egressCap,
                                CountDist arrivals, int bufferCap) {
  NetworkSpec spec;
  spec.bufferCap = bufferCap;
  spec.nodes = {{"s", NodeRole::Overlay}, {"u", NodeRole::Underlay}, {"d", NodeRole::Overlay}};
  spec.links = {{"p1", "s", "u", cap1}, {"p2", "s", "u", cap2}, {"e", "u", "d", egressCap}};
  FlowSpec f;
  f.id = "f1";
  f.source = "s";
  f.dest = "d";
  f.arrivals = arrivals;
  f.route = {"p1", "p2", "e"};
  spec.flows = {f};
  spec.sharing[{"p1", "f1"}] = 1.0;
  spec.sharing[{"p2", "f1"}] = 1.0;
  spec.sharing[{"e", "f1"}] = 1.0;
  spec.routing[{"f1", "p1", "e"}] = 1.0;
  spec.routing[{"f1", "p2", "e"}] = 1.0;
  return spec;
}

// two flows sharing one middle link: s1->u->w->d1, s2->u->w->d2
inline NetworkSpec sharedLinkSpec(double mu1, CountDist midCap, int bufferCap) {
  NetworkSpec spec;
  spec.bufferCap = bufferCap;
  spec.nodes = {{"s1", NodeRole::Overlay}, {"s2", NodeRole::Overlay},
                {"d1", NodeRole::Overlay}, {"d2", NodeRole::Overlay},
                {"u", NodeRole::Underlay}, {"w", NodeRole::Underlay}};
  spec.links = {{"i1", "s1", "u", CountDist::deterministic(1)},
                {"i2", "s2", "u", CountDist::deterministic(1)},
                {"m", "u", "w", midCap},
                {"e1", "w", "d1", CountDist::deterministic(2)},
                {"e2", "w", "d2", CountDist::deterministic(2)}};
  for (int i = 0; i < 2; i++) {
    FlowSpec f;
    f.id = "f" + std::to_string(i + 1);
    f.source = i == 0 ? "s1" : "s2";
    f.dest = i == 0 ? "d1" : "d2";
    f.arrivals = CountDist::deterministic(0);
    f.route = {i == 0 ? "i1" : "i2", "m", i == 0 ? "e1" : "e2"};
    spec.flows.push_back(f);
  }
  spec.sharing[{"i1", "f1"}] = 1.0;
  spec.sharing[{"i2", "f2"}] = 1.0;
  spec.sharing[{"m", "f1"}] = mu1;
  spec.sharing[{"m", "f2"}] = 1.0 - mu1;
  spec.sharing[{"e1", "f1"}] = 1.0;
  spec.sharing[{"e2", "f2"}] = 1.0;
  spec.routing[{"f1", "i1", "m"}] = 1.0;
  spec.routing[{"f1", "m", "e1"}] = 1.0;
  spec.routing[{"f2", "i2", "m"}] = 1.0;
  spec.routing[{"f2", "m", "e2"}] = 1.0;
  return spec;
}

// random valid multi-flow topology for fuzzing: flows enter a shared underlay
// chain at random points and leave through private (possibly split) egress
inline NetworkSpec randomSpec(Rng& rng) {
  NetworkSpec spec;
  spec.bufferCap = 3 + rng.below(6);
  int chainLen = 1 + rng.below(3);  // underlay nodes u0..u_{chainLen}
  for (int i = 0; i <= chainLen; i++)
    spec.nodes.push_back({"u" + std::to_string(i), NodeRole::Underlay});
  auto randomCap = [&]() {
    if (rng.bernoulli(0.4)) return CountDist::deterministic(rng.below(3));
    return CountDist::bernoulli(1 + rng.below(2), 0.2 + 0.6 * rng.uniform());
  };
  for (int i = 0; i < chainLen; i++)
    spec.links.push_back({"t" + std::to_string(i), "u" + std::to_string(i),
                          "u" + std::to_string(i + 1), randomCap()});

  int F = 1 + rng.below(3);
  std::vector<std::vector<int>> flowsOnTransit(chainLen);
  for (int f = 0; f < F; f++) {
    std::string fid = "f" + std::to_string(f);
    std::string src = "s" + std::to_string(f), dst = "d" + std::to_string(f);
    spec.nodes.push_back({src, NodeRole::Overlay});
    spec.nodes.push_back({dst, NodeRole::Overlay});
    int entry = rng.below(chainLen + 1);
    int exit = entry + rng.below(chainLen + 1 - entry);

    FlowSpec fs;
    fs.id = fid;
    fs.source = src;
    fs.dest = dst;
    fs.arrivals = rng.bernoulli(0.3) ? CountDist::deterministic(rng.below(2))
                                     : CountDist::bernoulli(2, 0.5 * rng.uniform());

    int nIngress = 1 + rng.below(2);
    std::vector<std::string> ingressIds;
    for (int k = 0; k < nIngress; k++) {
      std::string lid = fid + "_in" + std::to_string(k);
      spec.links.push_back({lid, src, "u" + std::to_string(entry), randomCap()});
      spec.sharing[{lid, fid}] = 1.0;
      ingressIds.push_back(lid);
      fs.route.push_back(lid);
    }
    for (int j = entry; j < exit; j++) {
      fs.route.push_back("t" + std::to_string(j));
      flowsOnTransit[j].push_back(f);
    }
    bool splitEgress = rng.bernoulli(0.5);
    std::string eg0 = fid + "_eg0", eg1 = fid + "_eg1";
    spec.links.push_back({eg0, "u" + std::to_string(exit), dst, randomCap()});
    spec.sharing[{eg0, fid}] = 1.0;
    fs.route.push_back(eg0);
    if (splitEgress) {
      spec.links.push_back({eg1, "u" + std::to_string(exit), dst, randomCap()});
      spec.sharing[{eg1, fid}] = 1.0;
      fs.route.push_back(eg1);
    }

    // hop table: ingress -> first transit or egress; transit -> next
    double q = splitEgress ? 0.25 + 0.5 * rng.uniform() : 1.0;
    q = std::round(q * 64.0) / 64.0;  // exactly representable, sums cleanly
    auto routeOut = [&](const std::string& from) {
      spec.routing[{fid, from, eg0}] = q;
      if (splitEgress) spec.routing[{fid, from, eg1}] = 1.0 - q;
    };
    for (const auto& lid : ingressIds) {
      if (entry == exit)
        routeOut(lid);
      else
        spec.routing[{fid, lid, "t" + std::to_string(entry)}] = 1.0;
    }
    for (int j = entry; j < exit; j++) {
      std::string from = "t" + std::to_string(j);
      if (j + 1 == exit)
        routeOut(from);
      else
        spec.routing[{fid, from, "t" + std::to_string(j + 1)}] = 1.0;
    }
    spec.flows.push_back(fs);
  }

  // exact unit ratios on shared transit links
  for (int j = 0; j < chainLen; j++) {
    const auto& fl = flowsOnTransit[j];
    if (fl.empty()) continue;
    double left = 1.0;
    for (std::size_t k = 0; k < fl.size(); k++) {
      std::string fid = "f" + std::to_string(fl[k]);
      double mu;
      if (k + 1 == fl.size()) {
        mu = left;
      } else {
        mu = std::round(left * (0.2 + 0.6 * rng.uniform()) * 64.0) / 64.0;
        mu = std::min(mu, left);
      }
      spec.sharing[{"t" + std::to_string(j), fid}] = mu;
      left -= mu;
    }
  }
  return spec;
}

}  // namespace ovl::testutil
