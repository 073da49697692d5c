#include "ovl/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ovl {

namespace {
constexpr double kSumTol = 1e-12;
}

bool ValidationReport::has(const std::string& code) const {
  for (const auto& i : issues)
    if (i.code == code) return true;
  return false;
}

std::string ValidationReport::toString() const {
  std::ostringstream os;
  if (issues.empty()) {
    os << "pass";
    return os.str();
  }
  os << "fail (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s") << ")";
  for (const auto& i : issues) os << "\n  [" << i.code << "] " << i.message;
  return os.str();
}

ValidationReport validate(const NetworkSpec& spec) {
  ValidationReport rep;
  auto add = [&rep](const std::string& code, const std::string& msg) {
    rep.issues.push_back({code, msg});
  };

  if (spec.bufferCap < 1) add("bad-buffer-cap", "buffer cap must be at least 1");

  std::unordered_map<std::string, int> nodeIdx;
  for (int i = 0; i < static_cast<int>(spec.nodes.size()); i++) {
    if (!nodeIdx.emplace(spec.nodes[i].id, i).second)
      add("duplicate-id", "duplicate node id " + spec.nodes[i].id);
  }
  auto isOverlay = [&](const std::string& id) {
    auto it = nodeIdx.find(id);
    return it != nodeIdx.end() && spec.nodes[it->second].role == NodeRole::Overlay;
  };
  auto isUnderlay = [&](const std::string& id) {
    auto it = nodeIdx.find(id);
    return it != nodeIdx.end() && spec.nodes[it->second].role == NodeRole::Underlay;
  };

  std::unordered_map<std::string, int> linkIdx;
  for (int i = 0; i < static_cast<int>(spec.links.size()); i++) {
    const auto& l = spec.links[i];
    if (!linkIdx.emplace(l.id, i).second) add("duplicate-id", "duplicate link id " + l.id);
    if (!nodeIdx.count(l.tail)) add("unknown-node", "link " + l.id + " tail " + l.tail);
    if (!nodeIdx.count(l.head)) add("unknown-node", "link " + l.id + " head " + l.head);
    if (!l.capacity.valid())
      add("bad-distribution", "link " + l.id + " capacity " + l.capacity.describe());
    if (isOverlay(l.tail) && isOverlay(l.head))
      add("overlay-adjacency", "link " + l.id + " joins two overlay nodes");
  }

  std::unordered_map<std::string, int> flowIdx;
  std::set<std::string> sources;
  for (int i = 0; i < static_cast<int>(spec.flows.size()); i++) {
    const auto& f = spec.flows[i];
    if (!flowIdx.emplace(f.id, i).second) add("duplicate-id", "duplicate flow id " + f.id);
    if (!nodeIdx.count(f.source) || !nodeIdx.count(f.dest)) {
      add("unknown-node", "flow " + f.id + " endpoints");
      continue;
    }
    if (!isOverlay(f.source))
      add("endpoint-role", "flow " + f.id + " source " + f.source + " is not overlay");
    if (!isOverlay(f.dest))
      add("endpoint-role", "flow " + f.id + " dest " + f.dest + " is not overlay");
    if (!sources.insert(f.source).second)
      add("shared-source", "flows share source node " + f.source);
    if (!f.arrivals.valid())
      add("bad-distribution", "flow " + f.id + " arrivals " + f.arrivals.describe());

    std::set<std::string> routeSet;
    int ingressCount = 0;
    for (const auto& lid : f.route) {
      auto it = linkIdx.find(lid);
      if (it == linkIdx.end()) {
        add("unknown-link", "flow " + f.id + " routes over unknown link " + lid);
        continue;
      }
      if (!routeSet.insert(lid).second)
        add("duplicate-id", "flow " + f.id + " lists link " + lid + " twice");
      const auto& l = spec.links[it->second];
      if (l.tail == f.source) ingressCount++;
      // a flow may touch overlay nodes only at its own endpoints
      if (isOverlay(l.tail) && l.tail != f.source)
        add("foreign-overlay", "flow " + f.id + " uses link " + lid +
                                   " leaving foreign overlay node " + l.tail);
      if (isOverlay(l.head) && l.head != f.dest)
        add("foreign-overlay", "flow " + f.id + " uses link " + lid +
                                   " entering foreign overlay node " + l.head);
    }
    if (ingressCount == 0)
      add("no-ingress", "flow " + f.id + " has no ingress link out of " + f.source);
  }

  // sharing ratios: links carrying at least one flow must have ratios summing
  // to one over exactly the flows routed on them
  for (int li = 0; li < static_cast<int>(spec.links.size()); li++) {
    const auto& l = spec.links[li];
    double sum = 0.0;
    bool used = false;
    for (const auto& f : spec.flows) {
      bool onRoute = std::find(f.route.begin(), f.route.end(), l.id) != f.route.end();
      auto it = spec.sharing.find({l.id, f.id});
      double mu = it == spec.sharing.end() ? 0.0 : it->second;
      if (mu < 0.0 || mu > 1.0)
        add("bad-share", "ratio " + std::to_string(mu) + " on (" + l.id + "," + f.id + ")");
      if (onRoute) {
        used = true;
        sum += mu;
      } else if (mu != 0.0) {
        add("share-off-route",
            "nonzero ratio on (" + l.id + "," + f.id + ") but link not in the flow route");
      }
    }
    if (used && std::abs(sum - 1.0) > kSumTol)
      add("ratio-sum", "link " + l.id + " ratios sum to " + std::to_string(sum));
  }
  for (const auto& [key, mu] : spec.sharing) {
    (void)mu;
    if (!linkIdx.count(key.first)) add("unknown-link", "sharing entry for link " + key.first);
    if (!flowIdx.count(key.second)) add("unknown-flow", "sharing entry for flow " + key.second);
  }

  // routing rows: stochastic over on-route, adjacent successors; terminal
  // links (head == destination) must have no outgoing entries
  for (const auto& f : spec.flows) {
    for (const auto& lid : f.route) {
      auto it = linkIdx.find(lid);
      if (it == linkIdx.end()) continue;
      const auto& l = spec.links[it->second];
      bool terminal = l.head == f.dest;
      double sum = 0.0;
      int rows = 0;
      for (const auto& [key, p] : spec.routing) {
        if (std::get<0>(key) != f.id || std::get<1>(key) != lid) continue;
        rows++;
        const auto& nid = std::get<2>(key);
        if (p < 0.0 || p > 1.0)
          add("bad-probability", "routing (" + f.id + "," + lid + "," + nid + ")");
        auto nit = linkIdx.find(nid);
        if (nit == linkIdx.end()) {
          add("unknown-link", "routing target " + nid);
          continue;
        }
        if (std::find(f.route.begin(), f.route.end(), nid) == f.route.end())
          add("routing-off-route", "flow " + f.id + " routed from " + lid +
                                       " to off-route link " + nid);
        if (spec.links[nit->second].tail != l.head)
          add("routing-adjacency", "flow " + f.id + ": " + lid + " -> " + nid +
                                       " does not follow the graph");
        sum += p;
      }
      if (terminal && rows > 0)
        add("routing-from-terminal", "flow " + f.id + " has routing out of terminal link " + lid);
      if (!terminal && std::abs(sum - 1.0) > kSumTol)
        add("routing-sum", "flow " + f.id + " link " + lid + " routing rows sum to " +
                               std::to_string(sum));
    }
  }

  // weak connectivity of the subgraph induced by underlay nodes
  {
    std::vector<std::string> un;
    for (const auto& n : spec.nodes)
      if (n.role == NodeRole::Underlay) un.push_back(n.id);
    if (!un.empty()) {
      std::unordered_map<std::string, int> comp;
      for (int i = 0; i < static_cast<int>(un.size()); i++) comp[un[i]] = i;
      std::vector<int> parent(un.size());
      std::iota(parent.begin(), parent.end(), 0);
      std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
      };
      for (const auto& l : spec.links) {
        if (isUnderlay(l.tail) && isUnderlay(l.head))
          parent[find(comp[l.tail])] = find(comp[l.head]);
      }
      std::set<int> roots;
      for (int i = 0; i < static_cast<int>(un.size()); i++) roots.insert(find(i));
      if (roots.size() > 1)
        add("underlay-disconnected",
            "underlay subgraph has " + std::to_string(roots.size()) + " components");
    }
  }

  return rep;
}

CompiledSpec::CompiledSpec(const NetworkSpec& spec) : raw_(spec) {
  ValidationReport rep = validate(spec);
  if (!rep.pass()) throw std::invalid_argument("invalid network spec: " + rep.toString());

  std::unordered_map<std::string, int> nodeIdx, linkIdx;
  overlay_.resize(spec.nodes.size());
  for (int i = 0; i < static_cast<int>(spec.nodes.size()); i++) {
    nodeIdx[spec.nodes[i].id] = i;
    overlay_[i] = spec.nodes[i].role == NodeRole::Overlay;
  }
  links_.resize(spec.links.size());
  for (int i = 0; i < static_cast<int>(spec.links.size()); i++) {
    const auto& l = spec.links[i];
    linkIdx[l.id] = i;
    links_[i].id = l.id;
    links_[i].tail = nodeIdx[l.tail];
    links_[i].head = nodeIdx[l.head];
    links_[i].capacity = l.capacity;
  }

  flows_.resize(spec.flows.size());
  queueOffset_.assign(spec.flows.size(), 0);
  tunnelOffset_.assign(spec.flows.size(), 0);
  for (int fi = 0; fi < static_cast<int>(spec.flows.size()); fi++) {
    const auto& fs = spec.flows[fi];
    CompiledFlow& f = flows_[fi];
    f.id = fs.id;
    f.source = nodeIdx[fs.source];
    f.dest = nodeIdx[fs.dest];
    f.arrivals = fs.arrivals;
    for (const auto& lid : fs.route) f.links.push_back(linkIdx[lid]);
    std::sort(f.links.begin(), f.links.end());

    std::unordered_map<int, int> posOf;
    for (int pos = 0; pos < static_cast<int>(f.links.size()); pos++)
      posOf[f.links[pos]] = pos;

    f.hop.resize(f.links.size());
    f.shareOnLink.resize(f.links.size(), 0.0);
    for (int pos = 0; pos < static_cast<int>(f.links.size()); pos++) {
      int li = f.links[pos];
      const auto& ls = spec.links[li];
      if (ls.tail == fs.source) f.ingress.push_back(pos);
      auto shareIt = spec.sharing.find({ls.id, fs.id});
      f.shareOnLink[pos] = shareIt == spec.sharing.end() ? 0.0 : shareIt->second;

      CompiledHop& hop = f.hop[pos];
      hop.absorb = ls.head == fs.dest;
      if (!hop.absorb) {
        double cum = 0.0;
        for (const auto& [key, p] : spec.routing) {
          if (std::get<0>(key) != fs.id || std::get<1>(key) != ls.id) continue;
          hop.next.push_back(posOf[linkIdx[std::get<2>(key)]]);
          cum += p;
          hop.cum.push_back(cum);
        }
        if (!hop.cum.empty()) hop.cum.back() = 1.0;
      }
    }

    // injection caps per ingress link: explicit, else ceil(mean capacity)
    for (std::size_t i = 0; i < f.ingress.size(); i++) {
      int cap;
      if (!fs.injectCaps.empty()) {
        if (fs.injectCaps.size() != f.ingress.size())
          throw std::invalid_argument("flow " + fs.id + ": inject_caps size mismatch");
        cap = fs.injectCaps[i];
      } else {
        cap = static_cast<int>(std::ceil(links_[f.links[f.ingress[i]]].capacity.mean()));
      }
      if (cap < 0) throw std::invalid_argument("flow " + fs.id + ": negative inject cap");
      f.injectCap.push_back(cap);
      f.injectCapTotal += cap;
    }

    queueOffset_[fi] = queueCount_;
    queueCount_ += static_cast<int>(f.links.size());
    tunnelOffset_[fi] = tunnelCount_;
    tunnelCount_ += static_cast<int>(f.ingress.size());
    for (std::size_t i = 0; i < f.ingress.size(); i++) tunnelFlow_.push_back(fi);
  }

  // per-link flow lists and rounding tables, in flow-index order
  for (int fi = 0; fi < static_cast<int>(flows_.size()); fi++) {
    const CompiledFlow& f = flows_[fi];
    for (int pos = 0; pos < static_cast<int>(f.links.size()); pos++) {
      CompiledLink& l = links_[f.links[pos]];
      l.flows.push_back(fi);
      l.share.push_back(f.shareOnLink[pos]);
    }
  }
  for (auto& l : links_) {
    double cum = 0.0;
    for (double s : l.share) {
      cum += s;
      l.shareCum.push_back(cum);
    }
    if (!l.shareCum.empty()) l.shareCum.back() = 1.0;
  }
}

void QueueState::init(const CompiledSpec& spec) {
  queues.resize(spec.queueCount());
  for (auto& q : queues) q.init(spec.bufferCap());
  backlog.resize(spec.flowCount());
  for (auto& b : backlog) b.init(spec.bufferCap());
}

long long QueueState::totalLen() const {
  long long n = 0;
  for (const auto& q : queues) n += q.size();
  return n;
}

long long QueueState::totalWithBacklog() const {
  long long n = totalLen();
  for (const auto& b : backlog) n += b.size();
  return n;
}

void StepRecord::init(const CompiledSpec& spec) {
  preLen.assign(spec.queueCount(), 0);
  departures.assign(spec.queueCount(), 0);
  arrivals.assign(spec.queueCount(), 0);
  delivered.assign(spec.flowCount(), 0);
  sojournSum.assign(spec.flowCount(), 0.0);
  deliveredTunnel.assign(spec.tunnelCount(), 0);
  droppedTunnel.assign(spec.tunnelCount(), 0);
  injected.assign(spec.tunnelCount(), 0);
  externalArrivals.assign(spec.flowCount(), 0);
  reset();
}

void StepRecord::reset() {
  std::fill(preLen.begin(), preLen.end(), 0);
  std::fill(departures.begin(), departures.end(), 0);
  std::fill(arrivals.begin(), arrivals.end(), 0);
  std::fill(delivered.begin(), delivered.end(), 0);
  std::fill(sojournSum.begin(), sojournSum.end(), 0.0);
  std::fill(deliveredTunnel.begin(), deliveredTunnel.end(), 0);
  std::fill(droppedTunnel.begin(), droppedTunnel.end(), 0);
  std::fill(injected.begin(), injected.end(), 0);
  std::fill(externalArrivals.begin(), externalArrivals.end(), 0);
  droppedLink = 0;
  droppedBacklog = 0;
}

std::vector<int> sampleCapacities(const CompiledSpec& spec, Rng& rng) {
  std::vector<int> out(spec.linkCount());
  for (int l = 0; l < spec.linkCount(); l++) out[l] = spec.link(l).capacity.sample(rng);
  return out;
}

std::vector<int> sampleArrivals(const CompiledSpec& spec, Rng& rng) {
  std::vector<int> out(spec.flowCount());
  for (int f = 0; f < spec.flowCount(); f++) out[f] = spec.flow(f).arrivals.sample(rng);
  return out;
}

UnderlayPolicy underlayPolicyFromString(const std::string& s) {
  if (s == "static-split") return UnderlayPolicy::StaticSplit;
  if (s == "lqf") return UnderlayPolicy::LongestQueueFirst;
  throw std::invalid_argument("unknown underlay policy: " + s);
}

std::string underlayPolicyToString(UnderlayPolicy p) {
  return p == UnderlayPolicy::StaticSplit ? "static-split" : "lqf";
}

void applyInjections(QueueState& state, const CompiledSpec& spec,
                     const std::vector<std::vector<int>>& inject, std::uint32_t slot,
                     StepRecord& rec) {
  for (int f = 0; f < spec.flowCount(); f++) {
    const CompiledFlow& fl = spec.flow(f);
    for (std::size_t i = 0; i < fl.ingress.size(); i++) {
      int want = i < inject[f].size() ? inject[f][i] : 0;
      int tunnel = spec.tunnelIndex(f, static_cast<int>(i));
      int qIdx = spec.queueIndex(f, fl.ingress[i]);
      for (int k = 0; k < want && state.backlog[f].size() > 0; k++) {
        Packet p = state.backlog[f].pop();
        p.enq = slot;
        p.tunnel = static_cast<std::uint16_t>(tunnel);
        if (state.queues[qIdx].push(p)) {
          rec.injected[tunnel]++;
        } else {
          rec.droppedLink++;  // never entered flight, so no tunnel decrement
        }
      }
    }
  }
}

namespace {

// service unit counts per flow sharing a link
void splitCapacity(const CompiledLink& link, const QueueState& state, const CompiledSpec& spec,
                   int linkIdx, int capacity, UnderlayPolicy policy, Rng& rng,
                   std::vector<int>& units) {
  units.assign(link.flows.size(), 0);
  if (capacity <= 0 || link.flows.empty()) return;
  if (policy == UnderlayPolicy::StaticSplit) {
    if (link.flows.size() == 1) {
      units[0] = capacity;
      return;
    }
    // each service unit lands on flow f with probability mu_{l,f},
    // independently; empty queues waste their share
    for (int u = 0; u < capacity; u++) units[rng.categorical(link.shareCum)]++;
    return;
  }
  // longest queue first, one unit at a time, ties to the lower flow position
  std::vector<int> remain(link.flows.size());
  for (std::size_t i = 0; i < link.flows.size(); i++) {
    int f = link.flows[i];
    const CompiledFlow& fl = spec.flow(f);
    int pos = static_cast<int>(std::lower_bound(fl.links.begin(), fl.links.end(), linkIdx) -
                               fl.links.begin());
    remain[i] = state.len(spec.queueIndex(f, pos));
  }
  for (int u = 0; u < capacity; u++) {
    int best = -1;
    for (std::size_t i = 0; i < remain.size(); i++)
      if (remain[i] > 0 && (best < 0 || remain[i] > remain[best])) best = static_cast<int>(i);
    if (best < 0) break;
    units[best]++;
    remain[best]--;
  }
}

}  // namespace

void serveAndRoute(QueueState& state, const std::vector<int>& capacities,
                   const CompiledSpec& spec, Rng& rng, UnderlayPolicy policy,
                   std::uint32_t slot, StepRecord& rec) {
  for (int q = 0; q < spec.queueCount(); q++) rec.preLen[q] = state.len(q);

  // all links serve simultaneously on the pre-service contents; packets routed
  // onward become visible only after every link has served
  struct Staged {
    int queueIdx;
    Packet pkt;
  };
  static thread_local std::vector<Staged> staging;
  staging.clear();
  static thread_local std::vector<int> units;

  for (int li = 0; li < spec.linkCount(); li++) {
    const CompiledLink& link = spec.link(li);
    if (link.flows.empty() || capacities[li] <= 0) continue;
    splitCapacity(link, state, spec, li, capacities[li], policy, rng, units);
    for (std::size_t i = 0; i < link.flows.size(); i++) {
      if (units[i] <= 0) continue;
      int f = link.flows[i];
      const CompiledFlow& fl = spec.flow(f);
      int pos = static_cast<int>(std::lower_bound(fl.links.begin(), fl.links.end(), li) -
                                 fl.links.begin());
      int qIdx = spec.queueIndex(f, pos);
      int serve = std::min(units[i], state.len(qIdx));
      const CompiledHop& hop = fl.hop[pos];
      for (int k = 0; k < serve; k++) {
        Packet p = state.queues[qIdx].pop();
        rec.departures[qIdx]++;
        if (rec.popTrace) rec.popTrace->push_back({qIdx, p.enq, slot});
        if (hop.absorb) {
          rec.delivered[f]++;
          rec.sojournSum[f] += static_cast<double>(slot - p.entry);
          rec.deliveredTunnel[p.tunnel]++;
        } else {
          int nxt = hop.next.size() == 1 ? hop.next[0]
                                         : hop.next[rng.categorical(hop.cum)];
          p.enq = slot;
          staging.push_back({spec.queueIndex(f, nxt), p});
        }
      }
    }
  }

  for (const Staged& s : staging) {
    rec.arrivals[s.queueIdx]++;
    if (!state.queues[s.queueIdx].push(s.pkt)) {
      rec.droppedLink++;
      rec.droppedTunnel[s.pkt.tunnel]++;
    }
  }
}

void appendArrivals(QueueState& state, const CompiledSpec& spec,
                    const std::vector<int>& arrivals, std::uint32_t slot, StepRecord& rec) {
  for (int f = 0; f < spec.flowCount(); f++) {
    rec.externalArrivals[f] += arrivals[f];
    for (int k = 0; k < arrivals[f]; k++) {
      Packet p;
      p.entry = slot;
      p.enq = slot;
      p.tunnel = 0;
      if (!state.backlog[f].push(p)) rec.droppedBacklog++;
    }
  }
}

}  // namespace ovl
