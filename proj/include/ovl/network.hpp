#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ovl/dist.hpp"
#include "ovl/rng.hpp"

namespace ovl {

enum class NodeRole { Overlay, Underlay };

struct NodeSpec {
  std::string id;
  NodeRole role = NodeRole::Underlay;
};

struct LinkSpec {
  std::string id;
  std::string tail;  // transmitting node
  std::string head;  // receiving node
  CountDist capacity;
};

struct FlowSpec {
  std::string id;
  std::string source;
  std::string dest;
  CountDist arrivals;
  std::vector<std::string> route;  // links that may carry this flow
  // optional per-ingress-link injection caps, aligned with the ingress links of
  // `route` in link order; empty means ceil(mean capacity) per ingress link
  std::vector<int> injectCaps;
};

// Immutable description of the network: topology, per-link capacity laws, flow
// definitions, fixed capacity-sharing ratios and the randomized routing matrix.
struct NetworkSpec {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<FlowSpec> flows;
  std::map<std::pair<std::string, std::string>, double> sharing;  // (link,flow) -> ratio
  std::map<std::tuple<std::string, std::string, std::string>, double>
      routing;  // (flow, link, next link) -> probability
  int bufferCap = 0;
};

struct ValidationIssue {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool pass() const { return issues.empty(); }
  bool has(const std::string& code) const;
  std::string toString() const;
};

// Report-style check of all model assumptions: ratio sums, routing
// stochasticity, overlay/underlay adjacency, weak connectivity of the
// underlay subgraph, disjoint sources, distribution parameters.
ValidationReport validate(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// Compiled (index-based) view used by the simulator and the oracles.

struct CompiledHop {
  bool absorb = false;        // head of the link is the flow destination
  std::vector<int> next;      // candidate next links (positions in CompiledFlow::links)
  std::vector<double> cum;    // cumulative routing probabilities over `next`
};

struct CompiledLink {
  std::string id;
  int tail = -1;
  int head = -1;
  CountDist capacity;
  std::vector<int> flows;        // flow indices routed over this link
  std::vector<double> share;     // sharing ratio per entry of `flows`
  std::vector<double> shareCum;  // cumulative ratios for randomized rounding
};

struct CompiledFlow {
  std::string id;
  int source = -1;
  int dest = -1;
  CountDist arrivals;
  std::vector<int> links;      // R_f as global link indices, ascending
  std::vector<int> ingress;    // positions in `links` whose tail is the source
  std::vector<int> injectCap;  // per entry of `ingress`
  int injectCapTotal = 0;
  std::vector<CompiledHop> hop;  // per position in `links`
  std::vector<double> shareOnLink;  // mu for this flow per position in `links`
};

// Index-based form of a validated NetworkSpec. Construction throws
// std::invalid_argument when validate() fails.
class CompiledSpec {
 public:
  explicit CompiledSpec(const NetworkSpec& spec);

  const NetworkSpec& raw() const { return raw_; }
  int linkCount() const { return static_cast<int>(links_.size()); }
  int flowCount() const { return static_cast<int>(flows_.size()); }
  int nodeCount() const { return static_cast<int>(overlay_.size()); }
  int bufferCap() const { return raw_.bufferCap; }

  const CompiledLink& link(int l) const { return links_[l]; }
  const CompiledFlow& flow(int f) const { return flows_[f]; }
  bool isOverlay(int node) const { return overlay_[node]; }

  // dense queue indexing over (flow, position in R_f)
  int queueCount() const { return queueCount_; }
  int queueIndex(int f, int pos) const { return queueOffset_[f] + pos; }
  int queueOffsetOf(int f) const { return queueOffset_[f]; }

  // tunnels: one per (flow, ingress link), flow-major
  int tunnelCount() const { return tunnelCount_; }
  int tunnelIndex(int f, int ingressOrdinal) const { return tunnelOffset_[f] + ingressOrdinal; }
  int tunnelOffsetOf(int f) const { return tunnelOffset_[f]; }
  // flow owning a tunnel index
  int tunnelFlow(int tunnel) const { return tunnelFlow_[tunnel]; }

 private:
  NetworkSpec raw_;
  std::vector<CompiledLink> links_;
  std::vector<CompiledFlow> flows_;
  std::vector<bool> overlay_;
  std::vector<int> queueOffset_;
  std::vector<int> tunnelOffset_;
  std::vector<int> tunnelFlow_;
  int queueCount_ = 0;
  int tunnelCount_ = 0;
};

// ---------------------------------------------------------------------------
// Queue state: bounded FIFO buffers per (link, flow) plus a bounded source
// buffer per flow holding packets not yet injected.

struct Packet {
  std::uint32_t entry = 0;   // slot the packet entered the system
  std::uint32_t enq = 0;     // slot it entered the current buffer
  std::uint16_t tunnel = 0;  // tunnel (flow-major index) it was injected on
};

class PacketQueue {
 public:
  void init(int cap) {
    buf_.assign(cap, Packet{});
    head_ = 0;
    count_ = 0;
  }
  int size() const { return count_; }
  int capacity() const { return static_cast<int>(buf_.size()); }
  bool full() const { return count_ == static_cast<int>(buf_.size()); }

  bool push(Packet p) {
    if (full()) return false;
    buf_[(head_ + count_) % buf_.size()] = p;
    count_++;
    return true;
  }
  Packet pop() {
    Packet p = buf_[head_];
    head_ = (head_ + 1) % static_cast<int>(buf_.size());
    count_--;
    return p;
  }
  const Packet& peek(int i) const { return buf_[(head_ + i) % buf_.size()]; }

 private:
  std::vector<Packet> buf_;
  int head_ = 0;
  int count_ = 0;
};

struct QueueState {
  std::vector<PacketQueue> queues;   // by CompiledSpec::queueIndex
  std::vector<PacketQueue> backlog;  // per flow source buffer

  void init(const CompiledSpec& spec);
  int len(int queueIdx) const { return queues[queueIdx].size(); }
  int backlogLen(int f) const { return backlog[f].size(); }
  long long totalLen() const;        // link queues only
  long long totalWithBacklog() const;
};

// Per-slot accounting produced by the dynamics, consumed by metrics, the
// controllers and the oracle cross-checks.
struct StepRecord {
  std::vector<int> preLen;      // queue lengths after injections, before service
  std::vector<int> departures;  // D per queue
  std::vector<int> arrivals;    // routed-in attempts per queue (pre-drop)
  std::vector<int> delivered;          // per flow
  std::vector<double> sojournSum;      // per flow, for packets delivered this slot
  std::vector<int> deliveredTunnel;    // per tunnel
  std::vector<int> droppedTunnel;      // per tunnel: in-flight packets lost in transit
  std::vector<int> injected;           // per tunnel: packets that entered the ingress buffer
  std::vector<int> externalArrivals;   // per flow
  long long droppedLink = 0;     // overflow at link buffers (injection or routing)
  long long droppedBacklog = 0;  // overflow at source buffers

  // optional service trace for order-sensitive tests
  struct PopEvent {
    int queueIdx;
    std::uint32_t enqSlot;
    std::uint32_t popSlot;
  };
  std::vector<PopEvent>* popTrace = nullptr;

  void init(const CompiledSpec& spec);
  void reset();
};

std::vector<int> sampleCapacities(const CompiledSpec& spec, Rng& rng);
std::vector<int> sampleArrivals(const CompiledSpec& spec, Rng& rng);

enum class UnderlayPolicy { StaticSplit, LongestQueueFirst };
UnderlayPolicy underlayPolicyFromString(const std::string& s);
std::string underlayPolicyToString(UnderlayPolicy p);

// Slot step 1: move packets from source buffers into ingress link queues.
// inject[f] is aligned with flow f's ingress link list; entries are clamped to
// the available backlog. Overflowing packets are dropped and counted.
void applyInjections(QueueState& state, const CompiledSpec& spec,
                     const std::vector<std::vector<int>>& inject, std::uint32_t slot,
                     StepRecord& rec);

// Slot step 2+3: sample-independent service with either the static capacity
// split (randomized rounding of the sharing ratios; unused shares are wasted)
// or longest-queue-first reallocation, followed by same-slot routing of the
// served packets. Records per-queue departures/arrivals and deliveries.
void serveAndRoute(QueueState& state, const std::vector<int>& capacities,
                   const CompiledSpec& spec, Rng& rng, UnderlayPolicy policy,
                   std::uint32_t slot, StepRecord& rec);

// Slot step 4: append external arrivals to the flow source buffers.
void appendArrivals(QueueState& state, const CompiledSpec& spec,
                    const std::vector<int>& arrivals, std::uint32_t slot, StepRecord& rec);

}  // namespace ovl
