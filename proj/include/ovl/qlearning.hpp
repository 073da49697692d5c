#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ovl/network.hpp"
#include "ovl/rng.hpp"

namespace ovl {

// price-weighted queue mass charged to one flow
inline double holdingCost(std::span<const double> prices, std::span<const int> linkIds,
                          std::span<const int> q) {
  double c = 0.0;
  for (std::size_t i = 0; i < linkIds.size(); i++) c += prices[linkIds[i]] * q[i];
  return c;
}

inline double epsilonAt(long long t, double eps0, double tau) {
  return eps0 / (1.0 + static_cast<double>(t) / tau);
}

// Feasible injection vectors of a flow, grouped by injection total. The slot
// action routes min(available, total cap) packets, so the choice is the split
// across ingress links, never whether to send.
struct ActionCatalog {
  std::vector<int> caps;
  int capTotal = 0;
  std::vector<std::vector<std::vector<int>>> byTarget;  // [total][k] -> u, lex order

  static ActionCatalog build(const CompiledSpec& spec, int flow);
  const std::vector<std::vector<int>>& feasible(int available) const {
    return byTarget[std::min(available, capTotal)];
  }
  int feasibleCount(int available) const {
    return static_cast<int>(feasible(available).size());
  }
};

// Mixed-radix encoding of (backlog, q over R_f), every component in [0, C].
struct StateCodec {
  int components = 0;
  std::uint64_t radix = 0;

  static StateCodec build(const CompiledSpec& spec, int flow);
  std::uint64_t encode(int backlog, std::span<const int> q) const;
  void decode(std::uint64_t code, int& backlog, std::vector<int>& q) const;
};

// Sparse tabular action-value store. Rows are created on first touch; absent
// entries read as zero. Values stay relative by subtracting the reference
// pair's stored value inside every update, which keeps the table bounded.
class QTable {
 public:
  struct Slot {
    double v = 0.0;
    std::uint32_t visits = 0;
  };

  double value(std::uint64_t s, int a) const;
  std::uint32_t visits(std::uint64_t s, int a) const;
  double minValue(std::uint64_t s, int actionCount) const;
  int argminValue(std::uint64_t s, int actionCount) const;  // lowest index wins ties
  void update(std::uint64_t s, int a, int actionCount, double target, double alpha);
  void setSlot(std::uint64_t s, int a, int actionCount, double v, std::uint32_t visits);

  bool hasReference() const { return hasRef_; }
  void setReference(std::uint64_t s, int a, int actionCount);
  double referenceValue() const;
  std::pair<std::uint64_t, int> reference() const { return {refState_, refAction_}; }

  std::size_t stateCount() const { return index_.size(); }
  template <typename Fn>  // Fn(state, action, slot)
  void forEach(Fn&& fn) const {
    for (const auto& [s, loc] : index_) {
      int n = static_cast<int>(loc >> 48);
      std::size_t off = loc & 0xffffffffffffULL;
      for (int a = 0; a < n; a++) fn(s, a, arena_[off + a]);
    }
  }

 private:
  std::size_t row(std::uint64_t s, int actionCount);
  // value packs (actionCount << 48) | arena offset
  std::unordered_map<std::uint64_t, std::uint64_t> index_;
  std::vector<Slot> arena_;
  bool hasRef_ = false;
  std::uint64_t refState_ = 0;
  int refAction_ = 0;
};

struct Transition {
  std::uint64_t prev = 0;
  int action = 0;
  std::uint64_t next = 0;
};

// Per-flow tabular router: one table keyed by the flow's own queue vector
// plus its source backlog. Reads nothing about other flows.
//
// The reference pair is pinned at the first update past referenceDelay unless
// set explicitly. The delay skips the start-up transient: a pair from the
// recurrent class keeps receiving updates, so the subtracted V(ref) tracks
// the average cost instead of freezing at a stale value.
struct FlowLearner {
  StateCodec codec;
  ActionCatalog catalog;
  std::vector<int> linkIds;  // R_f, aligned with decoded q components
  QTable table;
  long long referenceDelay = 1000;
  long long updates = 0;

  static FlowLearner build(const CompiledSpec& spec, int flow);

  // V(q_t,u_t) <- (1-a) V + a [ sum_l lambda_l q_l(t) + min_u V(q_{t+1},u) - V(ref) ]
  // The stage cost comes from the decoded state; when the table key clips the
  // observation, pass the cost of the true queue vector instead.
  void qUpdate(const Transition& tr, std::span<const double> prices, double alpha);
  void qUpdate(const Transition& tr, double stageCost, double alpha);

  // epsilon-greedy over the feasible set; greedy ties break to the
  // lexicographically smallest injection vector
  int selectAction(std::uint64_t state, double epsilon, Rng& rng) const;

  int feasibleCountAt(std::uint64_t state) const;

  void save(std::ostream& os) const;
  void load(std::istream& is);
};

}  // namespace ovl
