#include "ovl/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ovl {

namespace {

void splits(const std::vector<int>& caps, int target, std::vector<int>& cur, std::size_t i,
            std::vector<std::vector<int>>& out) {
  if (i == caps.size()) {
    if (target == 0) out.push_back(cur);
    return;
  }
  int hi = std::min(caps[i], target);
  for (int v = 0; v <= hi; v++) {
    cur[i] = v;
    splits(caps, target - v, cur, i + 1, out);
  }
  cur[i] = 0;
}

}  // namespace

ActionCatalog ActionCatalog::build(const CompiledSpec& spec, int flow) {
  const CompiledFlow& fl = spec.flow(flow);
  ActionCatalog c;
  c.caps = fl.injectCap;
  c.capTotal = fl.injectCapTotal;
  c.byTarget.resize(c.capTotal + 1);
  for (int n = 0; n <= c.capTotal; n++) {
    std::vector<int> cur(c.caps.size(), 0);
    splits(c.caps, n, cur, 0, c.byTarget[n]);
  }
  return c;
}

StateCodec StateCodec::build(const CompiledSpec& spec, int flow) {
  StateCodec sc;
  sc.components = 1 + static_cast<int>(spec.flow(flow).links.size());
  sc.radix = static_cast<std::uint64_t>(spec.bufferCap()) + 1;
  double span = std::pow(static_cast<double>(sc.radix), sc.components);
  if (span > 9.0e18)
    throw std::invalid_argument("flow " + spec.flow(flow).id +
                                ": learning state does not fit 64 bits");
  return sc;
}

std::uint64_t StateCodec::encode(int backlog, std::span<const int> q) const {
  std::uint64_t code = static_cast<std::uint64_t>(backlog);
  for (int v : q) code = code * radix + static_cast<std::uint64_t>(v);
  return code;
}

void StateCodec::decode(std::uint64_t code, int& backlog, std::vector<int>& q) const {
  q.resize(components - 1);
  for (int i = components - 2; i >= 0; i--) {
    q[i] = static_cast<int>(code % radix);
    code /= radix;
  }
  backlog = static_cast<int>(code);
}

std::size_t QTable::row(std::uint64_t s, int actionCount) {
  auto it = index_.find(s);
  if (it != index_.end()) return it->second & 0xffffffffffffULL;
  std::size_t off = arena_.size();
  arena_.resize(off + actionCount);
  index_.emplace(s, (static_cast<std::uint64_t>(actionCount) << 48) | off);
  return off;
}

double QTable::value(std::uint64_t s, int a) const {
  auto it = index_.find(s);
  if (it == index_.end()) return 0.0;
  return arena_[(it->second & 0xffffffffffffULL) + a].v;
}

std::uint32_t QTable::visits(std::uint64_t s, int a) const {
  auto it = index_.find(s);
  if (it == index_.end()) return 0;
  return arena_[(it->second & 0xffffffffffffULL) + a].visits;
}

double QTable::minValue(std::uint64_t s, int actionCount) const {
  auto it = index_.find(s);
  if (it == index_.end()) return 0.0;
  std::size_t off = it->second & 0xffffffffffffULL;
  double m = arena_[off].v;
  for (int a = 1; a < actionCount; a++) m = std::min(m, arena_[off + a].v);
  return m;
}

int QTable::argminValue(std::uint64_t s, int actionCount) const {
  auto it = index_.find(s);
  if (it == index_.end()) return 0;
  std::size_t off = it->second & 0xffffffffffffULL;
  int arg = 0;
  double m = arena_[off].v;
  for (int a = 1; a < actionCount; a++)
    if (arena_[off + a].v < m) {
      m = arena_[off + a].v;
      arg = a;
    }
  return arg;
}

void QTable::update(std::uint64_t s, int a, int actionCount, double target, double alpha) {
  Slot& slot = arena_[row(s, actionCount) + a];
  slot.v = (1.0 - alpha) * slot.v + alpha * target;
  slot.visits++;
}

void QTable::setSlot(std::uint64_t s, int a, int actionCount, double v, std::uint32_t visits) {
  Slot& slot = arena_[row(s, actionCount) + a];
  slot.v = v;
  slot.visits = visits;
}

void QTable::setReference(std::uint64_t s, int a, int actionCount) {
  row(s, actionCount);  // make sure the pair exists
  refState_ = s;
  refAction_ = a;
  hasRef_ = true;
}

double QTable::referenceValue() const {
  if (!hasRef_) return 0.0;
  return value(refState_, refAction_);
}

FlowLearner FlowLearner::build(const CompiledSpec& spec, int flow) {
  FlowLearner fl;
  fl.codec = StateCodec::build(spec, flow);
  fl.catalog = ActionCatalog::build(spec, flow);
  const auto& links = spec.flow(flow).links;
  fl.linkIds.assign(links.begin(), links.end());
  return fl;
}

int FlowLearner::feasibleCountAt(std::uint64_t state) const {
  int backlog = 0;
  static thread_local std::vector<int> q;
  codec.decode(state, backlog, q);
  return catalog.feasibleCount(backlog);
}

void FlowLearner::qUpdate(const Transition& tr, std::span<const double> prices, double alpha) {
  if (alpha == 0.0) return;
  int backlogPrev = 0;
  static thread_local std::vector<int> qPrev;
  codec.decode(tr.prev, backlogPrev, qPrev);
  qUpdate(tr, holdingCost(prices, linkIds, qPrev), alpha);
}

void FlowLearner::qUpdate(const Transition& tr, double stageCost, double alpha) {
  if (alpha == 0.0) return;
  int backlogPrev = 0, backlogNext = 0;
  static thread_local std::vector<int> qPrev, qNext;
  codec.decode(tr.prev, backlogPrev, qPrev);
  codec.decode(tr.next, backlogNext, qNext);

  int prevCount = catalog.feasibleCount(backlogPrev);
  updates++;
  if (!table.hasReference() && updates > referenceDelay)
    table.setReference(tr.prev, tr.action, prevCount);

  double target = stageCost + table.minValue(tr.next, catalog.feasibleCount(backlogNext)) -
                  table.referenceValue();
  table.update(tr.prev, tr.action, prevCount, target, alpha);
}

int FlowLearner::selectAction(std::uint64_t state, double epsilon, Rng& rng) const {
  int backlog = 0;
  static thread_local std::vector<int> q;
  codec.decode(state, backlog, q);
  int n = catalog.feasibleCount(backlog);
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.below(n);
  return table.argminValue(state, n);
}

void FlowLearner::save(std::ostream& os) const {
  os << "state,action,value,visits\n";
  std::vector<std::tuple<std::uint64_t, int, QTable::Slot>> rows;
  table.forEach([&rows](std::uint64_t s, int a, const QTable::Slot& slot) {
    rows.emplace_back(s, a, slot);
  });
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
  });
  int backlog = 0;
  std::vector<int> q;
  for (const auto& [s, a, slot] : rows) {
    codec.decode(s, backlog, q);
    os << backlog;
    for (int v : q) os << ';' << v;
    os << ',';
    const auto& u = catalog.feasible(backlog)[a];
    for (std::size_t i = 0; i < u.size(); i++) os << (i ? ";" : "") << u[i];
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", slot.v);
    os << ',' << buf << ',' << slot.visits << '\n';
  }
}

void FlowLearner::load(std::istream& is) {
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::replace(line.begin(), line.end(), ';', ' ');
    std::istringstream ls(line);
    int backlog;
    ls >> backlog;
    std::vector<int> q(codec.components - 1);
    for (int& v : q) ls >> v;
    std::vector<int> u(catalog.caps.size());
    for (int& v : u) ls >> v;
    double value;
    std::uint32_t visits;
    ls >> value >> visits;
    if (!ls) throw std::runtime_error("malformed value-table row: " + line);

    std::uint64_t s = codec.encode(backlog, q);
    const auto& feas = catalog.feasible(backlog);
    auto it = std::find(feas.begin(), feas.end(), u);
    if (it == feas.end()) throw std::runtime_error("infeasible action in value table");
    int a = static_cast<int>(it - feas.begin());
    int n = static_cast<int>(feas.size());
    table.setSlot(s, a, n, value, visits);
  }
}

}  // namespace ovl
