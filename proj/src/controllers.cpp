#include "ovl/controllers.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace ovl {

namespace {

void writeVector(const std::string& path, const std::string& header,
                 std::span<const double> v) {
  std::ofstream os(path);
  os << header << "\n";
  char buf[64];
  for (std::size_t i = 0; i < v.size(); i++) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << i << "," << buf << "\n";
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// POC

PocController::PocController(const CompiledSpec& spec, const ControllerParams& params,
                             std::uint64_t seed)
    : net_(&spec), prm_(params) {
  if (prm_.totalBudget <= 0.0) throw std::invalid_argument("poc: total budget must be > 0");
  if (prm_.lambdaInit <= 0.0) throw std::invalid_argument("poc: initial price must be > 0");
  for (int f = 0; f < spec.flowCount(); f++) {
    learners_.push_back(FlowLearner::build(spec, f));
    flowRng_.emplace_back(mixSeed(seed, 0x71 + f));
    if (prm_.stateClip > 0 && prm_.stateClip < spec.flow(f).injectCapTotal)
      throw std::invalid_argument("poc: state clip below the flow injection cap");
  }
  lastState_.assign(spec.flowCount(), 0);
  lastAction_.assign(spec.flowCount(), 0);
  lastCost_.assign(spec.flowCount(), 0.0);
  if (!prm_.lambdaInitVec.empty()) {
    if (static_cast<int>(prm_.lambdaInitVec.size()) != spec.linkCount())
      throw std::invalid_argument("poc: initial price vector size must match link count");
    lambda_ = prm_.lambdaInitVec;
  } else {
    lambda_.assign(spec.linkCount(), prm_.lambdaInit);
  }
  if (!prm_.budgetsInit.empty()) {
    if (static_cast<int>(prm_.budgetsInit.size()) != spec.linkCount())
      throw std::invalid_argument("poc: budget split size must match link count");
    budgets_ = prm_.budgetsInit;
    double sum = std::accumulate(budgets_.begin(), budgets_.end(), 0.0);
    if (std::abs(sum - prm_.totalBudget) > 1e-9)
      throw std::invalid_argument("poc: budget split must sum to the total budget");
  } else {
    budgets_.assign(spec.linkCount(), prm_.totalBudget / spec.linkCount());
  }
  smoother_.weight = prm_.priceSmoothing;
}

std::uint64_t PocController::observedState(int f, const QueueState& qs) const {
  static thread_local std::vector<int> q;
  const CompiledFlow& fl = net_->flow(f);
  int clip = prm_.stateClip > 0 ? prm_.stateClip : net_->bufferCap();
  int downClip = prm_.downstreamClip < 0 ? clip : prm_.downstreamClip;
  q.resize(fl.links.size());
  std::size_t nextIngress = 0;
  for (std::size_t pos = 0; pos < fl.links.size(); pos++) {
    bool isIngress = nextIngress < fl.ingress.size() &&
                     fl.ingress[nextIngress] == static_cast<int>(pos);
    if (isIngress) nextIngress++;
    int c = isIngress ? clip : downClip;
    q[pos] = std::min(qs.len(net_->queueIndex(f, static_cast<int>(pos))), c);
  }
  return learners_[f].codec.encode(std::min(qs.backlogLen(f), clip), q);
}

void PocController::decide(const SlotView& view, std::vector<std::vector<int>>& inject) {
  double eps = epsilonAt(t_, prm_.eps0, prm_.epsTau);
  for (int f = 0; f < net_->flowCount(); f++) {
    std::uint64_t s = observedState(f, *view.queues);
    int a = learners_[f].selectAction(s, eps, flowRng_[f]);
    lastState_[f] = s;
    lastAction_[f] = a;
    double cost = 0.0;  // true holding cost at decision time
    const CompiledFlow& fl = net_->flow(f);
    for (std::size_t pos = 0; pos < fl.links.size(); pos++)
      cost += lambda_[fl.links[pos]] *
              view.queues->len(net_->queueIndex(f, static_cast<int>(pos)));
    lastCost_[f] = cost;
    inject[f] = learners_[f].catalog.feasible(view.backlog[f])[a];
  }
}

void PocController::observe(const SlotFeedback& fb) {
  // fast layer: value updates at the decision-time prices; the stage cost uses
  // the true queue lengths so it keeps growing past any observation clip
  for (int f = 0; f < net_->flowCount(); f++) {
    Transition tr{lastState_[f], lastAction_[f], observedState(f, *fb.queues)};
    double alpha = prm_.alphaPerPair
                       ? prm_.alpha.at(learners_[f].table.visits(tr.prev, tr.action))
                       : prm_.alpha.at(t_);
    learners_[f].qUpdate(tr, lastCost_[f], alpha);
  }
  // middle layer: subgradient prices on the queue/budget mismatch
  double beta = prm_.beta.at(t_);
  static thread_local std::vector<double> lambdaPrev;
  lambdaPrev.assign(lambda_.begin(), lambda_.end());
  if (beta != 0.0) {
    smoother_.observe(fb.linkQueueNorm);
    priceUpdate(lambda_, smoother_.value, budgets_, beta, prm_.priceCap);
  }
  // slow layer: replicator on the budget split, fed the pre-update prices
  double gamma = prm_.gamma.at(t_);
  if (gamma != 0.0) replicatorStep(budgets_, lambdaPrev, gamma, prm_.totalBudget);
  t_++;
}

int PocController::greedyAction(int f, std::uint64_t state) const {
  return learners_[f].table.argminValue(state, learners_[f].feasibleCountAt(state));
}

void PocController::dumpState(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  writeVector(dir + "/prices.csv", "link,lambda", lambda_);
  writeVector(dir + "/budgets.csv", "link,budget", budgets_);
  for (int f = 0; f < net_->flowCount(); f++) {
    std::ofstream os(dir + "/qtable_" + net_->flow(f).id + ".csv");
    learners_[f].save(os);
  }
}

// ---------------------------------------------------------------------------
// POC-T

PocTunnelController::PocTunnelController(const CompiledSpec& spec,
                                         const ControllerParams& params)
    : net_(&spec), prm_(params) {
  if (prm_.totalBudget <= 0.0) throw std::invalid_argument("poc-t: total budget must be > 0");
  if (prm_.lambdaInit <= 0.0) throw std::invalid_argument("poc-t: initial price must be > 0");
  int T = spec.tunnelCount();
  if (!prm_.lambdaInitVec.empty()) {
    if (static_cast<int>(prm_.lambdaInitVec.size()) != T)
      throw std::invalid_argument("poc-t: initial price vector size must match tunnel count");
    lambda_ = prm_.lambdaInitVec;
  } else {
    lambda_.assign(T, prm_.lambdaInit);
  }
  if (!prm_.budgetsInit.empty()) {
    if (static_cast<int>(prm_.budgetsInit.size()) != T)
      throw std::invalid_argument("poc-t: budget split size must match tunnel count");
    budgets_ = prm_.budgetsInit;
  } else {
    budgets_.assign(T, prm_.totalBudget / T);
  }
}

void PocTunnelController::decide(const SlotView& view, std::vector<std::vector<int>>& inject) {
  for (int f = 0; f < net_->flowCount(); f++) {
    const CompiledFlow& fl = net_->flow(f);
    int avail = view.backlog[f];
    if (avail <= 0 || fl.ingress.empty()) continue;
    int best = -1;
    double bestScore = 0.0;
    for (std::size_t i = 0; i < fl.ingress.size(); i++) {
      int tunnel = net_->tunnelIndex(f, static_cast<int>(i));
      double score = prm_.pocTLeastPrice
                         ? lambda_[tunnel]
                         : lambda_[tunnel] * static_cast<double>(view.inflight[tunnel]);
      if (best < 0 || score < bestScore) {
        best = static_cast<int>(i);
        bestScore = score;
      }
    }
    inject[f][best] = std::min(avail, fl.injectCap[best]);
  }
}

void PocTunnelController::observe(const SlotFeedback& fb) {
  for (std::size_t tau = 0; tau < lambda_.size(); tau++)
    if (fb.inflight[tau] < 0) throw std::logic_error("negative tunnel virtual queue");

  static thread_local std::vector<double> qhat;
  qhat.assign(fb.inflight.begin(), fb.inflight.end());
  static thread_local std::vector<double> lambdaPrev;
  lambdaPrev.assign(lambda_.begin(), lambda_.end());
  double beta = prm_.beta.at(t_);
  if (beta != 0.0) priceUpdate(lambda_, qhat, budgets_, beta, prm_.priceCap);
  double gamma = prm_.gamma.at(t_);
  if (gamma != 0.0) replicatorStep(budgets_, lambdaPrev, gamma, prm_.totalBudget);
  t_++;
}

void PocTunnelController::dumpState(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  writeVector(dir + "/tunnel_prices.csv", "tunnel,lambda", lambda_);
  writeVector(dir + "/tunnel_budgets.csv", "tunnel,budget", budgets_);
}

// ---------------------------------------------------------------------------
// BP / OBP

BackpressureController::BackpressureController(const CompiledSpec& spec, bool countInFlight)
    : net_(&spec), countInFlight_(countInFlight) {}

void BackpressureController::decide(const SlotView& view,
                                    std::vector<std::vector<int>>& inject) {
  for (int f = 0; f < net_->flowCount(); f++) {
    const CompiledFlow& fl = net_->flow(f);
    int avail = view.backlog[f];
    if (avail <= 0) continue;

    // weight per tunnel: source queue minus destination queue (zero), with
    // obp also charging the packets already in flight on the tunnel
    std::vector<std::pair<double, int>> order;
    for (std::size_t i = 0; i < fl.ingress.size(); i++) {
      double w = avail;
      if (countInFlight_) w -= view.inflight[net_->tunnelIndex(f, static_cast<int>(i))];
      order.emplace_back(-w, static_cast<int>(i));
    }
    std::sort(order.begin(), order.end());
    int remaining = avail;
    for (const auto& [negw, i] : order) {
      if (-negw <= 0.0 || remaining <= 0) break;
      int x = std::min(remaining, fl.injectCap[i]);
      inject[f][i] = x;
      remaining -= x;
    }
  }
}

// ---------------------------------------------------------------------------
// split baselines

RandomSplitController::RandomSplitController(const CompiledSpec& spec, std::uint64_t seed)
    : net_(&spec), rng_(mixSeed(seed, 0x8d)) {}

void RandomSplitController::decide(const SlotView& view,
                                   std::vector<std::vector<int>>& inject) {
  for (int f = 0; f < net_->flowCount(); f++) {
    const CompiledFlow& fl = net_->flow(f);
    int avail = view.backlog[f];
    static thread_local std::vector<int> open;
    open.clear();
    for (std::size_t i = 0; i < fl.ingress.size(); i++)
      if (fl.injectCap[i] > 0) open.push_back(static_cast<int>(i));
    while (avail > 0 && !open.empty()) {
      int pick = open[rng_.below(static_cast<int>(open.size()))];
      inject[f][pick]++;
      avail--;
      if (inject[f][pick] >= fl.injectCap[pick])
        open.erase(std::find(open.begin(), open.end(), pick));
    }
  }
}

FixedSplitController::FixedSplitController(const CompiledSpec& spec)
    : net_(&spec), cursor_(spec.flowCount(), 0) {}

void FixedSplitController::decide(const SlotView& view,
                                  std::vector<std::vector<int>>& inject) {
  for (int f = 0; f < net_->flowCount(); f++) {
    const CompiledFlow& fl = net_->flow(f);
    int avail = view.backlog[f];
    int n = static_cast<int>(fl.ingress.size());
    if (n == 0) continue;
    int spent = 0, scanned = 0;
    while (avail > 0 && scanned < n) {
      int i = cursor_[f] % n;
      if (inject[f][i] < fl.injectCap[i]) {
        inject[f][i]++;
        avail--;
        spent++;
        scanned = 0;
      } else {
        scanned++;
      }
      cursor_[f] = (cursor_[f] + 1) % n;
    }
    (void)spent;
  }
}

std::unique_ptr<Controller> makeController(const std::string& id, const CompiledSpec& spec,
                                           const ControllerParams& params,
                                           std::uint64_t seed) {
  if (id == "poc") return std::make_unique<PocController>(spec, params, seed);
  if (id == "poc-t") return std::make_unique<PocTunnelController>(spec, params);
  if (id == "bp") return std::make_unique<BackpressureController>(spec, false);
  if (id == "obp") return std::make_unique<BackpressureController>(spec, true);
  if (id == "random-split") return std::make_unique<RandomSplitController>(spec, seed);
  if (id == "fixed-split") return std::make_unique<FixedSplitController>(spec);
  throw std::invalid_argument("unknown controller id: " + id);
}

}  // namespace ovl
