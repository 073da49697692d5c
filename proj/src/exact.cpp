#include "ovl/exact.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

namespace ovl {

namespace {

// all vectors 0 <= u_i <= caps[i] with sum == target, lexicographic order
void enumerateSplits(const std::vector<int>& caps, int target, std::vector<int>& cur,
                     std::size_t i, std::vector<std::vector<int>>& out) {
  if (i == caps.size()) {
    if (target == 0) out.push_back(cur);
    return;
  }
  int hi = std::min(caps[i], target);
  for (int v = 0; v <= hi; v++) {
    cur[i] = v;
    enumerateSplits(caps, target - v, cur, i + 1, out);
  }
  cur[i] = 0;
}

double binomPmf(int k, int n, double p) {
  if (k < 0 || k > n) return 0.0;
  double coeff = 1.0;
  for (int i = 0; i < k; i++) coeff = coeff * (n - i) / (i + 1);
  return coeff * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

}  // namespace

FlowModel::FlowModel(const CompiledSpec& spec, int flow, std::size_t stateCap,
                     std::size_t branchCap)
    : spec_(&spec), flow_(flow) {
  const CompiledFlow& fl = spec.flow(flow);
  const int C = spec.bufferCap();
  const int comps = 1 + static_cast<int>(fl.links.size());

  radix_ = static_cast<std::uint64_t>(C) + 1;
  double span = std::pow(static_cast<double>(radix_), comps);
  if (span > 9.0e18) throw OracleTooLarge("state encoding exceeds 64 bits");

  // feasible injection splits by total
  actionsByTarget_.resize(fl.injectCapTotal + 1);
  for (int n = 0; n <= fl.injectCapTotal; n++) {
    std::vector<int> cur(fl.ingress.size(), 0);
    enumerateSplits(fl.injectCap, n, cur, 0, actionsByTarget_[n].u);
  }

  // service units offered to this flow per link position:
  // sum over capacity values of Binomial(units; c, mu)
  sharePmf_.resize(fl.links.size());
  for (std::size_t pos = 0; pos < fl.links.size(); pos++) {
    const CompiledLink& l = spec.link(fl.links[pos]);
    std::vector<double> capPmf = l.capacity.pmf();
    double mu = l.flows.size() == 1 ? 1.0 : fl.shareOnLink[pos];
    std::vector<double> pmf(capPmf.size(), 0.0);
    for (int c = 0; c < static_cast<int>(capPmf.size()); c++) {
      if (capPmf[c] == 0.0) continue;
      for (int k = 0; k <= c; k++) pmf[k] += capPmf[c] * binomPmf(k, c, mu);
    }
    while (pmf.size() > 1 && pmf.back() == 0.0) pmf.pop_back();
    sharePmf_[pos] = std::move(pmf);
  }
  arrivalPmf_ = fl.arrivals.pmf();

  // breadth-first closure over all actions
  StateInfo init;
  init.backlog = 0;
  init.q.assign(fl.links.size(), 0);
  internState(init);
  std::size_t head = 0;
  while (head < states_.size()) {
    if (states_.size() > stateCap) throw OracleTooLarge("state space exceeds cap");
    expand(static_cast<int>(head), branchCap);
    head++;
  }
}

int FlowModel::internState(const StateInfo& s) {
  std::uint64_t code = s.backlog;
  for (int v : s.q) code = code * radix_ + static_cast<std::uint64_t>(v);
  auto it = index_.find(code);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(states_.size());
  index_.emplace(code, idx);
  states_.push_back(s);
  trans_.emplace_back();
  return idx;
}

const std::vector<std::vector<int>>& FlowModel::actions(int s) const {
  const CompiledFlow& fl = spec_->flow(flow_);
  int target = std::min(states_[s].backlog, fl.injectCapTotal);
  return actionsByTarget_[target].u;
}

double FlowModel::stageCost(int s, std::span<const double> prices) const {
  const CompiledFlow& fl = spec_->flow(flow_);
  double c = 0.0;
  for (std::size_t pos = 0; pos < fl.links.size(); pos++)
    c += prices[fl.links[pos]] * states_[s].q[pos];
  return c;
}

int FlowModel::queueMass(int s) const {
  int m = 0;
  for (int v : states_[s].q) m += v;
  return m;
}

std::span<const int> FlowModel::flowLinks() const { return spec_->flow(flow_).links; }

void FlowModel::expand(int s, std::size_t branchCap) {
  const CompiledFlow& fl = spec_->flow(flow_);
  const int C = spec_->bufferCap();
  const int nLinks = static_cast<int>(fl.links.size());
  const auto& acts = actions(s);
  trans_[s].resize(acts.size());

  for (std::size_t a = 0; a < acts.size(); a++) {
    // step 1: injections, clipped at the buffer cap (overflow is dropped)
    StateInfo base = states_[s];
    int spent = 0;
    for (std::size_t i = 0; i < fl.ingress.size(); i++) {
      int pos = fl.ingress[i];
      int add = std::min(acts[a][i], C - base.q[pos]);
      base.q[pos] += add;
      spent += acts[a][i];
    }
    base.backlog -= spent;

    std::map<std::uint64_t, double> acc;
    std::size_t branches = 0;

    // step 2: product over links of offered-service outcomes
    std::vector<int> units(nLinks, 0);
    std::function<void(int, double)> overUnits = [&](int pos, double prob) {
      if (pos == nLinks) {
        // apply service and same-slot routing on packet counts; appended
        // packets beyond the cap are dropped, matching min(C, q - D + A)
        std::vector<int> served(nLinks), in(nLinks, 0);
        for (int k = 0; k < nLinks; k++) served[k] = std::min(base.q[k], units[k]);

        std::function<void(int, double)> overRouting = [&](int k, double pr) {
          if (k == nLinks) {
            StateInfo nxt;
            nxt.q.resize(nLinks);
            for (int j = 0; j < nLinks; j++)
              nxt.q[j] = std::min(C, base.q[j] - served[j] + in[j]);
            // step 3: external arrivals into the bounded source buffer
            for (int z = 0; z < static_cast<int>(arrivalPmf_.size()); z++) {
              if (arrivalPmf_[z] == 0.0) continue;
              nxt.backlog = std::min(C, base.backlog + z);
              std::uint64_t code = nxt.backlog;
              for (int v : nxt.q) code = code * radix_ + static_cast<std::uint64_t>(v);
              acc[code] += pr * arrivalPmf_[z];
              if (++branches > branchCap) throw OracleTooLarge("branch count exceeds cap");
            }
            return;
          }
          const CompiledHop& hop = fl.hop[k];
          if (served[k] == 0 || hop.absorb) {
            overRouting(k + 1, pr);
            return;
          }
          if (hop.next.size() == 1) {
            in[hop.next[0]] += served[k];
            overRouting(k + 1, pr);
            in[hop.next[0]] -= served[k];
            return;
          }
          // multinomial split of served[k] packets over the successor links
          std::vector<double> probs(hop.next.size());
          double prev = 0.0;
          for (std::size_t j = 0; j < hop.next.size(); j++) {
            probs[j] = fl.hop[k].cum[j] - prev;
            prev = fl.hop[k].cum[j];
          }
          std::function<void(std::size_t, int, double)> overSplit = [&](std::size_t j,
                                                                        int left, double q) {
            if (j + 1 == hop.next.size()) {
              in[hop.next[j]] += left;
              overRouting(k + 1, pr * q * std::pow(probs[j], left));
              in[hop.next[j]] -= left;
              return;
            }
            double coeff = 1.0;
            for (int m = 0; m <= left; m++) {
              in[hop.next[j]] += m;
              overSplit(j + 1, left - m, q * coeff * std::pow(probs[j], m));
              in[hop.next[j]] -= m;
              coeff = coeff * (left - m) / (m + 1);
            }
          };
          overSplit(0, served[k], 1.0);
        };
        overRouting(0, prob);
        return;
      }
      const auto& pmf = sharePmf_[pos];
      for (int u = 0; u < static_cast<int>(pmf.size()); u++) {
        if (pmf[u] == 0.0) continue;
        units[pos] = u;
        overUnits(pos + 1, prob * pmf[u]);
      }
      units[pos] = 0;
    };
    overUnits(0, 1.0);

    auto& row = trans_[s][a];
    row.reserve(acc.size());
    for (const auto& [code, p] : acc) {
      StateInfo st;
      st.q.resize(nLinks);
      std::uint64_t c = code;
      for (int j = nLinks - 1; j >= 0; j--) {
        st.q[j] = static_cast<int>(c % radix_);
        c /= radix_;
      }
      st.backlog = static_cast<int>(c);
      row.emplace_back(internState(st), p);
    }
  }
}

RviSolution solveAverageCost(const FlowModel& model, std::span<const double> prices,
                             double tol, int maxIter) {
  const int S = model.stateCount();
  RviSolution sol;
  sol.q.resize(S);
  std::vector<double> cost(S), h(S, 0.0);
  for (int s = 0; s < S; s++) {
    sol.q[s].assign(model.actionCount(s), 0.0);
    cost[s] = model.stageCost(s, prices);
  }

  // damped relative Q iteration: Q <- (1-w) Q + w (c + P min Q - Q(ref))
  const double w = 0.6;
  for (sol.iterations = 0; sol.iterations < maxIter; sol.iterations++) {
    for (int s = 0; s < S; s++) {
      double m = sol.q[s][0];
      for (double v : sol.q[s]) m = std::min(m, v);
      h[s] = m;
    }
    double ref = sol.q[0][0];
    double diff = 0.0, scale = 1.0;
    for (int s = 0; s < S; s++) {
      for (int a = 0; a < static_cast<int>(sol.q[s].size()); a++) {
        double e = cost[s] - ref;
        for (const auto& [nxt, p] : model.transitions(s, a)) e += p * h[nxt];
        double upd = (1.0 - w) * sol.q[s][a] + w * e;
        diff = std::max(diff, std::abs(upd - sol.q[s][a]));
        scale = std::max(scale, std::abs(upd));
        sol.q[s][a] = upd;
      }
    }
    if (diff <= tol * scale) break;
  }

  sol.averageCost = sol.q[0][0];
  sol.greedy.resize(S);
  sol.optimalSet.resize(S);
  for (int s = 0; s < S; s++) {
    double m = sol.q[s][0];
    int arg = 0;
    for (int a = 1; a < static_cast<int>(sol.q[s].size()); a++)
      if (sol.q[s][a] < m) {
        m = sol.q[s][a];
        arg = a;
      }
    sol.greedy[s] = arg;
    double tieTol = 1e-8 * (1.0 + std::abs(m));
    for (int a = 0; a < static_cast<int>(sol.q[s].size()); a++)
      if (sol.q[s][a] <= m + tieTol) sol.optimalSet[s].push_back(a);
  }
  return sol;
}

std::vector<double> stationaryDistribution(const FlowModel& model, const PolicyFn& policy,
                                           double tol, int maxIter) {
  const int S = model.stateCount();
  std::vector<std::vector<double>> actionProb(S);
  for (int s = 0; s < S; s++) actionProb[s] = policy(s);

  std::vector<double> mu(S, 0.0), nxt(S);
  mu[model.initialState()] = 1.0;
  for (int it = 0; it < maxIter; it++) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int s = 0; s < S; s++) {
      if (mu[s] == 0.0) continue;
      // lazy chain (half self-loop) to defeat periodicity
      nxt[s] += 0.5 * mu[s];
      for (int a = 0; a < static_cast<int>(actionProb[s].size()); a++) {
        double w = 0.5 * mu[s] * actionProb[s][a];
        if (w == 0.0) continue;
        for (const auto& [t, p] : model.transitions(s, a)) nxt[t] += w * p;
      }
    }
    double diff = 0.0;
    for (int s = 0; s < S; s++) diff += std::abs(nxt[s] - mu[s]);
    mu.swap(nxt);
    if (diff < tol) break;
  }
  return mu;
}

PolicyStats evaluatePolicy(const FlowModel& model, const PolicyFn& policy) {
  std::vector<double> mu = stationaryDistribution(model, policy);
  const CompiledFlow& fl = model.spec().flow(model.flow());
  PolicyStats st;
  st.meanQueueByLink.assign(fl.links.size(), 0.0);
  st.injectionRate.assign(fl.ingress.size(), 0.0);
  for (int s = 0; s < model.stateCount(); s++) {
    if (mu[s] == 0.0) continue;
    st.meanQueueMass += mu[s] * model.queueMass(s);
    st.meanBacklog += mu[s] * model.backlogOf(s);
    auto q = model.queuesOf(s);
    for (std::size_t pos = 0; pos < fl.links.size(); pos++)
      st.meanQueueByLink[pos] += mu[s] * q[pos];
    std::vector<double> ap = policy(s);
    const auto& acts = model.actions(s);
    for (std::size_t a = 0; a < acts.size(); a++)
      for (std::size_t i = 0; i < fl.ingress.size(); i++)
        st.injectionRate[i] += mu[s] * ap[a] * acts[a][i];
  }
  return st;
}

}  // namespace ovl
