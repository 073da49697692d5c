#include "ovl/sim.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ovl {

void SimConfig::check() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (resolvedStride() < 1) throw std::invalid_argument("stride must be at least 1");
  if (resolvedWarmup() >= horizon) throw std::invalid_argument("warmup must be below horizon");
}

MetricsLog runSimulation(const CompiledSpec& spec, const SimConfig& cfg) {
  auto ctrl = makeController(cfg.controller, spec, cfg.ctrl, mixSeed(cfg.seed, 0xC0));
  return runSimulation(spec, cfg, *ctrl);
}

MetricsLog runSimulation(const CompiledSpec& spec, const SimConfig& cfg, Controller& ctrl) {
  cfg.check();
  const int L = spec.linkCount(), F = spec.flowCount(), TN = spec.tunnelCount();

  Rng envRng(mixSeed(cfg.seed, 0x0E));
  QueueState state;
  state.init(spec);
  StepRecord rec;
  rec.init(spec);

  MetricsLog log;
  log.start(spec, cfg.horizon, cfg.resolvedWarmup(), cfg.resolvedStride(), cfg.seed,
            cfg.controller, underlayPolicyToString(cfg.policy));

  std::vector<std::vector<int>> inject(F);
  std::vector<int> backlogView(F), inflight(TN, 0), capacities(L), arrivals(F);
  std::vector<double> linkNorm(L);
  std::vector<int> flowQueueTotal(F);

  // queue indices grouped per link for the norm snapshot
  std::vector<std::vector<int>> linkQueues(L);
  for (int f = 0; f < F; f++) {
    const CompiledFlow& fl = spec.flow(f);
    for (int pos = 0; pos < static_cast<int>(fl.links.size()); pos++)
      linkQueues[fl.links[pos]].push_back(spec.queueIndex(f, pos));
  }

  for (long long t = 0; t < cfg.horizon; t++) {
    rec.reset();
    for (int f = 0; f < F; f++) {
      backlogView[f] = state.backlogLen(f);
      inject[f].assign(spec.flow(f).ingress.size(), 0);
    }

    SlotView view;
    view.slot = t;
    view.net = &spec;
    view.queues = &state;
    view.backlog = backlogView;
    view.inflight = inflight;
    ctrl.decide(view, inject);

    std::uint32_t slot32 = static_cast<std::uint32_t>(t);
    applyInjections(state, spec, inject, slot32, rec);
    for (int l = 0; l < L; l++) capacities[l] = spec.link(l).capacity.sample(envRng);
    serveAndRoute(state, capacities, spec, envRng, cfg.policy, slot32, rec);
    for (int f = 0; f < F; f++) arrivals[f] = spec.flow(f).arrivals.sample(envRng);
    appendArrivals(state, spec, arrivals, slot32, rec);

    for (int tau = 0; tau < TN; tau++) {
      inflight[tau] += rec.injected[tau] - rec.deliveredTunnel[tau] - rec.droppedTunnel[tau];
      if (inflight[tau] < 0) throw std::logic_error("tunnel in-flight count went negative");
    }
    for (int l = 0; l < L; l++) {
      double norm = 0.0;
      for (int q : linkQueues[l]) norm += state.len(q);
      linkNorm[l] = norm;
    }
    for (int f = 0; f < F; f++) {
      int sum = 0;
      const CompiledFlow& fl = spec.flow(f);
      for (int pos = 0; pos < static_cast<int>(fl.links.size()); pos++)
        sum += state.len(spec.queueIndex(f, pos));
      flowQueueTotal[f] = sum;
    }

    log.record(t, state, rec, linkNorm, flowQueueTotal, ctrl.prices(), ctrl.budgets());

    SlotFeedback fb;
    fb.slot = t;
    fb.net = &spec;
    fb.queues = &state;
    fb.linkQueueNorm = linkNorm;
    fb.inflight = inflight;
    fb.backlog = backlogView;  // decision-time view; end-of-slot is in queues
    fb.record = &rec;
    ctrl.observe(fb);
  }
  log.finalInflight = inflight;
  log.finalSystemPackets = state.totalWithBacklog();
  return log;
}

NetworkSpec withArrivalRate(const NetworkSpec& base, double rate, int arrivalN) {
  NetworkSpec spec = base;
  for (auto& f : spec.flows) f.arrivals = CountDist::bernoulli(arrivalN, rate / arrivalN);
  return spec;
}

std::vector<SweepRow> sweepArrivalRate(const NetworkSpec& base, const SimConfig& cfg,
                                       const std::string& controller,
                                       std::span<const double> rates, int arrivalN,
                                       int jobs) {
  std::vector<SweepRow> rows(rates.size());
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(rates.size())));

  std::atomic<std::size_t> nextIdx{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = nextIdx.fetch_add(1);
      if (i >= rates.size()) return;
      NetworkSpec spec = withArrivalRate(base, rates[i], arrivalN);
      CompiledSpec compiled(spec);
      SimConfig runCfg = cfg;
      runCfg.controller = controller;
      runCfg.seed = mixSeed(cfg.seed, 0x5EED + i);
      MetricsLog log = runSimulation(compiled, runCfg);

      SweepRow& r = rows[i];
      r.controller = controller;
      r.rate = rates[i];
      r.runSeed = runCfg.seed;
      r.avgDelay = log.avgDelayAllFlows();
      r.avgQueue = log.avgTotalQueue();
      double backlogSum = 0.0;
      for (int f = 0; f < log.flowCount; f++) backlogSum += log.flowBacklogSum[f];
      r.avgQueueWithBacklog = r.avgQueue + backlogSum / log.measuredSlots();
      long long deliveredAll = 0;
      for (int f = 0; f < log.flowCount; f++) deliveredAll += log.delivered[f];
      r.throughput = static_cast<double>(deliveredAll) / log.measuredSlots();
      r.drops = log.dropsAll();
    }
  };

  std::vector<std::future<void>> futs;
  for (int j = 0; j < jobs; j++) futs.push_back(std::async(std::launch::async, worker));
  for (auto& f : futs) f.get();
  return rows;
}

std::string sweepCsv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "controller,rate,seed,avg_delay,avg_queue,avg_queue_with_backlog,throughput,drops\n";
  for (const auto& r : rows) {
    os << r.controller << "," << formatDouble(r.rate) << "," << r.runSeed << ","
       << formatDouble(r.avgDelay) << "," << formatDouble(r.avgQueue) << ","
       << formatDouble(r.avgQueueWithBacklog) << "," << formatDouble(r.throughput) << ","
       << r.drops << "\n";
  }
  return os.str();
}

}  // namespace ovl
