#include "ovl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ovl {

std::string formatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void MetricsLog::start(const CompiledSpec& spec, long long horizon_, long long warmup_,
                       long long stride_, std::uint64_t seed_, const std::string& controller_,
                       const std::string& policy_) {
  horizon = horizon_;
  warmup = warmup_;
  stride = stride_;
  seed = seed_;
  controller = controller_;
  policy = policy_;
  linkCount = spec.linkCount();
  flowCount = spec.flowCount();
  linkQueueSum.assign(linkCount, 0.0);
  flowQueueSum.assign(flowCount, 0.0);
  flowBacklogSum.assign(flowCount, 0.0);
  delivered.assign(flowCount, 0);
  sojournSum.assign(flowCount, 0.0);
  arrivals.assign(flowCount, 0);
  arrivalsTotal.assign(flowCount, 0);
  deliveredTotal.assign(flowCount, 0);
  injectedTunnel.assign(spec.tunnelCount(), 0);
  deliveredTunnel.assign(spec.tunnelCount(), 0);
  droppedTunnel.assign(spec.tunnelCount(), 0);
  priceTailFloor = std::numeric_limits<double>::quiet_NaN();
  windowSojourn_.assign(flowCount, 0.0);
  windowDelivered_.assign(flowCount, 0);
}

void MetricsLog::record(long long slot, const QueueState& state, const StepRecord& rec,
                        std::span<const double> linkNorm, std::span<const int> flowQueueTotal,
                        std::span<const double> lambda, std::span<const double> budgets) {
  for (int f = 0; f < flowCount; f++) {
    arrivalsTotal[f] += rec.externalArrivals[f];
    deliveredTotal[f] += rec.delivered[f];
  }
  dropsLinkTotal += rec.droppedLink;
  dropsBacklogTotal += rec.droppedBacklog;
  for (std::size_t tau = 0; tau < injectedTunnel.size(); tau++) {
    injectedTunnel[tau] += rec.injected[tau];
    deliveredTunnel[tau] += rec.deliveredTunnel[tau];
    droppedTunnel[tau] += rec.droppedTunnel[tau];
  }

  if (slot >= warmup) {
    double total = 0.0;
    for (int l = 0; l < linkCount; l++) {
      linkQueueSum[l] += linkNorm[l];
      total += linkNorm[l];
    }
    totalQueueSum += total;
    for (int f = 0; f < flowCount; f++) {
      arrivals[f] += rec.externalArrivals[f];
      delivered[f] += rec.delivered[f];
      sojournSum[f] += rec.sojournSum[f];
      flowBacklogSum[f] += state.backlogLen(f);
      flowQueueSum[f] += flowQueueTotal[f];
    }
    dropsLink += rec.droppedLink;
    dropsBacklog += rec.droppedBacklog;
  }

  if (!lambda.empty() && inTail(slot)) {
    double mx = lambda[0];
    for (double v : lambda) mx = std::max(mx, v);
    if (std::isnan(priceTailFloor) || mx < priceTailFloor) priceTailFloor = mx;
  }

  for (int f = 0; f < flowCount; f++) {
    windowSojourn_[f] += rec.sojournSum[f];
    windowDelivered_[f] += rec.delivered[f];
  }

  if (slot % stride == 0) {
    MetricsRow row;
    row.slot = slot;
    row.linkNorm.assign(linkNorm.begin(), linkNorm.end());
    row.flowQueue.assign(flowQueueTotal.begin(), flowQueueTotal.end());
    row.flowBacklog.resize(flowCount);
    row.delaySample.resize(flowCount);
    for (int f = 0; f < flowCount; f++) {
      row.flowBacklog[f] = state.backlogLen(f);
      row.delaySample[f] =
          windowDelivered_[f] == 0 ? 0.0 : windowSojourn_[f] / windowDelivered_[f];
      windowSojourn_[f] = 0.0;
      windowDelivered_[f] = 0;
    }
    row.lambda.assign(lambda.begin(), lambda.end());
    row.budgets.assign(budgets.begin(), budgets.end());
    rows.push_back(std::move(row));
  }
}

double MetricsLog::avgDelayAllFlows() const {
  double s = 0.0;
  long long n = 0;
  for (int f = 0; f < flowCount; f++) {
    s += sojournSum[f];
    n += delivered[f];
  }
  return n == 0 ? 0.0 : s / n;
}

double MetricsLog::littleGap(int f) const {
  long long T = measuredSlots();
  if (T <= 0 || delivered[f] == 0) return std::numeric_limits<double>::quiet_NaN();
  double W = sojournSum[f] / delivered[f];
  double rate = static_cast<double>(delivered[f]) / T;
  double L = (flowQueueSum[f] + flowBacklogSum[f]) / T;
  if (L <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::abs(W * rate - L) / L;
}

void MetricsLog::writeMetricsCsv(const std::string& path, const CompiledSpec& spec) const {
  std::ofstream os(path);
  os << "slot";
  for (int l = 0; l < linkCount; l++) os << ",qnorm_" << spec.link(l).id;
  for (int f = 0; f < flowCount; f++) os << ",flowq_" << spec.flow(f).id;
  for (int f = 0; f < flowCount; f++) os << ",backlog_" << spec.flow(f).id;
  for (int f = 0; f < flowCount; f++) os << ",delay_" << spec.flow(f).id;
  if (!rows.empty()) {
    for (std::size_t i = 0; i < rows.front().lambda.size(); i++) os << ",lambda_" << i;
    for (std::size_t i = 0; i < rows.front().budgets.size(); i++) os << ",budget_" << i;
  }
  os << "\n";
  for (const auto& r : rows) {
    os << r.slot;
    for (double v : r.linkNorm) os << "," << formatDouble(v);
    for (int v : r.flowQueue) os << "," << v;
    for (int v : r.flowBacklog) os << "," << v;
    for (double v : r.delaySample) os << "," << formatDouble(v);
    for (double v : r.lambda) os << "," << formatDouble(v);
    for (double v : r.budgets) os << "," << formatDouble(v);
    os << "\n";
  }
}

void MetricsLog::writeSummaryCsv(const std::string& path, const CompiledSpec& spec) const {
  std::ofstream os(path);
  os << "scope,arrivals,delivered,throughput,avg_delay,avg_queue,avg_backlog,little_gap\n";
  long long T = measuredSlots();
  for (int f = 0; f < flowCount; f++) {
    os << spec.flow(f).id << "," << arrivals[f] << "," << delivered[f] << ","
       << formatDouble(throughput(f)) << "," << formatDouble(avgDelay(f)) << ","
       << formatDouble(flowQueueSum[f] / T) << ","
       << formatDouble(flowBacklogSum[f] / T) << "," << formatDouble(littleGap(f)) << "\n";
  }
  long long arrAll = 0, delAll = 0;
  double backAll = 0.0;
  for (int f = 0; f < flowCount; f++) {
    arrAll += arrivals[f];
    delAll += delivered[f];
    backAll += flowBacklogSum[f];
  }
  os << "total," << arrAll << "," << delAll << ","
     << formatDouble(static_cast<double>(delAll) / T) << ","
     << formatDouble(avgDelayAllFlows()) << "," << formatDouble(avgTotalQueue()) << ","
     << formatDouble(backAll / T) << ",\n";
  os << "drops_link_total,," << dropsLinkTotal << ",,,,,\n";
  os << "drops_backlog_total,," << dropsBacklogTotal << ",,,,,\n";
}

}  // namespace ovl
