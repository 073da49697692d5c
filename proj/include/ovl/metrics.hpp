#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ovl/network.hpp"

namespace ovl {

struct MetricsRow {
  long long slot = 0;
  std::vector<double> linkNorm;    // ||Q_l|| per link
  std::vector<int> flowQueue;      // per flow, link queues only
  std::vector<int> flowBacklog;    // per flow
  std::vector<double> delaySample; // per flow: mean sojourn delivered since the last row
  std::vector<double> lambda;      // controller prices (links or tunnels)
  std::vector<double> budgets;     // controller budget split
};

// Running aggregates plus a stride-sampled time series; nothing in here grows
// with the horizon, so 1e7-slot runs stay cheap.
class MetricsLog {
 public:
  void start(const CompiledSpec& spec, long long horizon, long long warmup, long long stride,
             std::uint64_t seed, const std::string& controller, const std::string& policy);

  void record(long long slot, const QueueState& state, const StepRecord& rec,
              std::span<const double> linkNorm, std::span<const int> flowQueueTotal,
              std::span<const double> lambda, std::span<const double> budgets);

  // ---- configuration echo
  long long horizon = 0, warmup = 0, stride = 1;
  std::uint64_t seed = 0;
  std::string controller, policy;
  int linkCount = 0, flowCount = 0;

  // ---- post-warmup aggregates
  std::vector<double> linkQueueSum;     // per link
  std::vector<double> flowQueueSum;     // per flow, link queues
  std::vector<double> flowBacklogSum;   // per flow
  double totalQueueSum = 0.0;
  std::vector<long long> delivered;     // per flow
  std::vector<double> sojournSum;       // per flow
  std::vector<long long> arrivals;      // per flow
  long long dropsLink = 0, dropsBacklog = 0;

  // ---- full-run totals
  std::vector<long long> arrivalsTotal, deliveredTotal;
  long long dropsLinkTotal = 0, dropsBacklogTotal = 0;
  std::vector<long long> injectedTunnel, deliveredTunnel, droppedTunnel;
  std::vector<int> finalInflight;      // set by the engine after the last slot
  long long finalSystemPackets = 0;    // queues plus backlogs at the end

  // min over the final 10% of slots of max_l lambda_l; NaN without prices
  double priceTailFloor = 0.0;

  std::vector<MetricsRow> rows;

  // ---- derived
  long long measuredSlots() const { return horizon - warmup; }
  double avgTotalQueue() const { return totalQueueSum / measuredSlots(); }
  double avgLinkQueue(int l) const { return linkQueueSum[l] / measuredSlots(); }
  double throughput(int f) const {
    return static_cast<double>(delivered[f]) / measuredSlots();
  }
  double avgDelay(int f) const {
    return delivered[f] == 0 ? 0.0 : sojournSum[f] / delivered[f];
  }
  double avgDelayAllFlows() const;
  // |W * rate - L| / L with L counting link queues plus the source backlog
  double littleGap(int f) const;
  long long dropsAll() const { return dropsLinkTotal + dropsBacklogTotal; }

  void writeMetricsCsv(const std::string& path, const CompiledSpec& spec) const;
  void writeSummaryCsv(const std::string& path, const CompiledSpec& spec) const;

 private:
  bool inTail(long long slot) const { return slot * 10 >= horizon * 9; }

  // deliveries between sampled rows, for the per-row delay column
  std::vector<double> windowSojourn_;
  std::vector<long long> windowDelivered_;
};

std::string formatDouble(double v);

}  // namespace ovl
