#ifndef REWEAVE_METRICS_H
#define REWEAVE_METRICS_H

#include <cstdint>
#include <span>
#include <vector>

#include "reweave/demand.h"
#include "reweave/te.h"
#include "reweave/topology.h"

namespace reweave {

// Congestion loss for one MLU value: max(0, 1 - 1/mlu).
double CongestionLoss(double mlu);

// Per-scenario loss of every ordered pair (indexed like PathSet pairs).
struct LossRecord {
  double mlu = 0;
  double weight = 1;
  std::vector<double> flow_loss;
};

// Uniform congestion loss on every flow with positive demand; zero-demand
// flows get 0. Throws Error(kInvalidArgument) if mlu < 0.
LossRecord ScenarioLoss(double mlu, const DemandMatrix& demand,
                        double weight = 1.0);

// As ScenarioLoss, but a flow first loses `pair_dropped[pair]` of its
// volume to unrecovered failures and the rest is scaled by congestion:
// loss = 1 - (1 - dropped) * (1 - congestion).
LossRecord ScenarioLoss(double mlu, const DemandMatrix& demand,
                        std::span<const double> pair_dropped,
                        double weight = 1.0);

// Per flow, the smallest loss whose cumulative scenario weight (ascending by
// loss) exceeds beta; the maximum of that over flows. Throws
// Error(kInvalidArgument) on an empty list, mismatched flow counts, beta
// outside (0, 1) or weights not summing to 1 within 1e-6.
double PercLoss(std::span<const LossRecord> records, double beta);

struct DelayReport {
  double delay = 0;
  bool saturated = false;  // some link ran at or above 0.999 of capacity
};

// Sum over links of l / (C - l) with l clamped to 0.999 C.
DelayReport AvgDelay(const LinkLoad& load, const Topology& topology);

struct StateEstimate {
  std::int64_t rule_entries = 0;
  std::int64_t rule_bytes = 0;
  std::int64_t path_table_entries = 0;
  std::int64_t path_table_bytes = 0;
};

// Per-router forwarding state for N nodes, d backup detours per link, M
// paths per pair and L segment identifiers per path. Throws
// Error(kInvalidArgument) unless all arguments are positive.
StateEstimate RouterState(std::int64_t n, std::int64_t d, std::int64_t m,
                          std::int64_t l);

// Linear-interpolated quantile of `values` (q in [0, 1]); 0 when empty.
double Quantile(std::vector<double> values, double q);

}  // namespace reweave

#endif  // REWEAVE_METRICS_H
