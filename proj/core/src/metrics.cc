#include "reweave/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reweave/error.h"

namespace reweave {
namespace {

constexpr double kDelayClamp = 0.999;

}  // namespace

double CongestionLoss(double mlu) {
  if (!(mlu >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "MLU must be non-negative");
  }
  return mlu <= 1.0 ? 0.0 : 1.0 - 1.0 / mlu;
}

LossRecord ScenarioLoss(double mlu, const DemandMatrix& demand,
                        double weight) {
  return ScenarioLoss(mlu, demand, {}, weight);
}

LossRecord ScenarioLoss(double mlu, const DemandMatrix& demand,
                        std::span<const double> pair_dropped, double weight) {
  const int n = demand.num_nodes();
  const int pairs = n * (n - 1);
  if (!pair_dropped.empty() && static_cast<int>(pair_dropped.size()) != pairs) {
    throw Error(ErrorKind::kInvalidArgument, "dropped fractions misaligned");
  }
  const double congestion = CongestionLoss(mlu);
  LossRecord out;
  out.mlu = mlu;
  out.weight = weight;
  out.flow_loss.assign(pairs, 0.0);
  int pair = 0;
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      if (s == d) continue;
      if (demand.at(s, d) > 0.0) {
        double dropped = pair_dropped.empty() ? 0.0 : pair_dropped[pair];
        out.flow_loss[pair] =
            dropped == 0.0 ? congestion
                           : 1.0 - (1.0 - dropped) * (1.0 - congestion);
      }
      ++pair;
    }
  }
  return out;
}

double PercLoss(std::span<const LossRecord> records, double beta) {
  if (records.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "PercLoss needs scenarios");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "beta must be in (0, 1)");
  }
  const size_t flows = records.front().flow_loss.size();
  double total_weight = 0;
  for (const LossRecord& r : records) {
    if (r.flow_loss.size() != flows) {
      throw Error(ErrorKind::kInvalidArgument,
                  "loss records cover different flow sets");
    }
    if (!(r.weight >= 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "negative scenario weight");
    }
    total_weight += r.weight;
  }
  if (std::abs(total_weight - 1.0) > 1e-6) {
    throw Error(ErrorKind::kInvalidArgument,
                "scenario weights sum to " + std::to_string(total_weight));
  }

  std::vector<std::pair<double, double>> column(records.size());
  double worst = 0;
  for (size_t f = 0; f < flows; ++f) {
    for (size_t i = 0; i < records.size(); ++i) {
      column[i] = {records[i].flow_loss[f], records[i].weight};
    }
    std::sort(column.begin(), column.end());
    double cumulative = 0;
    double flow_loss = column.back().first;
    for (const auto& [loss, w] : column) {
      cumulative += w;
      if (cumulative > beta + 1e-9) {
        flow_loss = loss;
        break;
      }
    }
    worst = std::max(worst, flow_loss);
  }
  return worst;
}

DelayReport AvgDelay(const LinkLoad& load, const Topology& topology) {
  if (static_cast<int>(load.flow.size()) != topology.num_edges()) {
    throw Error(ErrorKind::kInvalidArgument, "load vector misaligned");
  }
  DelayReport out;
  for (const Edge& e : topology.edges()) {
    double l = load.flow[e.id];
    const double cap = kDelayClamp * e.capacity;
    if (l >= cap) {
      l = cap;
      out.saturated = true;
    }
    out.delay += l / (e.capacity - l);
  }
  return out;
}

StateEstimate RouterState(std::int64_t n, std::int64_t d, std::int64_t m,
                          std::int64_t l) {
  if (n <= 0 || d <= 0 || m <= 0 || l <= 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "router state arguments must be positive");
  }
  StateEstimate out;
  out.rule_entries = m * (n - 1) + m * d;
  out.rule_bytes = 8 * out.rule_entries;
  out.path_table_entries = out.rule_entries;
  out.path_table_bytes = out.path_table_entries * l * 16;
  return out;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * (values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

}  // namespace reweave
