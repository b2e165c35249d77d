#ifndef REWEAVE_TE_H
#define REWEAVE_TE_H

#include <span>
#include <utility>
#include <vector>

#include "reweave/demand.h"
#include "reweave/pathing.h"
#include "reweave/topology.h"

namespace reweave {

// Split weights over the routing paths of every ordered pair, positionally
// aligned with PathSet's flat path order.
struct RatioConfig {
  std::vector<double> weights;

  bool operator==(const RatioConfig&) const = default;
};

// Equal split over each pair's paths.
RatioConfig UniformRatios(const PathSet& paths);

// Throws Error(kInvalidArgument) unless `ratios` has one non-negative weight
// per routing path and every pair's weights sum to 1 within `tolerance`.
void ValidateRatios(const PathSet& paths, const RatioConfig& ratios,
                    double tolerance = 1e-9);

// Per-link carried traffic, both directions summed.
struct LinkLoad {
  std::vector<double> flow;

  double utilization(const Topology& topology, EdgeId e) const {
    return flow[e] / topology.edge(e).capacity;
  }
};

struct MluReport {
  double mlu = 0;
  EdgeId argmax = -1;  // smallest id among the most utilized links
  // Demand of pairs that had no usable path, if the producer tracked it.
  std::vector<std::pair<std::pair<NodeId, NodeId>, double>> unrouted;
};

// f_e = sum over pairs and paths through e of D_sd * lambda_p. Throws
// Error(kInvalidArgument) if the ratios do not align with the path set.
LinkLoad ComputeLoads(const Topology& topology, const PathSet& paths,
                      const DemandMatrix& demand, const RatioConfig& ratios);

MluReport ComputeMlu(const LinkLoad& load, const Topology& topology);

// candidate / oracle. Throws Error(kInvalidArgument) if the oracle MLU is 0
// while the candidate's is not; 0/0 yields 1.
double NormalizedMlu(const MluReport& candidate, const MluReport& oracle);

}  // namespace reweave

#endif  // REWEAVE_TE_H
