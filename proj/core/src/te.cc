#include "reweave/te.h"

#include <cmath>

#include "reweave/error.h"

namespace reweave {

RatioConfig UniformRatios(const PathSet& paths) {
  RatioConfig out;
  out.weights.resize(paths.num_routing_paths());
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    const int count = paths.path_count(pair);
    for (int i = 0; i < count; ++i) {
      out.weights[paths.offset(pair) + i] = 1.0 / count;
    }
  }
  return out;
}

void ValidateRatios(const PathSet& paths, const RatioConfig& ratios,
                    double tolerance) {
  if (static_cast<int>(ratios.weights.size()) != paths.num_routing_paths()) {
    throw Error(ErrorKind::kInvalidArgument,
                "ratio config has " + std::to_string(ratios.weights.size()) +
                    " weights for " +
                    std::to_string(paths.num_routing_paths()) + " paths");
  }
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    if (paths.path_count(pair) == 0) continue;
    double sum = 0;
    for (int i = paths.offset(pair); i < paths.offset(pair + 1); ++i) {
      if (!(ratios.weights[i] >= 0.0)) {
        throw Error(ErrorKind::kInvalidArgument, "negative split weight");
      }
      sum += ratios.weights[i];
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw Error(ErrorKind::kInvalidArgument,
                  "split weights of pair " + std::to_string(pair) +
                      " sum to " + std::to_string(sum));
    }
  }
}

LinkLoad ComputeLoads(const Topology& topology, const PathSet& paths,
                      const DemandMatrix& demand, const RatioConfig& ratios) {
  if (static_cast<int>(ratios.weights.size()) != paths.num_routing_paths() ||
      demand.num_nodes() != paths.num_nodes() ||
      topology.num_edges() != paths.num_edges()) {
    throw Error(ErrorKind::kInvalidArgument,
                "ratios, demand and path set dimensions do not match");
  }
  LinkLoad load;
  load.flow.assign(topology.num_edges(), 0.0);
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    auto [s, d] = paths.PairAt(pair);
    const double volume = demand.at(s, d);
    if (volume == 0.0) continue;
    for (int i = paths.offset(pair); i < paths.offset(pair + 1); ++i) {
      const double share = volume * ratios.weights[i];
      if (share == 0.0) continue;
      for (EdgeId e : paths.routing_path(i).edges) load.flow[e] += share;
    }
  }
  return load;
}

MluReport ComputeMlu(const LinkLoad& load, const Topology& topology) {
  MluReport out;
  for (EdgeId e = 0; e < topology.num_edges(); ++e) {
    double u = load.utilization(topology, e);
    if (out.argmax < 0 || u > out.mlu) {
      out.mlu = u;
      out.argmax = e;
    }
  }
  return out;
}

double NormalizedMlu(const MluReport& candidate, const MluReport& oracle) {
  if (oracle.mlu <= 0.0) {
    if (candidate.mlu <= 0.0) return 1.0;
    throw Error(ErrorKind::kInvalidArgument,
                "oracle MLU is zero but candidate MLU is positive");
  }
  return candidate.mlu / oracle.mlu;
}

}  // namespace reweave
