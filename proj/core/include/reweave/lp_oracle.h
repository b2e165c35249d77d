#ifndef REWEAVE_LP_ORACLE_H
#define REWEAVE_LP_ORACLE_H

#include <span>
#include <utility>
#include <vector>

#include "reweave/demand.h"
#include "reweave/pathing.h"
#include "reweave/te.h"
#include "reweave/topology.h"

namespace reweave {

struct LpOptions {
  // Largest accepted gap between the primal MLU and the dual bound.
  double optimality_tolerance = 1e-6;
  // 0 picks a limit proportional to the problem size.
  int max_iterations = 0;
};

struct LpSolution {
  RatioConfig ratios;
  MluReport report;      // MLU recomputed from `ratios` via ComputeLoads
  double dual_bound = 0;  // certified lower bound on the optimal MLU
  double duality_gap = 0;
  int iterations = 0;
  // Non-negative link prices, normalized so that sum(c_e * y_e) == 1.
  std::vector<double> edge_prices;
};

// Minimum-MLU split over a fixed path set, solved exactly in epigraph form:
//
//   minimize theta
//   s.t. sum_{p in P_sd} lambda_p = 1                 for every demanded pair
//        sum_{p through e} D_sd lambda_p <= theta c_e  for every link
//        lambda >= 0
//
// `usable` optionally masks routing paths (indexed like PathSet's flat
// order); masked paths get weight 0. Pairs without demand get a uniform split
// over their usable paths. The returned gap is certified against
// DualBound; if it exceeds the tolerance the solve throws Error(kRuntime).
// Pairs with demand but no usable path raise Error(kData) naming them.
LpSolution SolveMinMlu(const Topology& topology, const PathSet& paths,
                       const DemandMatrix& demand,
                       std::span<const char> usable = {},
                       const LpOptions& options = {});

// Demanded pairs whose every routing path is masked out.
std::vector<std::pair<NodeId, NodeId>> PairsWithoutUsablePath(
    const PathSet& paths, const DemandMatrix& demand,
    std::span<const char> usable = {});

// Weak-duality bound: for any non-negative, not all zero link prices y,
//   sum_sd D_sd * min_{usable p} y(p) / sum_e c_e y_e
// is a lower bound on the optimal MLU.
double DualBound(const Topology& topology, const PathSet& paths,
                 const DemandMatrix& demand, std::span<const char> usable,
                 std::span<const double> edge_prices);

}  // namespace reweave

#endif  // REWEAVE_LP_ORACLE_H
