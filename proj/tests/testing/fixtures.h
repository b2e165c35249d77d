#ifndef REWEAVE_TESTS_TESTING_FIXTURES_H
#define REWEAVE_TESTS_TESTING_FIXTURES_H

#include <cstdint>
#include <string>
#include <vector>

#include "reweave/demand.h"
#include "reweave/pathing.h"
#include "reweave/te.h"
#include "reweave/topology.h"

namespace reweave::testing {

// Builds a topology from "a-b" style pairs over labels, unit capacity.
Topology FromPairs(const std::vector<std::pair<std::string, std::string>>& edges);

Topology Triangle();
Topology Square();
// Two triangles joined by one bridge link (the bridge is edge 3).
Topology Barbell();
Topology Chain(int n);
Topology Complete(int n);

// Eleven switches S1..S11 (ids 0..10), seventeen unit links. Tunnel
// S1-S9-S8-S7-S6-S5 has two one-hop-longer detours around (S7,S6) via S10
// and S11; three more S1->S5 tunnels share (S4,S5).
Topology GoldenTopology();

struct GoldenCase {
  Topology topology;
  PathSet paths;
  DemandMatrix demand;  // 1.2 units S1 -> S5
  RatioConfig ratios;   // 25% on each S1 -> S5 tunnel, uniform elsewhere
  EdgeId failed = -1;   // (S7, S6)
};

// KSP routing with k = 4 and two backup detours per link.
GoldenCase MakeGoldenCase();

// Connected random topology with 3..max_nodes nodes.
Topology RandomSmall(std::uint64_t seed, int max_nodes);

// Random demand on `pairs` distinct ordered pairs, volumes in (0.1, 1].
DemandMatrix RandomSparseDemand(int num_nodes, int pairs, std::uint64_t seed);

// Random valid ratios (Dirichlet-like) for every pair.
RatioConfig RandomRatios(const PathSet& paths, std::uint64_t seed);

}  // namespace reweave::testing

#endif  // REWEAVE_TESTS_TESTING_FIXTURES_H
