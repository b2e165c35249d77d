#include "testing/fixtures.h"

#include <random>
#include <set>

namespace reweave::testing {

Topology FromPairs(
    const std::vector<std::pair<std::string, std::string>>& edges) {
  TopologyBuilder b;
  for (const auto& [a, c] : edges) b.AddEdge(a, c, 1.0);
  return std::move(b).Build();
}

Topology Triangle() { return FromPairs({{"a", "b"}, {"b", "c"}, {"a", "c"}}); }

Topology Square() {
  return FromPairs({{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}});
}

Topology Barbell() {
  return FromPairs({{"a", "b"},
                    {"b", "c"},
                    {"c", "a"},
                    {"c", "d"},
                    {"d", "e"},
                    {"e", "f"},
                    {"f", "d"}});
}

Topology Chain(int n) {
  TopologyBuilder b;
  for (int i = 0; i < n; ++i) b.AddNode("c" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i) b.AddEdge(i, i + 1, 1.0);
  return std::move(b).Build();
}

Topology Complete(int n) {
  TopologyBuilder b;
  for (int i = 0; i < n; ++i) b.AddNode("k" + std::to_string(i));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) b.AddEdge(i, j, 1.0);
  }
  return std::move(b).Build();
}

Topology GoldenTopology() {
  TopologyBuilder b;
  for (int i = 1; i <= 11; ++i) b.AddNode("S" + std::to_string(i));
  const std::vector<std::pair<int, int>> links = {
      {1, 2}, {1, 3}, {1, 4}, {2, 4}, {3, 4}, {4, 5},  {1, 9},   {9, 8},  {8, 7},
      {7, 6}, {6, 5}, {7, 10}, {10, 6}, {7, 11}, {11, 6}, {8, 10}, {10, 11}};
  for (auto [a, c] : links) b.AddEdge(a - 1, c - 1, 1.0);
  return std::move(b).Build();
}

GoldenCase MakeGoldenCase() {
  GoldenCase g;
  g.topology = GoldenTopology();
  PathSetOptions opts;
  opts.k = 4;
  opts.backup_k = 2;
  opts.routing = PathStrategy::kKsp;
  opts.backup = PathStrategy::kKsp;
  opts.threads = 1;
  g.paths = BuildPathSet(g.topology, opts);
  g.demand = DemandMatrix(11);
  g.demand.set(0, 4, 1.2);
  g.ratios = UniformRatios(g.paths);
  g.failed = *g.topology.FindEdge(6, 5);
  return g;
}

Topology RandomSmall(std::uint64_t seed, int max_nodes) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nodes(3, max_nodes);
  const int n = nodes(rng);
  std::uniform_real_distribution<double> cap(0.5, 2.0);
  TopologyBuilder b;
  for (int i = 0; i < n; ++i) b.AddNode("r" + std::to_string(i));
  std::set<std::pair<int, int>> used;
  // Random spanning tree, then extra links.
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    int p = parent(rng);
    used.insert({p, i});
    b.AddEdge(p, i, cap(rng));
  }
  std::uniform_int_distribution<int> extra(1, n);
  std::uniform_int_distribution<int> any(0, n - 1);
  for (int tries = extra(rng) * 3, added = 0; tries > 0 && added < n; --tries) {
    int a = any(rng);
    int c = any(rng);
    if (a == c) continue;
    if (a > c) std::swap(a, c);
    if (!used.insert({a, c}).second) continue;
    b.AddEdge(a, c, cap(rng));
    ++added;
  }
  return std::move(b).Build();
}

DemandMatrix RandomSparseDemand(int num_nodes, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(0, num_nodes - 1);
  std::uniform_real_distribution<double> volume(0.1, 1.0);
  DemandMatrix dm(num_nodes);
  int placed = 0;
  while (placed < pairs) {
    int s = node(rng);
    int d = node(rng);
    if (s == d || dm.at(s, d) > 0) continue;
    dm.set(s, d, volume(rng));
    ++placed;
  }
  return dm;
}

RatioConfig RandomRatios(const PathSet& paths, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> draw(1.0);
  RatioConfig out;
  out.weights.assign(paths.num_routing_paths(), 0.0);
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    double sum = 0;
    for (int i = paths.offset(pair); i < paths.offset(pair + 1); ++i) {
      out.weights[i] = draw(rng);
      sum += out.weights[i];
    }
    for (int i = paths.offset(pair); i < paths.offset(pair + 1); ++i) {
      out.weights[i] /= sum;
    }
  }
  return out;
}

}  // namespace reweave::testing
