#include "reweave/pathing.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "reweave/error.h"
#include "reweave/parallel.h"

namespace reweave {

bool Path::Contains(EdgeId e) const {
  return std::find(edges.begin(), edges.end(), e) != edges.end();
}

bool Path::CrossesAny(std::span<const char> edge_mask) const {
  for (EdgeId e : edges) {
    if (edge_mask[e]) return true;
  }
  return false;
}

Path Path::Reversed() const {
  Path out;
  out.nodes.assign(nodes.rbegin(), nodes.rend());
  out.edges.assign(edges.rbegin(), edges.rend());
  return out;
}

Path MakePath(const Topology& topology, std::vector<NodeId> nodes) {
  if (nodes.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "path needs at least two nodes");
  }
  std::set<NodeId> seen;
  Path path;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] < 0 || nodes[i] >= topology.num_nodes()) {
      throw Error(ErrorKind::kInvalidArgument, "path node out of range");
    }
    if (!seen.insert(nodes[i]).second) {
      throw Error(ErrorKind::kInvalidArgument, "path repeats a node");
    }
    if (i > 0) {
      std::optional<EdgeId> e = topology.FindEdge(nodes[i - 1], nodes[i]);
      if (!e) {
        throw Error(ErrorKind::kInvalidArgument,
                    "path uses non-adjacent nodes " +
                        topology.node(nodes[i - 1]).label + " " +
                        topology.node(nodes[i]).label);
      }
      path.edges.push_back(*e);
    }
  }
  path.nodes = std::move(nodes);
  return path;
}

std::optional<Path> ShortestPath(const Topology& topology, NodeId s, NodeId d,
                                 std::span<const char> blocked_edges,
                                 std::span<const char> blocked_nodes) {
  auto edge_ok = [&](EdgeId e) {
    return blocked_edges.empty() || !blocked_edges[e];
  };
  auto node_ok = [&](NodeId n) {
    return blocked_nodes.empty() || !blocked_nodes[n];
  };
  if (s == d || !node_ok(s) || !node_ok(d)) return std::nullopt;

  // BFS distances towards d, then a greedy walk from s that always steps to
  // the smallest-id neighbour one hop closer. That walk is the
  // lexicographically smallest among the shortest paths.
  constexpr int kUnreached = std::numeric_limits<int>::max();
  std::vector<int> dist(topology.num_nodes(), kUnreached);
  std::vector<NodeId> frontier = {d};
  dist[d] = 0;
  for (size_t head = 0; head < frontier.size(); ++head) {
    NodeId v = frontier[head];
    if (v == s) break;
    for (EdgeId e : topology.incident(v)) {
      if (!edge_ok(e)) continue;
      NodeId u = topology.edge(e).Other(v);
      if (dist[u] != kUnreached || !node_ok(u)) continue;
      dist[u] = dist[v] + 1;
      frontier.push_back(u);
    }
  }
  if (dist[s] == kUnreached) return std::nullopt;

  Path path;
  path.nodes.push_back(s);
  NodeId cur = s;
  while (cur != d) {
    NodeId best = -1;
    EdgeId best_edge = -1;
    for (EdgeId e : topology.incident(cur)) {
      if (!edge_ok(e)) continue;
      NodeId u = topology.edge(e).Other(cur);
      if (dist[u] == dist[cur] - 1 && (best < 0 || u < best)) {
        best = u;
        best_edge = e;
      }
    }
    path.nodes.push_back(best);
    path.edges.push_back(best_edge);
    cur = best;
  }
  return path;
}

std::vector<Path> Ksp(const Topology& topology, NodeId s, NodeId d, int k,
                      std::span<const char> blocked_edges) {
  std::vector<Path> accepted;
  if (k <= 0) return accepted;
  std::optional<Path> first = ShortestPath(topology, s, d, blocked_edges);
  if (!first) return accepted;
  accepted.push_back(std::move(*first));

  std::set<Path, PathOrder> candidates;
  std::set<std::vector<NodeId>> accepted_seqs = {accepted.front().nodes};
  std::vector<char> edge_mask(topology.num_edges(), 0);
  std::vector<char> node_mask(topology.num_nodes(), 0);

  while (static_cast<int>(accepted.size()) < k) {
    const Path prev = accepted.back();
    for (int i = 0; i < prev.hops(); ++i) {
      std::fill(edge_mask.begin(), edge_mask.end(), 0);
      std::fill(node_mask.begin(), node_mask.end(), 0);
      if (!blocked_edges.empty()) {
        std::copy(blocked_edges.begin(), blocked_edges.end(),
                  edge_mask.begin());
      }
      // Accepted paths sharing this root may not leave it the same way.
      for (const Path& p : accepted) {
        if (p.hops() > i &&
            std::equal(prev.nodes.begin(), prev.nodes.begin() + i + 1,
                       p.nodes.begin())) {
          edge_mask[p.edges[i]] = 1;
        }
      }
      for (int j = 0; j < i; ++j) node_mask[prev.nodes[j]] = 1;

      std::optional<Path> spur =
          ShortestPath(topology, prev.nodes[i], d, edge_mask, node_mask);
      if (!spur) continue;
      Path total;
      total.nodes.assign(prev.nodes.begin(), prev.nodes.begin() + i);
      total.edges.assign(prev.edges.begin(), prev.edges.begin() + i);
      total.nodes.insert(total.nodes.end(), spur->nodes.begin(),
                         spur->nodes.end());
      total.edges.insert(total.edges.end(), spur->edges.begin(),
                         spur->edges.end());
      if (!accepted_seqs.count(total.nodes)) candidates.insert(std::move(total));
    }
    if (candidates.empty()) break;
    auto best = candidates.begin();
    accepted_seqs.insert(best->nodes);
    accepted.push_back(*best);
    candidates.erase(best);
  }
  return accepted;
}

std::vector<Path> Edksp(const Topology& topology, NodeId s, NodeId d, int k,
                        std::span<const char> blocked_edges) {
  std::vector<char> mask(topology.num_edges(), 0);
  if (!blocked_edges.empty()) {
    std::copy(blocked_edges.begin(), blocked_edges.end(), mask.begin());
  }
  std::vector<Path> out;
  while (static_cast<int>(out.size()) < k) {
    std::optional<Path> p = ShortestPath(topology, s, d, mask);
    if (!p) break;
    for (EdgeId e : p->edges) mask[e] = 1;
    out.push_back(std::move(*p));
  }
  return out;
}

const char* PathStrategyName(PathStrategy strategy) {
  return strategy == PathStrategy::kKsp ? "ksp" : "edksp";
}

std::optional<PathStrategy> ParsePathStrategy(std::string_view name) {
  if (name == "ksp") return PathStrategy::kKsp;
  if (name == "edksp") return PathStrategy::kEdksp;
  return std::nullopt;
}

PathSet::PathSet(int num_nodes, PathSetOptions options,
                 std::vector<std::vector<Path>> routing_by_pair,
                 std::vector<std::vector<Path>> backup_by_edge)
    : num_nodes_(num_nodes),
      options_(options),
      backup_(std::move(backup_by_edge)) {
  const int pairs = num_pairs();
  if (static_cast<int>(routing_by_pair.size()) != pairs) {
    throw Error(ErrorKind::kInvalidArgument,
                "routing lists do not cover every ordered pair");
  }
  offsets_.reserve(pairs + 1);
  offsets_.push_back(0);
  for (int p = 0; p < pairs; ++p) {
    for (Path& path : routing_by_pair[p]) {
      routing_.push_back(std::move(path));
      pair_of_path_.push_back(p);
    }
    offsets_.push_back(static_cast<int>(routing_.size()));
  }
  backup_reversed_.resize(backup_.size());
  for (size_t e = 0; e < backup_.size(); ++e) {
    for (const Path& p : backup_[e]) backup_reversed_[e].push_back(p.Reversed());
  }
}

std::span<const Path> PathSet::backup_from(EdgeId e, NodeId from) const {
  if (!backup_[e].empty() && backup_[e].front().src() != from) {
    return backup_reversed_[e];
  }
  return backup_[e];
}

std::vector<EdgeId> PathSet::edges_without_backup() const {
  std::vector<EdgeId> out;
  for (size_t e = 0; e < backup_.size(); ++e) {
    if (backup_[e].empty()) out.push_back(static_cast<EdgeId>(e));
  }
  return out;
}

long PathSet::directed_backup_count() const {
  long total = 0;
  for (const auto& list : backup_) total += static_cast<long>(list.size());
  return 2 * total;
}

bool PathSet::operator==(const PathSet& other) const {
  return num_nodes_ == other.num_nodes_ && options_.k == other.options_.k &&
         options_.effective_backup_k() == other.options_.effective_backup_k() &&
         options_.routing == other.options_.routing &&
         options_.backup == other.options_.backup &&
         routing_ == other.routing_ && offsets_ == other.offsets_ &&
         backup_ == other.backup_;
}

PathSet BuildPathSet(const Topology& topology, const PathSetOptions& options) {
  if (options.k < 1) {
    throw Error(ErrorKind::kInvalidArgument, "path budget k must be >= 1");
  }
  if (topology.num_nodes() < 2) {
    throw Error(ErrorKind::kData, "topology needs at least two nodes");
  }
  if (!topology.IsConnected()) {
    throw Error(ErrorKind::kData, "topology is disconnected");
  }
  const int n = topology.num_nodes();
  auto compute = [&](PathStrategy strategy, NodeId s, NodeId d, int k,
                     std::span<const char> blocked) {
    return strategy == PathStrategy::kKsp ? Ksp(topology, s, d, k, blocked)
                                          : Edksp(topology, s, d, k, blocked);
  };

  std::vector<std::vector<Path>> routing(static_cast<size_t>(n) * (n - 1));
  ParallelFor(n, options.threads, [&](int s) {
    for (NodeId d = 0; d < n; ++d) {
      if (d == s) continue;
      size_t pair = static_cast<size_t>(s) * (n - 1) + (d < s ? d : d - 1);
      routing[pair] = compute(options.routing, s, d, options.k, {});
    }
  });

  const int backup_k = options.effective_backup_k();
  std::vector<std::vector<Path>> backup(topology.num_edges());
  ParallelFor(topology.num_edges(), options.threads, [&](int e) {
    std::vector<char> blocked(topology.num_edges(), 0);
    blocked[e] = 1;
    const Edge& edge = topology.edge(e);
    backup[e] = compute(options.backup, edge.src, edge.dst, backup_k, blocked);
  });

  return PathSet(n, options, std::move(routing), std::move(backup));
}

double EdgeRisk(std::span<const Path> paths) {
  if (paths.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "edge risk of an empty path list");
  }
  std::map<EdgeId, int> uses;
  int worst = 0;
  for (const Path& p : paths) {
    for (EdgeId e : p.edges) worst = std::max(worst, ++uses[e]);
  }
  return static_cast<double>(worst) / static_cast<double>(paths.size());
}

namespace {

double Quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  size_t idx = static_cast<size_t>(
      std::ceil(q * static_cast<double>(sorted.size())) - 1);
  return sorted[std::min(idx, sorted.size() - 1)];
}

}  // namespace

RiskSummary RiskProfile(const Topology& topology, const PathSet& paths,
                        RiskKind kind) {
  std::vector<double> risks;
  if (kind == RiskKind::kBackup) {
    for (EdgeId e = 0; e < paths.num_edges(); ++e) {
      if (!paths.backup(e).empty()) risks.push_back(EdgeRisk(paths.backup(e)));
    }
  } else {
    const bool want_adjacent = kind == RiskKind::kAdjacent;
    for (int pair = 0; pair < paths.num_pairs(); ++pair) {
      auto [s, d] = paths.PairAt(pair);
      bool adjacent = topology.FindEdge(s, d).has_value();
      if (adjacent != want_adjacent || paths.routing(pair).empty()) continue;
      risks.push_back(EdgeRisk(paths.routing(pair)));
    }
  }

  RiskSummary out;
  out.count = static_cast<int>(risks.size());
  if (risks.empty()) return out;
  std::sort(risks.begin(), risks.end());
  double sum = 0;
  for (double r : risks) {
    sum += r;
    int bin = static_cast<int>(std::ceil(r * 10.0 - 1e-12)) - 1;
    ++out.histogram[std::clamp(bin, 0, 9)];
  }
  out.mean = sum / static_cast<double>(risks.size());
  out.min = risks.front();
  out.max = risks.back();
  out.p50 = Quantile(risks, 0.50);
  out.p90 = Quantile(risks, 0.90);
  out.p99 = Quantile(risks, 0.99);
  return out;
}

DeltaF DeltaFModels(
    const PathSet& paths, EdgeId failed,
    const std::map<std::pair<NodeId, NodeId>, double>& failed_traffic,
    EdgeId e0) {
  if (failed == e0) {
    throw Error(ErrorKind::kInvalidArgument,
                "observed link must differ from the failed link");
  }
  DeltaF out;
  double total_failed = 0;
  for (const auto& [pair, volume] : failed_traffic) {
    if (volume < 0) {
      throw Error(ErrorKind::kInvalidArgument, "negative failed volume");
    }
    if (volume == 0) continue;
    total_failed += volume;
    int survivors = 0;
    int through_e0 = 0;
    for (const Path& p : paths.routing(pair.first, pair.second)) {
      if (p.Contains(failed)) continue;
      ++survivors;
      if (p.Contains(e0)) ++through_e0;
    }
    if (survivors == 0) {
      out.pairs_without_survivors.push_back(pair);
      continue;
    }
    out.base += volume * through_e0 / static_cast<double>(survivors);
  }
  std::span<const Path> detours = paths.backup(failed);
  if (!detours.empty()) {
    int through_e0 = 0;
    for (const Path& p : detours) through_e0 += p.Contains(e0) ? 1 : 0;
    out.reweave =
        total_failed * through_e0 / static_cast<double>(detours.size());
  }
  return out;
}

double BackupCoverage(const PathSet& paths, int k) {
  if (paths.num_edges() == 0) return 0;
  int covered = 0;
  for (EdgeId e = 0; e < paths.num_edges(); ++e) {
    if (static_cast<int>(paths.backup(e).size()) >= k) ++covered;
  }
  return static_cast<double>(covered) / paths.num_edges();
}

}  // namespace reweave
