#ifndef REWEAVE_PATHING_H
#define REWEAVE_PATHING_H

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "reweave/topology.h"

namespace reweave {

// A simple path. `edges[i]` joins `nodes[i]` and `nodes[i + 1]`.
struct Path {
  std::vector<NodeId> nodes;
  std::vector<EdgeId> edges;

  int hops() const { return static_cast<int>(edges.size()); }
  NodeId src() const { return nodes.front(); }
  NodeId dst() const { return nodes.back(); }
  bool Contains(EdgeId e) const;

  // True if any edge of the path is set in `edge_mask`.
  bool CrossesAny(std::span<const char> edge_mask) const;

  Path Reversed() const;

  bool operator==(const Path& other) const { return nodes == other.nodes; }
};

// Orders by hop count, then by the node-id sequence.
struct PathOrder {
  bool operator()(const Path& a, const Path& b) const {
    if (a.hops() != b.hops()) return a.hops() < b.hops();
    return a.nodes < b.nodes;
  }
};

// Builds a path from a node sequence. Throws Error(kInvalidArgument) if two
// consecutive nodes are not adjacent, a node repeats, or fewer than two nodes
// are given.
Path MakePath(const Topology& topology, std::vector<NodeId> nodes);

// Fewest-hops path from `s` to `d`, ties broken towards the smallest node-id
// sequence. `blocked_edges` / `blocked_nodes` are optional masks indexed by id.
std::optional<Path> ShortestPath(const Topology& topology, NodeId s, NodeId d,
                                 std::span<const char> blocked_edges = {},
                                 std::span<const char> blocked_nodes = {});

// Up to k loopless paths in increasing (hops, node sequence) order (Yen).
std::vector<Path> Ksp(const Topology& topology, NodeId s, NodeId d, int k,
                      std::span<const char> blocked_edges = {});

// Repeatedly takes the shortest path and deletes its edges, until k paths are
// found or s and d disconnect. The result is pairwise edge-disjoint.
std::vector<Path> Edksp(const Topology& topology, NodeId s, NodeId d, int k,
                        std::span<const char> blocked_edges = {});

enum class PathStrategy { kKsp, kEdksp };

const char* PathStrategyName(PathStrategy strategy);
std::optional<PathStrategy> ParsePathStrategy(std::string_view name);

struct PathSetOptions {
  int k = 8;
  // Backup budget per link; 0 means "same as k".
  int backup_k = 0;
  PathStrategy routing = PathStrategy::kEdksp;
  PathStrategy backup = PathStrategy::kKsp;
  // Worker threads for the per-pair map; 0 picks hardware concurrency.
  int threads = 0;

  int effective_backup_k() const { return backup_k > 0 ? backup_k : k; }
};

// Routing paths for every ordered pair plus per-link backup detours.
//
// Routing paths are stored flat: pair p owns paths [offset(p), offset(p+1)).
// A RatioConfig is a weight vector aligned with that flat order. Backup paths
// of link e run from e.src to e.dst and never contain e.
class PathSet {
 public:
  PathSet() = default;
  PathSet(int num_nodes, PathSetOptions options,
          std::vector<std::vector<Path>> routing_by_pair,
          std::vector<std::vector<Path>> backup_by_edge);

  const PathSetOptions& options() const { return options_; }
  int k() const { return options_.k; }
  int num_nodes() const { return num_nodes_; }
  int num_pairs() const { return num_nodes_ * (num_nodes_ - 1); }
  int num_edges() const { return static_cast<int>(backup_.size()); }
  int num_routing_paths() const { return static_cast<int>(routing_.size()); }

  int PairIndex(NodeId s, NodeId d) const {
    return s * (num_nodes_ - 1) + (d < s ? d : d - 1);
  }
  std::pair<NodeId, NodeId> PairAt(int pair) const {
    NodeId s = pair / (num_nodes_ - 1);
    NodeId d = pair % (num_nodes_ - 1);
    return {s, d >= s ? d + 1 : d};
  }

  int offset(int pair) const { return offsets_[pair]; }
  int path_count(int pair) const { return offsets_[pair + 1] - offsets_[pair]; }
  int pair_of_path(int flat) const { return pair_of_path_[flat]; }

  std::span<const Path> routing(int pair) const {
    return {routing_.data() + offsets_[pair],
            static_cast<size_t>(path_count(pair))};
  }
  std::span<const Path> routing(NodeId s, NodeId d) const {
    return routing(PairIndex(s, d));
  }
  const Path& routing_path(int flat) const { return routing_[flat]; }
  const std::vector<Path>& all_routing_paths() const { return routing_; }

  // Backup detours for link e, oriented e.src -> e.dst.
  std::span<const Path> backup(EdgeId e) const { return backup_[e]; }
  // The same detours oriented e.dst -> e.src.
  std::span<const Path> backup_reversed(EdgeId e) const {
    return backup_reversed_[e];
  }
  // Detours for e oriented to start at `from`.
  std::span<const Path> backup_from(EdgeId e, NodeId from) const;

  std::vector<EdgeId> edges_without_backup() const;

  // Counts backup paths per direction of travel, i.e. twice the stored
  // number since each link protects both directions.
  long directed_backup_count() const;

  bool operator==(const PathSet& other) const;

 private:
  int num_nodes_ = 0;
  PathSetOptions options_;
  std::vector<Path> routing_;
  std::vector<int> offsets_;
  std::vector<int> pair_of_path_;
  std::vector<std::vector<Path>> backup_;
  std::vector<std::vector<Path>> backup_reversed_;
};

// Routing lists for all ordered pairs and backup lists for every link. Links
// whose removal disconnects their endpoints get an empty backup list. Throws
// Error(kData) if the topology is disconnected.
PathSet BuildPathSet(const Topology& topology, const PathSetOptions& options);

// Largest fraction of the given paths that share one edge. Throws
// Error(kInvalidArgument) on an empty list.
double EdgeRisk(std::span<const Path> paths);

enum class RiskKind { kAdjacent, kNonAdjacent, kBackup };

struct RiskSummary {
  int count = 0;
  double mean = 0;
  double min = 0;
  double max = 0;
  double p50 = 0;
  double p90 = 0;
  double p99 = 0;
  // Ten bins over (0, 1]; bin i holds risks in (i/10, (i+1)/10].
  std::vector<int> histogram = std::vector<int>(10, 0);
};

// Distribution of EdgeRisk over the routing lists of adjacent or
// non-adjacent pairs, or over the non-empty backup lists.
RiskSummary RiskProfile(const Topology& topology, const PathSet& paths,
                        RiskKind kind);

struct DeltaF {
  double base = 0;     // extra load on e0 under source rerouting
  double reweave = 0;  // extra load on e0 under local weaving
  // Pairs that carried failed traffic but have no surviving routing path.
  std::vector<std::pair<NodeId, NodeId>> pairs_without_survivors;
};

// Expected extra load on link `e0` after `failed` goes down, for both
// recovery styles: failed traffic spread evenly over a pair's surviving
// routing paths, or over the failed link's backup detours.
DeltaF DeltaFModels(
    const PathSet& paths, EdgeId failed,
    const std::map<std::pair<NodeId, NodeId>, double>& failed_traffic,
    EdgeId e0);

// Fraction of links that have at least k backup paths.
double BackupCoverage(const PathSet& paths, int k);

}  // namespace reweave

#endif  // REWEAVE_PATHING_H
