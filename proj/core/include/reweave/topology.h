#ifndef REWEAVE_TOPOLOGY_H
#define REWEAVE_TOPOLOGY_H

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reweave {

using NodeId = int;
using EdgeId = int;

struct Node {
  NodeId id = 0;
  std::string label;

  bool operator==(const Node&) const = default;
};

// An undirected link. Traffic in both directions is accounted onto the same
// record, so a single capacity applies to the sum.
struct Edge {
  EdgeId id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  double capacity = 1.0;

  NodeId Other(NodeId n) const { return n == src ? dst : src; }
  bool Touches(NodeId n) const { return n == src || n == dst; }

  bool operator==(const Edge&) const = default;
};

// Capacitated undirected graph with dense node and edge ids. Immutable once
// built; use TopologyBuilder to construct one.
class Topology {
 public:
  Topology() = default;

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Node& node(NodeId id) const { return nodes_[id]; }
  const Edge& edge(EdgeId id) const { return edges_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const EdgeId> incident(NodeId n) const { return incident_[n]; }
  int degree(NodeId n) const { return static_cast<int>(incident_[n].size()); }

  std::optional<EdgeId> FindEdge(NodeId a, NodeId b) const;
  std::optional<NodeId> FindNode(std::string_view label) const;

  // True when every node reaches every other node. The empty graph and the
  // single-node graph count as connected.
  bool IsConnected() const { return IsConnectedWithout({}); }

  // Connectivity of the graph with the given edges removed.
  bool IsConnectedWithout(std::span<const EdgeId> removed) const;

  // Degree -> number of nodes with that degree.
  std::map<int, int> DegreeHistogram() const;

  bool operator==(const Topology& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  friend class TopologyBuilder;

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> incident_;
  std::map<std::pair<NodeId, NodeId>, EdgeId> edge_index_;
};

class TopologyBuilder {
 public:
  // Returns the id of the node with this label, creating it on first use.
  NodeId AddNode(std::string_view label);

  // Throws Error(kInvalidArgument) on self-loops, duplicate node pairs and
  // non-positive capacities.
  EdgeId AddEdge(NodeId a, NodeId b, double capacity = 1.0);
  EdgeId AddEdge(std::string_view a, std::string_view b,
                 double capacity = 1.0);

  int num_nodes() const { return topology_.num_nodes(); }

  Topology Build() &&;

 private:
  Topology topology_;
  std::map<std::string, NodeId, std::less<>> by_label_;
};

enum class TopologyFormat {
  kEdgeList,
  kGraphmlLite,
};

// Parses "edge-list" or "graphml-lite" input. Capacities default to 1.0 when
// the input does not carry them. Throws ParseError with the offending line on
// malformed input, self-loops and duplicate edges.
Topology LoadTopology(std::istream& in, TopologyFormat format);
Topology LoadTopologyFile(const std::string& path, TopologyFormat format);

// Picks the format from the file extension (.graphml/.xml vs anything else).
TopologyFormat FormatForPath(std::string_view path);
std::optional<TopologyFormat> ParseTopologyFormat(std::string_view name);

// Writes the edge-list form. Loading the result of serializing a topology
// that was itself loaded from an edge list gives back an equal Topology.
std::string SerializeEdgeList(const Topology& topology);

struct PruneResult {
  Topology topology;
  // Old id -> new id, or -1 when the element was removed.
  std::vector<NodeId> node_map;
  std::vector<EdgeId> edge_map;
};

// Repeatedly removes nodes of degree <= 1 (and their links), then
// re-densifies ids preserving relative order. Throws Error(kData) when
// nothing survives or when the survivor is disconnected.
PruneResult PruneDegreeOne(const Topology& topology);

// Random 2-edge-connected graph: a random Hamiltonian cycle plus random
// chords until the average degree reaches `avg_degree`. Used for synthetic
// experiments and tests.
Topology GenerateRandomTopology(int num_nodes, double avg_degree,
                                std::uint64_t seed, double capacity = 1.0);

}  // namespace reweave

#endif  // REWEAVE_TOPOLOGY_H
