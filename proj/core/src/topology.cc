#include "reweave/topology.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

#include "reweave/error.h"

namespace reweave {

std::optional<EdgeId> Topology::FindEdge(NodeId a, NodeId b) const {
  auto it = edge_index_.find({std::min(a, b), std::max(a, b)});
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> Topology::FindNode(std::string_view label) const {
  for (const Node& n : nodes_) {
    if (n.label == label) return n.id;
  }
  return std::nullopt;
}

bool Topology::IsConnectedWithout(std::span<const EdgeId> removed) const {
  if (nodes_.size() <= 1) return true;
  std::vector<char> dead(edges_.size(), 0);
  for (EdgeId e : removed) dead[e] = 1;

  std::vector<char> seen(nodes_.size(), 0);
  std::vector<NodeId> stack = {0};
  seen[0] = 1;
  size_t reached = 1;
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    for (EdgeId e : incident_[n]) {
      if (dead[e]) continue;
      NodeId m = edges_[e].Other(n);
      if (!seen[m]) {
        seen[m] = 1;
        ++reached;
        stack.push_back(m);
      }
    }
  }
  return reached == nodes_.size();
}

std::map<int, int> Topology::DegreeHistogram() const {
  std::map<int, int> out;
  for (const auto& inc : incident_) ++out[static_cast<int>(inc.size())];
  return out;
}

NodeId TopologyBuilder::AddNode(std::string_view label) {
  auto it = by_label_.find(label);
  if (it != by_label_.end()) return it->second;
  NodeId id = topology_.num_nodes();
  topology_.nodes_.push_back({id, std::string(label)});
  topology_.incident_.emplace_back();
  by_label_.emplace(std::string(label), id);
  return id;
}

EdgeId TopologyBuilder::AddEdge(NodeId a, NodeId b, double capacity) {
  const int n = topology_.num_nodes();
  if (a < 0 || b < 0 || a >= n || b >= n) {
    throw Error(ErrorKind::kInvalidArgument, "edge endpoint out of range");
  }
  const std::string& la = topology_.nodes_[a].label;
  const std::string& lb = topology_.nodes_[b].label;
  if (a == b) {
    throw Error(ErrorKind::kInvalidArgument, "self-loop at node " + la);
  }
  if (!(capacity > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "non-positive capacity on edge " + la + " " + lb);
  }
  auto key = std::make_pair(std::min(a, b), std::max(a, b));
  if (topology_.edge_index_.count(key)) {
    throw Error(ErrorKind::kInvalidArgument,
                "duplicate edge " + la + " " + lb);
  }
  EdgeId id = topology_.num_edges();
  topology_.edges_.push_back({id, a, b, capacity});
  topology_.incident_[a].push_back(id);
  topology_.incident_[b].push_back(id);
  topology_.edge_index_.emplace(key, id);
  return id;
}

EdgeId TopologyBuilder::AddEdge(std::string_view a, std::string_view b,
                                double capacity) {
  NodeId na = AddNode(a);
  NodeId nb = AddNode(b);
  return AddEdge(na, nb, capacity);
}

Topology TopologyBuilder::Build() && {
  by_label_.clear();
  return std::move(topology_);
}

namespace {

std::optional<double> ParseDouble(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

Topology LoadEdgeList(std::istream& in) {
  TopologyBuilder builder;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (size_t hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    std::vector<std::string_view> tokens = SplitWhitespace(view);
    if (tokens.empty()) continue;
    if (tokens.size() != 2 && tokens.size() != 3) {
      throw ParseError("expected 'src dst [capacity]', got " +
                           std::to_string(tokens.size()) + " fields",
                       line_no);
    }
    double capacity = 1.0;
    if (tokens.size() == 3) {
      std::optional<double> parsed = ParseDouble(tokens[2]);
      if (!parsed) {
        throw ParseError("bad capacity '" + std::string(tokens[2]) + "'",
                         line_no);
      }
      capacity = *parsed;
    }
    try {
      builder.AddEdge(tokens[0], tokens[1], capacity);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return std::move(builder).Build();
}

// Just enough XML to walk a GraphML document: tags with attributes, text
// between tags, comments and processing instructions skipped.
class XmlScanner {
 public:
  struct Tag {
    std::string name;
    std::map<std::string, std::string> attrs;
    bool closing = false;
    bool self_closing = false;
    int line = 0;
  };

  explicit XmlScanner(std::string text) : text_(std::move(text)) {}

  // Returns false at end of input. Text before the tag goes to `text`.
  bool Next(Tag* tag, std::string* text) {
    text->clear();
    while (true) {
      size_t lt = text_.find('<', pos_);
      if (lt == std::string::npos) {
        Advance(text_.size());
        return false;
      }
      text->append(text_, pos_, lt - pos_);
      Advance(lt);
      if (text_.compare(pos_, 4, "<!--") == 0) {
        SkipPast("-->");
        continue;
      }
      if (text_.compare(pos_, 2, "<?") == 0) {
        SkipPast("?>");
        continue;
      }
      if (text_.compare(pos_, 2, "<!") == 0) {
        SkipPast(">");
        continue;
      }
      ParseTag(tag);
      return true;
    }
  }

  int line() const { return line_; }

 private:
  void Advance(size_t to) {
    line_ += static_cast<int>(std::count(text_.begin() + pos_,
                                         text_.begin() + to, '\n'));
    pos_ = to;
  }

  void SkipPast(const char* terminator) {
    size_t end = text_.find(terminator, pos_);
    if (end == std::string::npos) {
      throw ParseError("unterminated markup", line_);
    }
    Advance(end + std::char_traits<char>::length(terminator));
  }

  void SkipSpace() {
    size_t i = pos_;
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i])))
      ++i;
    Advance(i);
  }

  std::string ReadName() {
    size_t i = pos_;
    while (i < text_.size() && !std::isspace(static_cast<unsigned char>(text_[i])) &&
           text_[i] != '>' && text_[i] != '/' && text_[i] != '=') {
      ++i;
    }
    std::string out = text_.substr(pos_, i - pos_);
    Advance(i);
    return out;
  }

  void ParseTag(Tag* tag) {
    *tag = Tag{};
    tag->line = line_;
    Advance(pos_ + 1);  // '<'
    if (pos_ < text_.size() && text_[pos_] == '/') {
      tag->closing = true;
      Advance(pos_ + 1);
    }
    tag->name = ReadName();
    if (tag->name.empty()) throw ParseError("empty tag name", line_);
    while (true) {
      SkipSpace();
      if (pos_ >= text_.size()) throw ParseError("unterminated tag", line_);
      char c = text_[pos_];
      if (c == '>') {
        Advance(pos_ + 1);
        return;
      }
      if (c == '/') {
        if (pos_ + 1 >= text_.size() || text_[pos_ + 1] != '>') {
          throw ParseError("stray '/' in tag", line_);
        }
        tag->self_closing = true;
        Advance(pos_ + 2);
        return;
      }
      std::string attr = ReadName();
      if (attr.empty()) throw ParseError("malformed attribute", line_);
      SkipSpace();
      if (pos_ >= text_.size() || text_[pos_] != '=') {
        throw ParseError("attribute '" + attr + "' has no value", line_);
      }
      Advance(pos_ + 1);
      SkipSpace();
      if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\'')) {
        throw ParseError("attribute '" + attr + "' is not quoted", line_);
      }
      char quote = text_[pos_];
      size_t end = text_.find(quote, pos_ + 1);
      if (end == std::string::npos) {
        throw ParseError("unterminated attribute value", line_);
      }
      tag->attrs[attr] = Unescape(text_.substr(pos_ + 1, end - pos_ - 1));
      Advance(end + 1);
    }
  }

  static std::string Unescape(const std::string& s) {
    static const std::pair<const char*, char> kEntities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'},
        {"&quot;", '"'}, {"&apos;", '\''}};
    std::string out;
    for (size_t i = 0; i < s.size();) {
      bool matched = false;
      if (s[i] == '&') {
        for (const auto& [entity, ch] : kEntities) {
          size_t len = std::char_traits<char>::length(entity);
          if (s.compare(i, len, entity) == 0) {
            out.push_back(ch);
            i += len;
            matched = true;
            break;
          }
        }
      }
      if (!matched) out.push_back(s[i++]);
    }
    return out;
  }

  std::string text_;
  size_t pos_ = 0;
  int line_ = 1;
};

std::string ToLower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string Trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

Topology LoadGraphmlLite(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  XmlScanner scanner(buffer.str());

  struct PendingEdge {
    std::string source;
    std::string target;
    double capacity = 1.0;
    int line = 0;
  };

  std::vector<std::string> capacity_keys;
  std::vector<std::string> node_ids;
  std::vector<PendingEdge> edges;
  PendingEdge* open_edge = nullptr;
  std::string open_data_key;
  bool in_data = false;

  XmlScanner::Tag tag;
  std::string text;
  while (scanner.Next(&tag, &text)) {
    if (in_data && tag.closing && tag.name == "data") {
      in_data = false;
      if (open_edge != nullptr &&
          std::find(capacity_keys.begin(), capacity_keys.end(),
                    open_data_key) != capacity_keys.end()) {
        std::string value = Trim(text);
        std::optional<double> parsed = ParseDouble(value);
        if (!parsed) {
          throw ParseError("bad capacity '" + value + "'", tag.line);
        }
        open_edge->capacity = *parsed;
      }
      continue;
    }
    if (tag.closing) {
      if (tag.name == "edge") open_edge = nullptr;
      continue;
    }
    if (tag.name == "key") {
      auto id = tag.attrs.find("id");
      auto attr_name = tag.attrs.find("attr.name");
      auto for_what = tag.attrs.find("for");
      bool for_edges = for_what == tag.attrs.end() ||
                       for_what->second == "edge" || for_what->second == "all";
      if (id != tag.attrs.end() && for_edges &&
          (ToLower(id->second) == "capacity" ||
           (attr_name != tag.attrs.end() &&
            ToLower(attr_name->second) == "capacity"))) {
        capacity_keys.push_back(id->second);
      }
    } else if (tag.name == "node") {
      auto id = tag.attrs.find("id");
      if (id == tag.attrs.end()) throw ParseError("node without id", tag.line);
      node_ids.push_back(id->second);
    } else if (tag.name == "edge") {
      auto src = tag.attrs.find("source");
      auto dst = tag.attrs.find("target");
      if (src == tag.attrs.end() || dst == tag.attrs.end()) {
        throw ParseError("edge without source/target", tag.line);
      }
      edges.push_back({src->second, dst->second, 1.0, tag.line});
      open_edge = tag.self_closing ? nullptr : &edges.back();
    } else if (tag.name == "data" && !tag.self_closing) {
      auto key = tag.attrs.find("key");
      open_data_key = key == tag.attrs.end() ? "" : key->second;
      in_data = true;
    }
  }

  TopologyBuilder builder;
  std::map<std::string, NodeId> declared;
  for (const std::string& id : node_ids) {
    if (declared.count(id)) throw ParseError("duplicate node id " + id, 0);
    declared[id] = builder.AddNode(id);
  }
  for (const PendingEdge& e : edges) {
    auto a = declared.find(e.source);
    auto b = declared.find(e.target);
    if (a == declared.end() || b == declared.end()) {
      throw ParseError("edge references undeclared node", e.line);
    }
    try {
      builder.AddEdge(a->second, b->second, e.capacity);
    } catch (const Error& err) {
      throw ParseError(err.what(), e.line);
    }
  }
  return std::move(builder).Build();
}

}  // namespace

Topology LoadTopology(std::istream& in, TopologyFormat format) {
  switch (format) {
    case TopologyFormat::kEdgeList:
      return LoadEdgeList(in);
    case TopologyFormat::kGraphmlLite:
      return LoadGraphmlLite(in);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown topology format");
}

Topology LoadTopologyFile(const std::string& path, TopologyFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kData, "cannot open topology file " + path);
  try {
    return LoadTopology(in, format);
  } catch (const ParseError& e) {
    throw Error(ErrorKind::kData, path + ": " + e.what());
  }
}

TopologyFormat FormatForPath(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.substr(path.size() - suffix.size()) == suffix;
  };
  if (ends_with(".graphml") || ends_with(".xml")) {
    return TopologyFormat::kGraphmlLite;
  }
  return TopologyFormat::kEdgeList;
}

std::optional<TopologyFormat> ParseTopologyFormat(std::string_view name) {
  if (name == "edge-list") return TopologyFormat::kEdgeList;
  if (name == "graphml-lite" || name == "graphml") {
    return TopologyFormat::kGraphmlLite;
  }
  return std::nullopt;
}

std::string SerializeEdgeList(const Topology& topology) {
  std::ostringstream out;
  out.precision(17);
  for (const Edge& e : topology.edges()) {
    out << topology.node(e.src).label << ' ' << topology.node(e.dst).label
        << ' ' << e.capacity << '\n';
  }
  return out.str();
}

PruneResult PruneDegreeOne(const Topology& topology) {
  const int n = topology.num_nodes();
  std::vector<int> degree(n);
  std::vector<char> node_alive(n, 1);
  std::vector<char> edge_alive(topology.num_edges(), 1);
  std::queue<NodeId> queue;
  for (NodeId v = 0; v < n; ++v) {
    degree[v] = topology.degree(v);
    if (degree[v] <= 1) queue.push(v);
  }
  while (!queue.empty()) {
    NodeId v = queue.front();
    queue.pop();
    if (!node_alive[v]) continue;
    node_alive[v] = 0;
    for (EdgeId e : topology.incident(v)) {
      if (!edge_alive[e]) continue;
      edge_alive[e] = 0;
      NodeId u = topology.edge(e).Other(v);
      if (--degree[u] <= 1 && node_alive[u]) queue.push(u);
    }
  }

  PruneResult result;
  result.node_map.assign(n, -1);
  result.edge_map.assign(topology.num_edges(), -1);
  TopologyBuilder builder;
  for (NodeId v = 0; v < n; ++v) {
    if (node_alive[v]) result.node_map[v] = builder.AddNode(topology.node(v).label);
  }
  if (builder.num_nodes() == 0) {
    throw Error(ErrorKind::kData,
                "topology degenerates: pruning degree-one nodes removes "
                "every node");
  }
  for (const Edge& e : topology.edges()) {
    if (!edge_alive[e.id]) continue;
    result.edge_map[e.id] = builder.AddEdge(result.node_map[e.src],
                                            result.node_map[e.dst], e.capacity);
  }
  result.topology = std::move(builder).Build();
  if (!result.topology.IsConnected()) {
    throw Error(ErrorKind::kData, "topology is disconnected after pruning");
  }
  return result;
}

Topology GenerateRandomTopology(int num_nodes, double avg_degree,
                                std::uint64_t seed, double capacity) {
  if (num_nodes < 3) {
    throw Error(ErrorKind::kInvalidArgument,
                "random topology needs at least 3 nodes");
  }
  std::mt19937_64 rng(seed);
  std::vector<NodeId> order(num_nodes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  TopologyBuilder builder;
  for (int i = 0; i < num_nodes; ++i) builder.AddNode("n" + std::to_string(i));

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::map<std::pair<NodeId, NodeId>, bool> present;
  auto add = [&](NodeId a, NodeId b) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    if (a == b || present.count(key)) return false;
    present[key] = true;
    edges.push_back(key);
    return true;
  };
  for (int i = 0; i < num_nodes; ++i) add(order[i], order[(i + 1) % num_nodes]);

  const long max_edges = static_cast<long>(num_nodes) * (num_nodes - 1) / 2;
  long target = std::lround(avg_degree * num_nodes / 2.0);
  target = std::clamp<long>(target, num_nodes, max_edges);
  std::uniform_int_distribution<NodeId> pick(0, num_nodes - 1);
  while (static_cast<long>(edges.size()) < target) add(pick(rng), pick(rng));

  std::sort(edges.begin(), edges.end());
  for (const auto& [a, b] : edges) builder.AddEdge(a, b, capacity);
  return std::move(builder).Build();
}

}  // namespace reweave
