#include "testing/oracles.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

namespace reweave::testing {
namespace {

struct Hop {
  NodeId from;
  NodeId to;
  EdgeId edge;
};

struct Walk {
  std::vector<EdgeId> edges;
  double prob = 1;
};

std::vector<Hop> Hops(const Topology& t, const std::vector<NodeId>& nodes) {
  std::vector<Hop> out;
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    out.push_back({nodes[i], nodes[i + 1], *t.FindEdge(nodes[i], nodes[i + 1])});
  }
  return out;
}

// Detours for `e` that start at `from`, re-derived from the stored lists.
std::vector<std::vector<NodeId>> Detours(const Topology& t, const PathSet& ps,
                                         EdgeId e, NodeId from) {
  std::vector<std::vector<NodeId>> out;
  for (const Path& p : ps.backup(e)) {
    std::vector<NodeId> nodes = p.nodes;
    if (t.edge(e).src != from) std::reverse(nodes.begin(), nodes.end());
    out.push_back(nodes);
  }
  return out;
}

class Expander {
 public:
  Expander(const Topology& t, const PathSet& ps, const std::vector<char>& failed,
           int max_level)
      : t_(t), ps_(ps), failed_(failed), max_level_(max_level) {}

  // All concrete walks for `hops`, or nullopt if some failed hop is stuck.
  std::optional<std::vector<Walk>> Expand(const std::vector<Hop>& hops,
                                          int level) {
    std::vector<Walk> partial = {Walk{}};
    for (const Hop& h : hops) {
      std::vector<Walk> options;
      if (!failed_[h.edge]) {
        options.push_back({{h.edge}, 1.0});
      } else {
        auto detours = Detours(t_, ps_, h.edge, h.from);
        std::vector<std::vector<NodeId>> alive;
        for (const auto& d : detours) {
          bool ok = true;
          for (const Hop& dh : Hops(t_, d)) ok = ok && !failed_[dh.edge];
          if (ok) alive.push_back(d);
        }
        if (!alive.empty()) {
          for (const auto& d : alive) {
            Walk w;
            for (const Hop& dh : Hops(t_, d)) w.edges.push_back(dh.edge);
            w.prob = 1.0 / alive.size();
            options.push_back(w);
          }
        } else if (!detours.empty() && level < max_level_) {
          for (const auto& d : detours) {
            auto sub = Expand(Hops(t_, d), level + 1);
            if (!sub) return std::nullopt;
            for (Walk& w : *sub) {
              w.prob /= detours.size();
              options.push_back(w);
            }
          }
        } else {
          return std::nullopt;
        }
      }
      std::vector<Walk> next;
      for (const Walk& a : partial) {
        for (const Walk& b : options) {
          Walk w = a;
          w.edges.insert(w.edges.end(), b.edges.begin(), b.edges.end());
          w.prob *= b.prob;
          next.push_back(std::move(w));
        }
      }
      partial = std::move(next);
    }
    return partial;
  }

 private:
  const Topology& t_;
  const PathSet& ps_;
  const std::vector<char>& failed_;
  int max_level_;
};

}  // namespace

std::vector<std::vector<NodeId>> AllSimplePaths(const Topology& topology,
                                                NodeId s, NodeId d,
                                                const std::vector<char>& blocked) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> stack = {s};
  std::vector<char> on(topology.num_nodes(), 0);
  on[s] = 1;
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    if (u == d) {
      out.push_back(stack);
      return;
    }
    for (EdgeId e : topology.incident(u)) {
      if (!blocked.empty() && blocked[e]) continue;
      NodeId v = topology.edge(e).Other(u);
      if (on[v]) continue;
      on[v] = 1;
      stack.push_back(v);
      dfs(v);
      stack.pop_back();
      on[v] = 0;
    }
  };
  dfs(s);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

double GridSearchMinMlu(const Topology& topology, const PathSet& paths,
                        const DemandMatrix& demand, double step) {
  std::vector<int> pairs;
  for (int p = 0; p < paths.num_pairs(); ++p) {
    auto [s, d] = paths.PairAt(p);
    if (demand.at(s, d) > 0) pairs.push_back(p);
  }
  if (pairs.size() > 2) throw std::invalid_argument("at most two pairs");
  const int units = static_cast<int>(std::lround(1.0 / step));
  const int m = topology.num_edges();

  // All compositions of `units` into `count` parts.
  auto compositions = [&](int count) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(count, 0);
    std::function<void(int, int)> rec = [&](int i, int left) {
      if (i == count - 1) {
        cur[i] = left;
        out.push_back(cur);
        return;
      }
      for (int v = 0; v <= left; ++v) {
        cur[i] = v;
        rec(i + 1, left - v);
      }
    };
    rec(0, units);
    return out;
  };

  // Per pair, the utilization vector of every grid point, accumulated hop
  // by hop from the stored node sequences.
  std::vector<std::vector<std::vector<double>>> grids;
  for (int p : pairs) {
    auto [s, d] = paths.PairAt(p);
    const double volume = demand.at(s, d);
    std::vector<std::vector<double>> utils;
    for (const auto& c : compositions(paths.path_count(p))) {
      std::vector<double> u(m, 0.0);
      for (size_t i = 0; i < c.size(); ++i) {
        const auto& nodes = paths.routing(p)[i].nodes;
        for (size_t h = 0; h + 1 < nodes.size(); ++h) {
          EdgeId e = *topology.FindEdge(nodes[h], nodes[h + 1]);
          u[e] += volume * c[i] / units / topology.edge(e).capacity;
        }
      }
      utils.push_back(std::move(u));
    }
    grids.push_back(std::move(utils));
  }

  if (grids.empty()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  if (grids.size() == 1) {
    for (const auto& u : grids[0]) {
      best = std::min(best, *std::max_element(u.begin(), u.end()));
    }
    return best;
  }
  for (const auto& a : grids[0]) {
    for (const auto& b : grids[1]) {
      double worst = 0;
      for (int e = 0; e < m && worst < best; ++e) {
        worst = std::max(worst, a[e] + b[e]);
      }
      best = std::min(best, worst);
    }
  }
  return best;
}

OracleRecovery ExpandWeave(const Topology& topology, const PathSet& paths,
                           const DemandMatrix& demand,
                           const RatioConfig& ratios,
                           const std::vector<EdgeId>& failed) {
  std::vector<char> mask(topology.num_edges(), 0);
  for (EdgeId e : failed) mask[e] = 1;
  Expander expander(topology, paths, mask, static_cast<int>(failed.size()));
  OracleRecovery out;
  out.load.assign(topology.num_edges(), 0.0);
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    auto [s, d] = paths.PairAt(pair);
    const double volume = demand.at(s, d);
    if (volume == 0) continue;
    std::vector<std::optional<std::vector<Walk>>> walks;
    std::vector<bool> intact;
    double broken = 0;
    double alive = 0;
    int alive_count = 0;
    for (const Path& p : paths.routing(pair)) {
      const double w = ratios.weights[paths.offset(pair) + walks.size()];
      bool hit = false;
      for (EdgeId e : p.edges) hit = hit || mask[e];
      intact.push_back(!hit);
      walks.push_back(expander.Expand(Hops(topology, p.nodes), 1));
      if (walks.back()) {
        alive += w;
        ++alive_count;
        (hit ? out.weaved : out.planned) += volume * w;
      } else {
        broken += w;
      }
    }
    double extra_scale = 0;
    if (broken > 0) {
      if (alive_count == 0) {
        out.dropped += volume * broken;
      } else {
        out.rerouted += volume * broken;
        extra_scale = alive > 0 ? broken / alive : 0;
      }
    }
    for (size_t i = 0; i < walks.size(); ++i) {
      if (!walks[i]) continue;
      double w = ratios.weights[paths.offset(pair) + i];
      w += alive > 0 ? w * extra_scale
                     : (broken > 0 ? broken / alive_count : 0.0);
      for (const Walk& walk : *walks[i]) {
        for (EdgeId e : walk.edges) out.load[e] += volume * w * walk.prob;
      }
    }
  }
  return out;
}

}  // namespace reweave::testing
