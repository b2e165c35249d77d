#include "reweave/failure.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>

#include "reweave/error.h"

namespace reweave {
namespace {

using Contribution = std::vector<std::pair<EdgeId, double>>;

std::vector<char> FailedMask(const Topology& topology,
                             const FailureScenario& scenario) {
  std::vector<char> mask(topology.num_edges(), 0);
  for (EdgeId e : scenario.failed_edges) mask[e] = 1;
  return mask;
}

void AddScaled(std::map<EdgeId, double>& acc, const Contribution& c,
               double scale) {
  for (const auto& [e, v] : c) acc[e] += v * scale;
}

// Expected per-edge traversal counts for one unit of traffic crossing a failed
// link, memoized per (link, direction, nesting level).
class Weaver {
 public:
  Weaver(const Topology& topology, const PathSet& paths,
         const std::vector<char>& failed, int max_level)
      : topology_(topology),
        paths_(paths),
        failed_(failed),
        max_level_(max_level) {}

  const std::optional<Contribution>& Hop(EdgeId e, NodeId from, int level) {
    const bool forward = topology_.edge(e).src == from;
    auto key = std::make_tuple(e, forward, level);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    std::optional<Contribution> out;
    std::span<const Path> detours = paths_.backup_from(e, from);
    std::vector<const Path*> surviving;
    for (const Path& b : detours) {
      if (!b.CrossesAny(failed_)) surviving.push_back(&b);
    }
    std::map<EdgeId, double> acc;
    if (!surviving.empty()) {
      const double share = 1.0 / surviving.size();
      for (const Path* b : surviving) {
        for (EdgeId be : b->edges) acc[be] += share;
      }
      out = Contribution(acc.begin(), acc.end());
    } else if (!detours.empty() && level < max_level_) {
      const double share = 1.0 / detours.size();
      bool ok = true;
      for (const Path& b : detours) {
        std::optional<Contribution> sub = Walk(b, level + 1);
        if (!sub) {
          ok = false;
          break;
        }
        AddScaled(acc, *sub, share);
      }
      if (ok) out = Contribution(acc.begin(), acc.end());
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

  // Traversal counts for a whole path whose failed hops are woven at
  // `level`; nullopt if some hop cannot be woven.
  std::optional<Contribution> Walk(const Path& path, int level) {
    std::map<EdgeId, double> acc;
    for (int i = 0; i < path.hops(); ++i) {
      EdgeId e = path.edges[i];
      if (!failed_[e]) {
        acc[e] += 1.0;
        continue;
      }
      const std::optional<Contribution>& sub = Hop(e, path.nodes[i], level);
      if (!sub) return std::nullopt;
      AddScaled(acc, *sub, 1.0);
    }
    return Contribution(acc.begin(), acc.end());
  }

 private:
  const Topology& topology_;
  const PathSet& paths_;
  std::span<const char> failed_;
  int max_level_;
  std::map<std::tuple<EdgeId, bool, int>, std::optional<Contribution>> memo_;
};

void CheckInputs(const Topology& topology, const PathSet& paths,
                 const DemandMatrix& demand, const RatioConfig& ratios,
                 const FailureScenario& scenario) {
  if (demand.num_nodes() != paths.num_nodes() ||
      topology.num_edges() != paths.num_edges() ||
      static_cast<int>(ratios.weights.size()) != paths.num_routing_paths()) {
    throw Error(ErrorKind::kInvalidArgument,
                "ratios, demand and path set dimensions do not match");
  }
  ValidateScenario(topology, scenario);
}

WovenLoad RecoverImpl(Regime regime, const Topology& topology,
                      const PathSet& paths, const DemandMatrix& demand,
                      const RatioConfig& ratios,
                      const FailureScenario& scenario) {
  CheckInputs(topology, paths, demand, ratios, scenario);
  const std::vector<char> failed = FailedMask(topology, scenario);
  Weaver weaver(topology, paths, failed,
                static_cast<int>(scenario.failed_edges.size()));

  WovenLoad out;
  out.load.flow.assign(topology.num_edges(), 0.0);
  out.pair_dropped.assign(paths.num_pairs(), 0.0);

  enum class State { kIntact, kWoven, kBroken };
  std::vector<State> state;
  std::vector<std::optional<Contribution>> woven;
  std::vector<double> weight;

  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    auto [s, d] = paths.PairAt(pair);
    const double volume = demand.at(s, d);
    if (volume == 0.0) continue;
    const int first = paths.offset(pair);
    const int count = paths.path_count(pair);
    state.assign(count, State::kIntact);
    woven.assign(count, std::nullopt);
    weight.assign(ratios.weights.begin() + first,
                  ratios.weights.begin() + first + count);

    double broken = 0;
    double deliverable = 0;
    int deliverable_count = 0;
    for (int i = 0; i < count; ++i) {
      const Path& p = paths.routing_path(first + i);
      if (p.CrossesAny(failed)) {
        state[i] = State::kBroken;
        if (regime == Regime::kWeave) {
          woven[i] = weaver.Walk(p, 1);
          if (woven[i]) state[i] = State::kWoven;
        }
      }
      if (state[i] == State::kBroken) {
        broken += weight[i];
      } else {
        deliverable += weight[i];
        ++deliverable_count;
        (state[i] == State::kIntact ? out.planned : out.weaved) +=
            volume * weight[i];
      }
    }

    if (broken > 0.0) {
      if (regime != Regime::kNoReaction && deliverable_count > 0) {
        for (int i = 0; i < count; ++i) {
          if (state[i] == State::kBroken) continue;
          weight[i] += deliverable > 0.0 ? broken * weight[i] / deliverable
                                         : broken / deliverable_count;
        }
        out.rerouted += volume * broken;
      } else {
        out.dropped += volume * broken;
        out.pair_dropped[pair] = broken;
      }
    }

    for (int i = 0; i < count; ++i) {
      if (state[i] == State::kBroken || weight[i] == 0.0) continue;
      const double share = volume * weight[i];
      if (state[i] == State::kIntact) {
        for (EdgeId e : paths.routing_path(first + i).edges) {
          out.load.flow[e] += share;
        }
      } else {
        for (const auto& [e, v] : *woven[i]) out.load.flow[e] += share * v;
      }
    }
  }
  return out;
}

}  // namespace

const char* RegimeName(Regime regime) {
  switch (regime) {
    case Regime::kWeave:
      return "weave";
    case Regime::kSourceReroute:
      return "source_reroute";
    case Regime::kNoReaction:
      return "no_reaction";
  }
  return "unknown";
}

std::optional<Regime> ParseRegime(std::string_view name) {
  if (name == "weave") return Regime::kWeave;
  if (name == "source_reroute") return Regime::kSourceReroute;
  if (name == "no_reaction") return Regime::kNoReaction;
  return std::nullopt;
}

void ValidateScenario(const Topology& topology,
                      const FailureScenario& scenario) {
  if (scenario.failed_edges.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "failure scenario is empty");
  }
  std::vector<EdgeId> sorted = scenario.failed_edges;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::kInvalidArgument,
                "failure scenario repeats a link");
  }
  if (sorted.front() < 0 || sorted.back() >= topology.num_edges()) {
    throw Error(ErrorKind::kInvalidArgument,
                "failure scenario names an unknown link");
  }
  if (!(scenario.weight >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "scenario weight must be non-negative");
  }
}

std::vector<FailureScenario> SampleScenarios(const Topology& topology,
                                             int count, int simultaneous,
                                             std::uint64_t seed,
                                             ScenarioSampleStats* stats) {
  const int m = topology.num_edges();
  if (simultaneous < 1 || simultaneous >= m) {
    throw Error(ErrorKind::kInvalidArgument,
                "simultaneous failures must be in [1, " + std::to_string(m) +
                    ")");
  }
  if (count < 1) {
    throw Error(ErrorKind::kInvalidArgument, "scenario count must be >= 1");
  }
  ScenarioSampleStats local;
  std::mt19937_64 rng(seed);
  std::vector<EdgeId> ids(m);
  std::vector<FailureScenario> out;
  constexpr int kMaxRejectsInARow = 2000;
  int rejects_in_a_row = 0;
  bool checked_exists = false;
  while (static_cast<int>(out.size()) < count) {
    std::iota(ids.begin(), ids.end(), 0);
    // Partial Fisher-Yates: the first `simultaneous` ids are a uniform draw.
    for (int i = 0; i < simultaneous; ++i) {
      std::uniform_int_distribution<int> pick(i, m - 1);
      std::swap(ids[i], ids[pick(rng)]);
    }
    std::vector<EdgeId> chosen(ids.begin(), ids.begin() + simultaneous);
    std::sort(chosen.begin(), chosen.end());
    ++local.drawn;
    if (topology.IsConnectedWithout(chosen)) {
      out.push_back({std::move(chosen), 1.0 / count});
      rejects_in_a_row = 0;
      continue;
    }
    ++local.resampled;
    if (++rejects_in_a_row < kMaxRejectsInARow || checked_exists) continue;
    // Many rejections in a row: confirm by enumeration that a valid choice
    // exists at all before drawing further.
    checked_exists = true;
    std::vector<char> select(m, 0);
    std::fill(select.begin(), select.begin() + simultaneous, 1);
    bool found = false;
    do {
      std::vector<EdgeId> combo;
      for (int i = 0; i < m; ++i) {
        if (select[i]) combo.push_back(i);
      }
      found = topology.IsConnectedWithout(combo);
    } while (!found && std::prev_permutation(select.begin(), select.end()));
    if (!found) {
      throw Error(ErrorKind::kData,
                  "no set of " + std::to_string(simultaneous) +
                      " links can fail without disconnecting the topology");
    }
  }
  if (stats) *stats = local;
  return out;
}

WovenLoad Weave(const Topology& topology, const PathSet& paths,
                const DemandMatrix& demand, const RatioConfig& ratios,
                const FailureScenario& scenario) {
  return RecoverImpl(Regime::kWeave, topology, paths, demand, ratios,
                     scenario);
}

WovenLoad SourceReroute(const Topology& topology, const PathSet& paths,
                        const DemandMatrix& demand, const RatioConfig& ratios,
                        const FailureScenario& scenario) {
  return RecoverImpl(Regime::kSourceReroute, topology, paths, demand, ratios,
                     scenario);
}

WovenLoad NoReaction(const Topology& topology, const PathSet& paths,
                     const DemandMatrix& demand, const RatioConfig& ratios,
                     const FailureScenario& scenario) {
  return RecoverImpl(Regime::kNoReaction, topology, paths, demand, ratios,
                     scenario);
}

WovenLoad Recover(Regime regime, const Topology& topology,
                  const PathSet& paths, const DemandMatrix& demand,
                  const RatioConfig& ratios, const FailureScenario& scenario) {
  return RecoverImpl(regime, topology, paths, demand, ratios, scenario);
}

}  // namespace reweave
