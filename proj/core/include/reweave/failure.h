#ifndef REWEAVE_FAILURE_H
#define REWEAVE_FAILURE_H

#include <cstdint>
#include <string_view>
#include <optional>
#include <span>
#include <vector>

#include "reweave/demand.h"
#include "reweave/pathing.h"
#include "reweave/te.h"
#include "reweave/topology.h"

namespace reweave {

struct FailureScenario {
  std::vector<EdgeId> failed_edges;  // sorted, distinct
  double weight = 1.0;

  bool operator==(const FailureScenario&) const = default;
};

struct ScenarioSampleStats {
  int drawn = 0;
  int resampled = 0;  // draws rejected because they disconnected the graph
};

// `count` scenarios of `simultaneous` distinct links each, chosen uniformly
// and redrawn whenever the residual topology is disconnected. Weights are
// 1/count. Throws Error(kInvalidArgument) unless 1 <= simultaneous <
// num_edges, and Error(kData) when no connectivity-preserving choice exists.
std::vector<FailureScenario> SampleScenarios(
    const Topology& topology, int count, int simultaneous, std::uint64_t seed,
    ScenarioSampleStats* stats = nullptr);

// Throws Error(kInvalidArgument) on empty, repeated or out-of-range ids.
void ValidateScenario(const Topology& topology,
                      const FailureScenario& scenario);

// Link loads after recovery, plus where every unit of demand ended up:
//   planned + weaved + rerouted + dropped == total demand.
struct WovenLoad {
  LinkLoad load;
  double planned = 0;   // on paths untouched by the failure
  double weaved = 0;    // on failed paths, carried around the failure locally
  double rerouted = 0;  // moved to other paths of the same pair at the source
  double dropped = 0;
  // Dropped fraction of each pair's demand, indexed like PathSet pairs.
  std::vector<double> pair_dropped;

  double total() const { return planned + weaved + rerouted + dropped; }
};

enum class Regime { kWeave, kSourceReroute, kNoReaction };

const char* RegimeName(Regime regime);
std::optional<Regime> ParseRegime(std::string_view name);

// Local weaving. Traffic of a path reaching a failed link is split evenly
// over that link's surviving backup detours and then continues along the
// path. When every detour of a link is itself cut, each detour is woven
// again, nesting at most |failed| levels. A path that cannot be woven is
// handed to source rerouting over the pair's deliverable paths, or dropped.
WovenLoad Weave(const Topology& topology, const PathSet& paths,
                const DemandMatrix& demand, const RatioConfig& ratios,
                const FailureScenario& scenario);

// Failed paths' weights move proportionally onto the pair's intact paths;
// pairs with no intact path drop their demand.
WovenLoad SourceReroute(const Topology& topology, const PathSet& paths,
                        const DemandMatrix& demand, const RatioConfig& ratios,
                        const FailureScenario& scenario);

// Traffic on failed paths is dropped.
WovenLoad NoReaction(const Topology& topology, const PathSet& paths,
                     const DemandMatrix& demand, const RatioConfig& ratios,
                     const FailureScenario& scenario);

WovenLoad Recover(Regime regime, const Topology& topology,
                  const PathSet& paths, const DemandMatrix& demand,
                  const RatioConfig& ratios, const FailureScenario& scenario);

}  // namespace reweave

#endif  // REWEAVE_FAILURE_H
