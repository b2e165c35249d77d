#ifndef REWEAVE_IO_H
#define REWEAVE_IO_H

#include <string>
#include <string_view>
#include <vector>

#include "reweave/demand.h"
#include "reweave/failure.h"
#include "reweave/pathing.h"
#include "reweave/te.h"
#include "reweave/topology.h"

namespace reweave {

// JSON encodings of the pipeline artifacts. Readers throw Error(kData) on
// malformed or inconsistent documents.

// {"num_nodes", "k", "backup_k", "routing", "backup",
//  "pairs": [{"src", "dst", "paths": [[node, ...], ...]}, ...],
//  "backups": [{"edge", "paths": [[node, ...], ...]}, ...]}
// Nodes are dense ids; backups run from the link's src to its dst.
std::string PathSetToJson(const PathSet& paths);
PathSet PathSetFromJson(std::string_view text, const Topology& topology);

// {"num_nodes", "matrices": [{"epoch", "entries": [row-major]}, ...]}
std::string DemandSeriesToJson(const DemandSeries& series);
DemandSeries DemandSeriesFromJson(std::string_view text);

// {"weights": [...]}
std::string RatioConfigToJson(const RatioConfig& ratios);
RatioConfig RatioConfigFromJson(std::string_view text);

// [{"failed_edges": [ids], "weight": w}, ...]
std::string ScenariosToJson(const std::vector<FailureScenario>& scenarios);
std::vector<FailureScenario> ScenariosFromJson(std::string_view text);

std::string ReadTextFile(const std::string& path);
// Writes via a temporary file and rename, so readers never see a partial
// file.
void WriteTextFile(const std::string& path, std::string_view contents);

}  // namespace reweave

#endif  // REWEAVE_IO_H
