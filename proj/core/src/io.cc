#include "reweave/io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "reweave/error.h"

namespace reweave {
namespace {

using nlohmann::json;

json Parse(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kData,
                std::string(what) + ": invalid JSON: " + e.what());
  }
}

template <typename Fn>
auto Decode(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kData, std::string(what) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::kData, std::string(what) + ": " + e.what());
  }
}

json PathsJson(std::span<const Path> paths) {
  json out = json::array();
  for (const Path& p : paths) out.push_back(p.nodes);
  return out;
}

std::vector<Path> PathsFromJson(const json& j, const Topology& topology) {
  std::vector<Path> out;
  for (const json& nodes : j) {
    std::vector<NodeId> ids = nodes.get<std::vector<NodeId>>();
    for (NodeId n : ids) {
      if (n < 0 || n >= topology.num_nodes()) {
        throw Error(ErrorKind::kData, "node id out of range");
      }
    }
    out.push_back(MakePath(topology, std::move(ids)));
  }
  return out;
}

}  // namespace

std::string PathSetToJson(const PathSet& paths) {
  json j;
  j["num_nodes"] = paths.num_nodes();
  j["k"] = paths.options().k;
  j["backup_k"] = paths.options().effective_backup_k();
  j["routing"] = PathStrategyName(paths.options().routing);
  j["backup"] = PathStrategyName(paths.options().backup);
  json pairs = json::array();
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    auto [s, d] = paths.PairAt(pair);
    pairs.push_back({{"src", s}, {"dst", d}, {"paths", PathsJson(paths.routing(pair))}});
  }
  j["pairs"] = std::move(pairs);
  json backups = json::array();
  for (EdgeId e = 0; e < paths.num_edges(); ++e) {
    backups.push_back({{"edge", e}, {"paths", PathsJson(paths.backup(e))}});
  }
  j["backups"] = std::move(backups);
  return j.dump() + "\n";
}

PathSet PathSetFromJson(std::string_view text, const Topology& topology) {
  json j = Parse(text, "path set");
  return Decode("path set", [&] {
    const int n = j.at("num_nodes").get<int>();
    if (n != topology.num_nodes()) {
      throw Error(ErrorKind::kData, "node count does not match topology");
    }
    PathSetOptions options;
    options.k = j.at("k").get<int>();
    options.backup_k = j.at("backup_k").get<int>();
    auto routing = ParsePathStrategy(j.at("routing").get<std::string>());
    auto backup = ParsePathStrategy(j.at("backup").get<std::string>());
    if (!routing || !backup) {
      throw Error(ErrorKind::kData, "unknown path strategy");
    }
    options.routing = *routing;
    options.backup = *backup;

    std::vector<std::vector<Path>> by_pair(static_cast<size_t>(n) * (n - 1));
    std::vector<char> seen(by_pair.size(), 0);
    for (const json& entry : j.at("pairs")) {
      NodeId s = entry.at("src").get<int>();
      NodeId d = entry.at("dst").get<int>();
      if (s < 0 || d < 0 || s >= n || d >= n || s == d) {
        throw Error(ErrorKind::kData, "bad pair");
      }
      const int pair = s * (n - 1) + (d < s ? d : d - 1);
      if (seen[pair]) throw Error(ErrorKind::kData, "duplicate pair");
      seen[pair] = 1;
      by_pair[pair] = PathsFromJson(entry.at("paths"), topology);
      for (const Path& p : by_pair[pair]) {
        if (p.src() != s || p.dst() != d) {
          throw Error(ErrorKind::kData, "path endpoints do not match pair");
        }
      }
    }
    std::vector<std::vector<Path>> by_edge(topology.num_edges());
    std::vector<char> seen_edge(by_edge.size(), 0);
    for (const json& entry : j.at("backups")) {
      EdgeId e = entry.at("edge").get<int>();
      if (e < 0 || e >= topology.num_edges() || seen_edge[e]) {
        throw Error(ErrorKind::kData, "bad or duplicate backup edge");
      }
      seen_edge[e] = 1;
      by_edge[e] = PathsFromJson(entry.at("paths"), topology);
    }
    return PathSet(n, options, std::move(by_pair), std::move(by_edge));
  });
}

std::string DemandSeriesToJson(const DemandSeries& series) {
  json j;
  j["num_nodes"] =
      series.matrices.empty() ? 0 : series.matrices.front().num_nodes();
  json list = json::array();
  for (const DemandMatrix& dm : series.matrices) {
    std::span<const double> entries = dm.row_major();
    list.push_back({{"epoch", dm.epoch()},
                    {"entries", std::vector<double>(entries.begin(),
                                                    entries.end())}});
  }
  j["matrices"] = std::move(list);
  return j.dump() + "\n";
}

DemandSeries DemandSeriesFromJson(std::string_view text) {
  json j = Parse(text, "demand series");
  return Decode("demand series", [&] {
    const int n = j.at("num_nodes").get<int>();
    DemandSeries series;
    for (const json& m : j.at("matrices")) {
      series.matrices.push_back(DemandMatrix::FromRowMajor(
          n, m.at("entries").get<std::vector<double>>(),
          m.at("epoch").get<int>()));
    }
    return series;
  });
}

std::string RatioConfigToJson(const RatioConfig& ratios) {
  return json{{"weights", ratios.weights}}.dump() + "\n";
}

RatioConfig RatioConfigFromJson(std::string_view text) {
  json j = Parse(text, "ratio config");
  return Decode("ratio config", [&] {
    RatioConfig out;
    out.weights = j.at("weights").get<std::vector<double>>();
    return out;
  });
}

std::string ScenariosToJson(const std::vector<FailureScenario>& scenarios) {
  json list = json::array();
  for (const FailureScenario& sc : scenarios) {
    list.push_back({{"failed_edges", sc.failed_edges}, {"weight", sc.weight}});
  }
  return list.dump() + "\n";
}

std::vector<FailureScenario> ScenariosFromJson(std::string_view text) {
  json j = Parse(text, "scenarios");
  return Decode("scenarios", [&] {
    std::vector<FailureScenario> out;
    for (const json& entry : j) {
      FailureScenario sc;
      sc.failed_edges = entry.at("failed_edges").get<std::vector<EdgeId>>();
      sc.weight = entry.value("weight", 1.0);
      if (sc.failed_edges.empty()) {
        throw Error(ErrorKind::kData, "scenario without failed links");
      }
      out.push_back(std::move(sc));
    }
    return out;
  });
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kData, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteTextFile(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kRuntime, "cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::kRuntime, "failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorKind::kRuntime,
                "cannot move " + tmp + " to " + path + ": " + ec.message());
  }
}

}  // namespace reweave
