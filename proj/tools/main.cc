#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "experiment.h"
#include "reweave/error.h"
#include "reweave/io.h"
#include "reweave/metrics.h"
#include "reweave/pathing.h"
#include "reweave/topology.h"

namespace reweave::tools {
namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  int threads = -1;
  bool quiet = false;
};

void AddCommon(CLI::App* cmd, CommonOptions* o) {
  cmd->add_option("-c,--config", o->config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", o->sets,
                  "Override a config key, e.g. --set train.epochs=20");
  cmd->add_option("-o,--out", o->out, "Output directory");
  cmd->add_option("-j,--threads", o->threads, "Worker threads (0 = all)");
  cmd->add_flag("-q,--quiet", o->quiet, "No progress output");
}

Experiment MakeExperiment(const CommonOptions& o) {
  std::vector<std::string> sets = o.sets;
  if (!o.out.empty()) sets.push_back("out=\"" + o.out + "\"");
  if (o.threads >= 0) sets.push_back("threads=" + std::to_string(o.threads));
  return Experiment(LoadConfigFile(o.config, sets),
                    o.quiet ? nullptr : &std::cerr);
}

TopologyFormat ResolveFormat(const std::string& file, const std::string& fmt) {
  if (fmt == "auto") return FormatForPath(file);
  auto f = ParseTopologyFormat(fmt);
  if (!f) throw Error(ErrorKind::kConfig, "unknown topology format " + fmt);
  return *f;
}

int CmdTopo(const std::string& file, const std::string& format, bool prune) {
  Topology raw = LoadTopologyFile(file, ResolveFormat(file, format));
  Topology t = prune ? PruneDegreeOne(raw).topology : raw;
  std::printf("%d nodes, %d links\n", t.num_nodes(), t.num_edges());
  if (prune && raw.num_nodes() != t.num_nodes()) {
    std::printf("pruned %d degree-one nodes\n",
                raw.num_nodes() - t.num_nodes());
  }
  std::printf("degree histogram:\n");
  for (auto [degree, count] : t.DegreeHistogram()) {
    std::printf("  %3d: %d\n", degree, count);
  }
  return kExitOk;
}

void PrintRisk(const char* label, const RiskSummary& r) {
  if (r.count == 0) {
    std::printf("  %-13s n/a\n", label);
    return;
  }
  std::printf("  %-13s mean %.4f  p50 %.4f  p90 %.4f  max %.4f  (%d lists)\n",
              label, r.mean, r.p50, r.p90, r.max, r.count);
}

int CmdPaths(const std::string& file, const std::string& format, bool prune,
             PathSetOptions opts, bool compare, const std::string& out) {
  Topology raw = LoadTopologyFile(file, ResolveFormat(file, format));
  Topology t = prune ? PruneDegreeOne(raw).topology : raw;
  if (opts.k < 1) throw Error(ErrorKind::kConfig, "k must be >= 1");
  PathSet ps = BuildPathSet(t, opts);
  std::printf("%d nodes, %d links, %d ordered pairs\n", t.num_nodes(),
              t.num_edges(), ps.num_pairs());
  std::printf("routing paths (%s, k=%d): %d\n",
              PathStrategyName(opts.routing), opts.k, ps.num_routing_paths());
  if (compare) {
    PathSetOptions other = opts;
    other.routing = opts.routing == PathStrategy::kKsp ? PathStrategy::kEdksp
                                                       : PathStrategy::kKsp;
    std::printf("routing paths (%s, k=%d): %d\n",
                PathStrategyName(other.routing), other.k,
                BuildPathSet(t, other).num_routing_paths());
  }
  std::printf("backup paths (%s, k=%d): %ld directed, %zu links without "
              "backup\n",
              PathStrategyName(opts.backup), opts.effective_backup_k(),
              ps.directed_backup_count(), ps.edges_without_backup().size());
  const int bk = opts.effective_backup_k();
  std::printf("P(%d-backup): %.2f%%\n", bk, 100.0 * BackupCoverage(ps, bk));
  std::printf("risk:\n");
  PrintRisk("adjacent", RiskProfile(t, ps, RiskKind::kAdjacent));
  PrintRisk("non-adjacent", RiskProfile(t, ps, RiskKind::kNonAdjacent));
  PrintRisk("backup", RiskProfile(t, ps, RiskKind::kBackup));
  if (!out.empty()) {
    WriteTextFile(out, PathSetToJson(ps));
    std::printf("wrote %s\n", out.c_str());
  }
  return kExitOk;
}

void PrintRun(const RunResult& r, const std::string& out_dir) {
  std::printf("failure-free normalized MLU: learned median %.4f mean %.4f, "
              "uniform median %.4f\n",
              r.learned.median, r.learned.mean, r.uniform.median);
  std::printf("%-15s %10s %10s %10s %10s %10s\n", "regime", "mean_mlu",
              "norm_mean", "norm_p99", "mean_loss", "mean_delay");
  for (const RegimeSummary& s : r.regimes) {
    std::printf("%-15s %10.4f %10.4f %10.4f %10.4f %10.4f\n",
                RegimeName(s.regime), s.mlu.mean, s.normalized_mlu.mean,
                s.normalized_mlu.p99, s.mean_loss, s.mean_delay);
    for (auto [beta, v] : s.perc_loss) {
      std::printf("%-15s   PercLoss(%g) = %.4f\n", "", beta, v);
    }
  }
  if (r.weave_vs_source) {
    std::printf("weave <= source_reroute in %d of %d scenarios (%d strictly "
                "lower)\n",
                r.weave_vs_source->wins,
                r.weave_vs_source->wins + r.weave_vs_source->losses,
                r.weave_vs_source->strict_wins);
  }
  std::printf("results in %s\n", out_dir.c_str());
}

int CmdState(long n, long d, long m, long l) {
  StateEstimate s = RouterState(n, d, m, l);
  std::printf("rule entries:       %lld\n",
              static_cast<long long>(s.rule_entries));
  std::printf("rule bytes:         %lld\n",
              static_cast<long long>(s.rule_bytes));
  std::printf("path table entries: %lld\n",
              static_cast<long long>(s.path_table_entries));
  std::printf("path table bytes:   %lld\n",
              static_cast<long long>(s.path_table_bytes));
  return kExitOk;
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kRuntime:
      return kExitRuntime;
  }
  return kExitRuntime;
}

int Main(int argc, char** argv) {
  CLI::App app{"Traffic engineering with local failure weaving"};
  app.require_subcommand(1);

  std::string topo_file;
  std::string topo_format = "auto";
  bool no_prune = false;
  auto* topo = app.add_subcommand("topo", "Load a topology and print stats");
  topo->add_option("file", topo_file, "Topology file")->required();
  topo->add_option("--format", topo_format, "auto, edgelist or graphml");
  topo->add_flag("--no-prune", no_prune, "Keep degree-one nodes");

  std::string paths_file;
  std::string paths_format = "auto";
  bool paths_no_prune = false;
  bool compare = false;
  std::string paths_out;
  std::string routing = "edksp";
  std::string backup = "ksp";
  PathSetOptions popts;
  auto* paths = app.add_subcommand("paths", "Build routing and backup paths");
  paths->add_option("file", paths_file, "Topology file")->required();
  paths->add_option("--format", paths_format, "auto, edgelist or graphml");
  paths->add_flag("--no-prune", paths_no_prune, "Keep degree-one nodes");
  paths->add_option("-k", popts.k, "Paths per pair");
  paths->add_option("--backup-k", popts.backup_k,
                    "Backup paths per link (default: k)");
  paths->add_option("--routing", routing, "edksp or ksp");
  paths->add_option("--backup", backup, "ksp or edksp");
  paths->add_option("-j,--threads", popts.threads, "Worker threads");
  paths->add_flag("--compare", compare, "Also count the other strategy");
  paths->add_option("-o,--out", paths_out, "Write the path set as JSON");

  CommonOptions tm_opts, train_opts, run_opts, noise_opts;
  auto* tm = app.add_subcommand("tm", "Generate traffic matrices");
  AddCommon(tm, &tm_opts);
  auto* train = app.add_subcommand("train", "Train the split predictor");
  AddCommon(train, &train_opts);
  auto* run = app.add_subcommand("run", "Run the failure experiment");
  AddCommon(run, &run_opts);
  auto* noise = app.add_subcommand("noise", "Demand-noise robustness table");
  AddCommon(noise, &noise_opts);

  long sn = 0, sd = 0, sm = 0, sl = 0;
  auto* state = app.add_subcommand("state", "Per-router state estimate");
  state->add_option("-n,--nodes", sn, "Routers N")->required();
  state->add_option("-d,--degree", sd, "Router degree d")->required();
  state->add_option("-m,--granularity", sm, "Split granularity M")
      ->required();
  state->add_option("-l,--sids", sl, "SIDs per path L")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*topo) return CmdTopo(topo_file, topo_format, !no_prune);
    if (*paths) {
      auto r = ParsePathStrategy(routing);
      auto b = ParsePathStrategy(backup);
      if (!r || !b) throw Error(ErrorKind::kConfig, "unknown path strategy");
      popts.routing = *r;
      popts.backup = *b;
      return CmdPaths(paths_file, paths_format, !paths_no_prune, popts,
                      compare, paths_out);
    }
    if (*tm) {
      Experiment e = MakeExperiment(tm_opts);
      const DemandSeries& s = e.demand();
      std::printf("%d matrices (%d train, %d test), volume scale %.6g\n",
                  s.size(), s.split_index(), s.size() - s.split_index(),
                  e.volume_scale());
      return kExitOk;
    }
    if (*train) {
      Experiment e = MakeExperiment(train_opts);
      const TrainReport& r = e.train_report();
      std::printf("training loss %.6f -> %.6f\n", r.initial_loss,
                  r.final_loss);
      return kExitOk;
    }
    if (*run) {
      Experiment e = MakeExperiment(run_opts);
      PrintRun(e.Run(), e.config().out_dir);
      return kExitOk;
    }
    if (*noise) {
      Experiment e = MakeExperiment(noise_opts);
      std::printf("%8s %12s %12s\n", "alpha", "mean_change", "p99_change");
      for (const NoiseRow& r : e.Noise()) {
        std::printf("%8.3f %+11.2f%% %+11.2f%%\n", r.alpha,
                    100.0 * r.mean_change, 100.0 * r.p99_change);
      }
      return kExitOk;
    }
    if (*state) return CmdState(sn, sd, sm, sl);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace
}  // namespace reweave::tools

int main(int argc, char** argv) { return reweave::tools::Main(argc, argv); }
