#ifndef REWEAVE_TOOLS_EXPERIMENT_H
#define REWEAVE_TOOLS_EXPERIMENT_H

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reweave/demand.h"
#include "reweave/failure.h"
#include "reweave/learn.h"
#include "reweave/metrics.h"
#include "reweave/pathing.h"
#include "reweave/topology.h"

namespace reweave::tools {

// Either a file on disk or a seeded random graph.
struct TopologySpec {
  std::string file;
  std::string format = "auto";  // auto, edgelist, graphml
  bool prune = true;
  int random_nodes = 0;
  double avg_degree = 3.5;
  std::uint64_t random_seed = 1;
  double capacity = 1.0;
};

struct DemandSpec {
  int count = 200;
  // Fixed total volume per matrix; unset means "scale so the mean LP MLU of
  // the first training matrices hits target_lp_mlu".
  std::optional<double> volume;
  double target_lp_mlu = 0.6;
  std::uint64_t seed = 1;
};

struct ScenarioSpec {
  int count = 0;  // 0: one scenario per test matrix
  int simultaneous = 1;
  std::uint64_t seed = 1;
};

struct NoiseSpec {
  std::vector<double> alphas = {0.1, 0.2, 0.3};
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TopologySpec topology;
  PathSetOptions paths;
  DemandSpec demand;
  TrainConfig train;
  ScenarioSpec scenarios;
  std::vector<Regime> regimes = {Regime::kWeave, Regime::kSourceReroute};
  std::vector<double> betas = {0.9, 0.99};
  NoiseSpec noise;
  int threads = 0;
  std::string out_dir = "out";

  // Throws Error(kConfig).
  void Validate() const;
};

// Parses a JSON config; unknown keys are rejected. `overrides` are
// "dotted.key=value" strings applied before parsing; the value is read as
// JSON when it parses and as a string otherwise.
ExperimentConfig ParseConfig(std::string_view json_text,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig LoadConfigFile(const std::string& path,
                                const std::vector<std::string>& overrides = {});
std::string ConfigToJson(const ExperimentConfig& config);

Topology LoadTopologySpec(const TopologySpec& spec);

struct ResultRow {
  int tm_index = 0;
  int scenario_id = 0;
  Regime regime = Regime::kWeave;
  double mlu = 0;
  double normalized_mlu = 0;
  double loss = 0;
  double delay = 0;
  bool saturated = false;
  double conservation_error = 0;  // |planned+weaved+rerouted+dropped - total|
  double failed_edge_load = 0;    // largest load left on a failed link
};

struct Distribution {
  int count = 0;
  double mean = 0;
  double median = 0;
  double p99 = 0;
  double max = 0;
};
Distribution Describe(const std::vector<double>& values);

struct RegimeSummary {
  Regime regime = Regime::kWeave;
  Distribution mlu;
  Distribution normalized_mlu;
  double mean_loss = 0;
  double mean_delay = 0;
  int saturated = 0;
  std::map<double, double> perc_loss;  // beta -> PercLoss
  double max_conservation_error = 0;
  double max_failed_edge_load = 0;
  std::vector<LossRecord> loss_records;
};

struct Comparison {
  int wins = 0;  // weave MLU <= source_reroute MLU
  int strict_wins = 0;
  int losses = 0;
  double win_fraction() const {
    const int n = wins + losses;
    return n == 0 ? 0.0 : static_cast<double>(wins) / n;
  }
};

struct RunResult {
  std::vector<ResultRow> rows;
  std::vector<RegimeSummary> regimes;
  std::optional<Comparison> weave_vs_source;
  // Failure-free normalized MLU on the test matrices.
  Distribution learned;
  Distribution uniform;
  int scenarios = 0;
  int test_matrices = 0;
};

struct NoiseRow {
  double alpha = 0;
  double clean_mean = 0;
  double noisy_mean = 0;
  double mean_change = 0;  // relative, noisy/clean - 1
  double clean_p99 = 0;
  double noisy_p99 = 0;
  double p99_change = 0;
};

// Stage-cached pipeline rooted at config.out_dir. Each stage is rebuilt
// only if its inputs differ from the ones recorded in stages.json; a cached
// stage reproduces the cold result bit for bit.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config, std::ostream* log = nullptr);

  const ExperimentConfig& config() const { return config_; }
  const Topology& topology();
  const PathSet& paths();
  const DemandSeries& demand();
  double volume_scale();
  const PredictorModel& model();
  const TrainReport& train_report();

  // Evaluates every (test matrix, scenario, regime) triple and writes
  // results.csv and summary.json.
  RunResult Run();

  // Failure-free robustness to multiplicative demand noise; writes
  // noise.csv.
  std::vector<NoiseRow> Noise();

  std::vector<FailureScenario> Scenarios();
  std::vector<RatioConfig> TestRatios();

 private:
  std::string OutPath(const std::string& file) const;
  std::string CachedKey(const std::string& stage) const;
  void RecordKey(const std::string& stage, const std::string& key);
  std::string PathsKey() const;
  std::string DemandKey() const;
  std::string ModelKey() const;
  void Log(const std::string& line);

  ExperimentConfig config_;
  std::ostream* log_;
  std::optional<Topology> topology_;
  std::optional<PathSet> paths_;
  std::optional<DemandSeries> demand_;
  double volume_scale_ = 1.0;
  std::optional<PredictorModel> model_;
  TrainReport train_report_;
};

std::string ResultsCsv(const std::string& topology_name,
                       const std::vector<ResultRow>& rows);
std::string SummaryJson(const ExperimentConfig& config, const Topology& t,
                        const PathSet& paths, const RunResult& result);

// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

}  // namespace reweave::tools

#endif  // REWEAVE_TOOLS_EXPERIMENT_H
