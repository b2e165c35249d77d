#include "experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <random>

#include "json.hpp"
#include "reweave/error.h"
#include "reweave/io.h"
#include "reweave/lp_oracle.h"
#include "reweave/parallel.h"
#include "reweave/te.h"

namespace reweave::tools {
namespace {

using nlohmann::json;

[[noreturn]] void ConfigError(const std::string& what) {
  throw Error(ErrorKind::kConfig, what);
}

void CheckKeys(const json& obj, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void Read(const json& obj, const char* key, const std::string& where, T* out) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    *out = it->get<T>();
  } catch (const json::exception&) {
    ConfigError(where + "." + key + " has the wrong type");
  }
}

PathStrategy ReadStrategy(const json& obj, const char* key,
                          const std::string& where, PathStrategy fallback) {
  std::string name = PathStrategyName(fallback);
  Read(obj, key, where, &name);
  auto parsed = ParsePathStrategy(name);
  if (!parsed) ConfigError(where + "." + key + ": unknown strategy " + name);
  return *parsed;
}

void ApplyOverride(json* root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = root;
  size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) ConfigError("override key '" + key + "' is malformed");
    if (!node->is_object()) ConfigError("override '" + key + "' crosses a value");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json TopologyJson(const TopologySpec& s) {
  if (s.random_nodes > 0) {
    return {{"random",
             {{"nodes", s.random_nodes},
              {"avg_degree", s.avg_degree},
              {"seed", s.random_seed},
              {"capacity", s.capacity}}}};
  }
  return {{"file", s.file}, {"format", s.format}, {"prune", s.prune}};
}

json PathsJson(const PathSetOptions& o) {
  return {{"k", o.k},
          {"backup_k", o.backup_k},
          {"routing", PathStrategyName(o.routing)},
          {"backup", PathStrategyName(o.backup)}};
}

json DemandJson(const DemandSpec& d) {
  json out = {{"count", d.count},
              {"target_lp_mlu", d.target_lp_mlu},
              {"seed", d.seed}};
  out["volume"] = d.volume ? json(*d.volume) : json(nullptr);
  return out;
}

json TrainJson(const TrainConfig& t) {
  return {{"history", t.history},       {"learning_rate", t.learning_rate},
          {"epochs", t.epochs},         {"batch_size", t.batch_size},
          {"seed", t.seed},             {"hidden", t.hidden},
          {"weight_decay", t.weight_decay}};
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Independent stream per (seed, a, b).
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint32_t a,
                         std::uint32_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), a, b};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       since)
      .count();
}

// Stage-tags any library error raised by `fn`.
template <typename Fn>
auto Stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + name + "] " + e.what());
  }
}

json ReadStages(const std::string& path) {
  if (!std::filesystem::exists(path)) return json::object();
  json j = json::parse(ReadTextFile(path), nullptr, false);
  return j.is_object() ? j : json::object();
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (topology.file.empty() && topology.random_nodes <= 0) {
    ConfigError("topology needs a file or a random node count");
  }
  if (topology.random_nodes > 0 && topology.random_nodes < 3) {
    ConfigError("random topology needs at least 3 nodes");
  }
  if (topology.random_nodes == 0 && topology.format != "auto" &&
      !ParseTopologyFormat(topology.format)) {
    ConfigError("unknown topology format " + topology.format);
  }
  if (paths.k < 1) ConfigError("paths.k must be >= 1");
  if (paths.backup_k < 0) ConfigError("paths.backup_k must be >= 0");
  if (demand.count < 4) ConfigError("demand.count must be >= 4");
  const int split = DemandSeries{std::vector<DemandMatrix>(demand.count)}
                        .split_index();
  if (demand.count - split < 1) ConfigError("no test matrices");
  if (split <= train.history) {
    ConfigError("training split (" + std::to_string(split) +
                " matrices) must exceed the history length");
  }
  if (demand.volume && !(*demand.volume > 0.0)) {
    ConfigError("demand.volume must be positive");
  }
  if (!(demand.target_lp_mlu > 0.0)) {
    ConfigError("demand.target_lp_mlu must be positive");
  }
  train.Validate();
  if (scenarios.count < 0) ConfigError("scenarios.count must be >= 0");
  if (scenarios.simultaneous < 1) {
    ConfigError("scenarios.simultaneous must be >= 1");
  }
  if (regimes.empty()) ConfigError("regimes must not be empty");
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) ConfigError("betas must lie in (0, 1)");
  }
  for (double a : noise.alphas) {
    if (!(a > 0.0 && a < 1.0)) ConfigError("noise alphas must lie in (0, 1)");
  }
  if (threads < 0) ConfigError("threads must be >= 0");
  if (out_dir.empty()) ConfigError("out must not be empty");
}

ExperimentConfig ParseConfig(std::string_view json_text,
                             const std::vector<std::string>& overrides) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) ConfigError("config is not valid JSON");
  if (!root.is_object()) ConfigError("config must be a JSON object");
  for (const std::string& o : overrides) ApplyOverride(&root, o);
  CheckKeys(root, "config",
            {"name", "topology", "paths", "demand", "train", "scenarios",
             "regimes", "betas", "noise", "threads", "out"});

  ExperimentConfig c;
  Read(root, "name", "config", &c.name);
  Read(root, "threads", "config", &c.threads);
  Read(root, "out", "config", &c.out_dir);

  if (auto it = root.find("topology"); it != root.end()) {
    const json& t = *it;
    CheckKeys(t, "topology", {"file", "format", "prune", "random"});
    Read(t, "file", "topology", &c.topology.file);
    Read(t, "format", "topology", &c.topology.format);
    Read(t, "prune", "topology", &c.topology.prune);
    if (auto r = t.find("random"); r != t.end()) {
      CheckKeys(*r, "topology.random",
                {"nodes", "avg_degree", "seed", "capacity"});
      Read(*r, "nodes", "topology.random", &c.topology.random_nodes);
      Read(*r, "avg_degree", "topology.random", &c.topology.avg_degree);
      Read(*r, "seed", "topology.random", &c.topology.random_seed);
      Read(*r, "capacity", "topology.random", &c.topology.capacity);
      if (!c.topology.file.empty()) {
        ConfigError("topology takes either file or random, not both");
      }
    }
  }
  if (auto it = root.find("paths"); it != root.end()) {
    CheckKeys(*it, "paths", {"k", "backup_k", "routing", "backup"});
    Read(*it, "k", "paths", &c.paths.k);
    Read(*it, "backup_k", "paths", &c.paths.backup_k);
    c.paths.routing = ReadStrategy(*it, "routing", "paths", c.paths.routing);
    c.paths.backup = ReadStrategy(*it, "backup", "paths", c.paths.backup);
  }
  if (auto it = root.find("demand"); it != root.end()) {
    CheckKeys(*it, "demand", {"count", "volume", "target_lp_mlu", "seed"});
    Read(*it, "count", "demand", &c.demand.count);
    Read(*it, "target_lp_mlu", "demand", &c.demand.target_lp_mlu);
    Read(*it, "seed", "demand", &c.demand.seed);
    if (auto v = it->find("volume"); v != it->end() && !v->is_null()) {
      double volume = 0;
      Read(*it, "volume", "demand", &volume);
      c.demand.volume = volume;
    }
  }
  if (auto it = root.find("train"); it != root.end()) {
    CheckKeys(*it, "train",
              {"history", "learning_rate", "epochs", "batch_size", "seed",
               "hidden", "weight_decay"});
    Read(*it, "history", "train", &c.train.history);
    Read(*it, "learning_rate", "train", &c.train.learning_rate);
    Read(*it, "epochs", "train", &c.train.epochs);
    Read(*it, "batch_size", "train", &c.train.batch_size);
    Read(*it, "seed", "train", &c.train.seed);
    Read(*it, "hidden", "train", &c.train.hidden);
    Read(*it, "weight_decay", "train", &c.train.weight_decay);
  }
  if (auto it = root.find("scenarios"); it != root.end()) {
    CheckKeys(*it, "scenarios", {"count", "simultaneous", "seed"});
    Read(*it, "count", "scenarios", &c.scenarios.count);
    Read(*it, "simultaneous", "scenarios", &c.scenarios.simultaneous);
    Read(*it, "seed", "scenarios", &c.scenarios.seed);
  }
  if (auto it = root.find("regimes"); it != root.end()) {
    std::vector<std::string> names;
    Read(root, "regimes", "config", &names);
    c.regimes.clear();
    for (const std::string& n : names) {
      auto r = ParseRegime(n);
      if (!r) ConfigError("unknown regime " + n);
      if (std::find(c.regimes.begin(), c.regimes.end(), *r) ==
          c.regimes.end()) {
        c.regimes.push_back(*r);
      }
    }
  }
  Read(root, "betas", "config", &c.betas);
  if (auto it = root.find("noise"); it != root.end()) {
    CheckKeys(*it, "noise", {"alphas", "seed"});
    Read(*it, "alphas", "noise", &c.noise.alphas);
    Read(*it, "seed", "noise", &c.noise.seed);
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfigFile(const std::string& path,
                                const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const Error& e) {
    ConfigError(std::string("cannot read config: ") + e.what());
  }
  return ParseConfig(text, overrides);
}

std::string ConfigToJson(const ExperimentConfig& c) {
  json regimes = json::array();
  for (Regime r : c.regimes) regimes.push_back(RegimeName(r));
  json out = {{"name", c.name},
              {"topology", TopologyJson(c.topology)},
              {"paths", PathsJson(c.paths)},
              {"demand", DemandJson(c.demand)},
              {"train", TrainJson(c.train)},
              {"scenarios",
               {{"count", c.scenarios.count},
                {"simultaneous", c.scenarios.simultaneous},
                {"seed", c.scenarios.seed}}},
              {"regimes", regimes},
              {"betas", c.betas},
              {"noise", {{"alphas", c.noise.alphas}, {"seed", c.noise.seed}}},
              {"threads", c.threads},
              {"out", c.out_dir}};
  return out.dump(2) + "\n";
}

Topology LoadTopologySpec(const TopologySpec& spec) {
  if (spec.random_nodes > 0) {
    return GenerateRandomTopology(spec.random_nodes, spec.avg_degree,
                                  spec.random_seed, spec.capacity);
  }
  TopologyFormat format = spec.format == "auto"
                              ? FormatForPath(spec.file)
                              : *ParseTopologyFormat(spec.format);
  Topology t = LoadTopologyFile(spec.file, format);
  if (!spec.prune) return t;
  return PruneDegreeOne(t).topology;
}

Distribution Describe(const std::vector<double>& values) {
  Distribution d;
  d.count = static_cast<int>(values.size());
  if (values.empty()) return d;
  double sum = 0;
  for (double v : values) sum += v;
  d.mean = sum / values.size();
  d.median = Quantile(values, 0.5);
  d.p99 = Quantile(values, 0.99);
  d.max = *std::max_element(values.begin(), values.end());
  return d;
}

Experiment::Experiment(ExperimentConfig config, std::ostream* log)
    : config_(std::move(config)), log_(log) {
  config_.Validate();
  config_.paths.threads = config_.threads;
}

void Experiment::Log(const std::string& line) {
  if (log_) *log_ << line << std::endl;
}

std::string Experiment::OutPath(const std::string& file) const {
  return (std::filesystem::path(config_.out_dir) / file).string();
}

std::string Experiment::CachedKey(const std::string& stage) const {
  json stages = ReadStages(OutPath("stages.json"));
  auto it = stages.find(stage);
  if (it == stages.end() || !it->is_object()) return "";
  auto key = it->find("key");
  return key != it->end() && key->is_string() ? key->get<std::string>() : "";
}

void Experiment::RecordKey(const std::string& stage, const std::string& key) {
  json stages = ReadStages(OutPath("stages.json"));
  json entry = {{"key", key}};
  if (stage == "demand") entry["volume_scale"] = volume_scale_;
  if (stage == "model") {
    entry["initial_loss"] = train_report_.initial_loss;
    entry["final_loss"] = train_report_.final_loss;
    entry["epoch_loss"] = train_report_.epoch_loss;
  }
  stages[stage] = entry;
  WriteTextFile(OutPath("stages.json"), stages.dump(2) + "\n");
}

std::string Experiment::PathsKey() const {
  return json({{"topology", TopologyJson(config_.topology)},
               {"paths", PathsJson(config_.paths)}})
      .dump();
}

std::string Experiment::DemandKey() const {
  return json({{"paths", PathsKey()}, {"demand", DemandJson(config_.demand)}})
      .dump();
}

std::string Experiment::ModelKey() const {
  return json({{"demand", DemandKey()}, {"train", TrainJson(config_.train)}})
      .dump();
}

const Topology& Experiment::topology() {
  if (!topology_) {
    topology_ = Stage("topology", [&] { return LoadTopologySpec(config_.topology); });
    Log("[topology] " + std::to_string(topology_->num_nodes()) + " nodes, " +
        std::to_string(topology_->num_edges()) + " links");
  }
  return *topology_;
}

const PathSet& Experiment::paths() {
  if (paths_) return *paths_;
  const Topology& t = topology();
  std::filesystem::create_directories(config_.out_dir);
  const std::string key = PathsKey();
  const std::string file = OutPath("pathset.json");
  if (CachedKey("paths") == key && std::filesystem::exists(file)) {
    paths_ = Stage("paths", [&] { return PathSetFromJson(ReadTextFile(file), t); });
    Log("[paths] reused " + file);
    return *paths_;
  }
  auto start = std::chrono::steady_clock::now();
  paths_ = Stage("paths", [&] { return BuildPathSet(t, config_.paths); });
  WriteTextFile(file, PathSetToJson(*paths_));
  RecordKey("paths", key);
  Log("[paths] " + std::to_string(paths_->num_routing_paths()) +
      " routing paths, " + std::to_string(paths_->directed_backup_count()) +
      " backup paths (" + FormatDouble(Seconds(start)) + " s)");
  return *paths_;
}

const DemandSeries& Experiment::demand() {
  if (demand_) return *demand_;
  const Topology& t = topology();
  const PathSet& ps = paths();
  const std::string key = DemandKey();
  const std::string file = OutPath("tms.json");
  if (CachedKey("demand") == key && std::filesystem::exists(file)) {
    demand_ = Stage("demand", [&] { return DemandSeriesFromJson(ReadTextFile(file)); });
    json stages = ReadStages(OutPath("stages.json"));
    volume_scale_ = stages["demand"].value("volume_scale", 1.0);
    Log("[demand] reused " + file);
    return *demand_;
  }
  auto start = std::chrono::steady_clock::now();
  demand_ = Stage("demand", [&] {
    GravityOptions g;
    g.count = config_.demand.count;
    g.seed = config_.demand.seed;
    g.total_volume = config_.demand.volume.value_or(1.0);
    DemandSeries series = GravitySeries(t.num_nodes(), g);
    volume_scale_ = 1.0;
    if (!config_.demand.volume) {
      // The LP optimum is homogeneous in the demand, so one rescale lands
      // the sample mean exactly on the target.
      const int sample = std::min(series.split_index(), 20);
      std::vector<double> mlu(sample);
      ParallelFor(sample, config_.threads, [&](int i) {
        mlu[i] = SolveMinMlu(t, ps, series.matrices[i]).report.mlu;
      });
      double sum = 0;
      for (double m : mlu) sum += m;
      if (!(sum > 0.0)) {
        throw Error(ErrorKind::kData, "calibration sample has zero LP MLU");
      }
      volume_scale_ = config_.demand.target_lp_mlu / (sum / sample);
      for (DemandMatrix& m : series.matrices) m = m.Scaled(volume_scale_);
    }
    return series;
  });
  WriteTextFile(file, DemandSeriesToJson(*demand_));
  RecordKey("demand", key);
  Log("[demand] " + std::to_string(demand_->size()) +
      " matrices, volume scale " + FormatDouble(volume_scale_) + " (" +
      FormatDouble(Seconds(start)) + " s)");
  return *demand_;
}

double Experiment::volume_scale() {
  demand();
  return volume_scale_;
}

const PredictorModel& Experiment::model() {
  if (model_) return *model_;
  const Topology& t = topology();
  const PathSet& ps = paths();
  const DemandSeries& series = demand();
  const std::string key = ModelKey();
  const std::string file = OutPath("model.ckpt");
  if (CachedKey("model") == key && std::filesystem::exists(file)) {
    model_ = Stage("train", [&] { return LoadModelFile(file); });
    json entry = ReadStages(OutPath("stages.json"))["model"];
    train_report_.initial_loss = entry.value("initial_loss", 0.0);
    train_report_.final_loss = entry.value("final_loss", 0.0);
    train_report_.epoch_loss =
        entry.value("epoch_loss", std::vector<double>{});
    Log("[train] reused " + file);
    return *model_;
  }
  auto start = std::chrono::steady_clock::now();
  auto [train, test] = Split(series);
  model_ = Stage("train", [&] {
    return Train(t, ps, train, config_.train, &train_report_);
  });
  SaveModelFile(*model_, file);
  RecordKey("model", key);
  Log("[train] loss " + FormatDouble(train_report_.initial_loss) + " -> " +
      FormatDouble(train_report_.final_loss) + " (" +
      FormatDouble(Seconds(start)) + " s)");
  return *model_;
}

const TrainReport& Experiment::train_report() {
  model();
  return train_report_;
}

std::vector<FailureScenario> Experiment::Scenarios() {
  const DemandSeries& series = demand();
  const int tests = series.size() - series.split_index();
  const int count =
      config_.scenarios.count > 0 ? config_.scenarios.count : tests;
  return Stage("scenarios", [&] {
    return SampleScenarios(topology(), count, config_.scenarios.simultaneous,
                           config_.scenarios.seed);
  });
}

std::vector<RatioConfig> Experiment::TestRatios() {
  const DemandSeries& series = demand();
  const PredictorModel& m = model();
  const PathSet& ps = paths();
  const int split = series.split_index();
  const int h = config_.train.history;
  std::vector<RatioConfig> out(series.size() - split);
  for (size_t i = 0; i < out.size(); ++i) {
    std::span<const DemandMatrix> history(
        series.matrices.data() + split + i - h, h);
    out[i] = Forward(m, ps, history);
  }
  return out;
}

RunResult Experiment::Run() {
  const Topology& t = topology();
  const PathSet& ps = paths();
  const DemandSeries& series = demand();
  model();
  const std::vector<RatioConfig> ratios = TestRatios();
  const std::vector<FailureScenario> scenarios = Scenarios();
  const int split = series.split_index();
  const int tests = series.size() - split;
  const int jobs = static_cast<int>(scenarios.size());
  const int nreg = static_cast<int>(config_.regimes.size());
  auto start = std::chrono::steady_clock::now();

  RunResult result;
  result.scenarios = jobs;
  result.test_matrices = tests;

  // Failure-free quality of the learned splits.
  std::vector<double> learned(tests);
  std::vector<double> uniform(tests);
  const RatioConfig even = UniformRatios(ps);
  Stage("evaluate", [&] {
    ParallelFor(tests, config_.threads, [&](int i) {
      const DemandMatrix& dm = series.matrices[split + i];
      MluReport oracle = SolveMinMlu(t, ps, dm).report;
      learned[i] = NormalizedMlu(
          ComputeMlu(ComputeLoads(t, ps, dm, ratios[i]), t), oracle);
      uniform[i] =
          NormalizedMlu(ComputeMlu(ComputeLoads(t, ps, dm, even), t), oracle);
    });
    return 0;
  });
  result.learned = Describe(learned);
  result.uniform = Describe(uniform);

  std::vector<ResultRow> rows(static_cast<size_t>(jobs) * nreg);
  std::vector<LossRecord> losses(rows.size());
  Stage("evaluate", [&] {
    ParallelFor(jobs, config_.threads, [&](int j) {
      const int ti = j % tests;
      const DemandMatrix& dm = series.matrices[split + ti];
      const FailureScenario& sc = scenarios[j];
      std::vector<char> failed(t.num_edges(), 0);
      for (EdgeId e : sc.failed_edges) failed[e] = 1;
      std::vector<char> usable(ps.num_routing_paths(), 1);
      for (int p = 0; p < ps.num_routing_paths(); ++p) {
        usable[p] = !ps.routing_path(p).CrossesAny(failed);
      }
      // The baseline re-optimizes over surviving paths; demand with no
      // surviving path is left out of it.
      DemandMatrix routable = dm;
      for (auto [s, d] : PairsWithoutUsablePath(ps, dm, usable)) {
        routable.set(s, d, 0.0);
      }
      MluReport oracle = SolveMinMlu(t, ps, routable, usable).report;
      for (int r = 0; r < nreg; ++r) {
        const Regime regime = config_.regimes[r];
        WovenLoad wl = Recover(regime, t, ps, dm, ratios[ti], sc);
        MluReport rep = ComputeMlu(wl.load, t);
        DelayReport delay = AvgDelay(wl.load, t);
        ResultRow& row = rows[static_cast<size_t>(j) * nreg + r];
        row.tm_index = split + ti;
        row.scenario_id = j;
        row.regime = regime;
        row.mlu = rep.mlu;
        row.normalized_mlu =
            oracle.mlu > 0.0 || rep.mlu <= 0.0
                ? NormalizedMlu(rep, oracle)
                : std::numeric_limits<double>::infinity();
        row.loss = CongestionLoss(rep.mlu);
        row.delay = delay.delay;
        row.saturated = delay.saturated;
        row.conservation_error = std::abs(wl.total() - dm.Total());
        for (EdgeId e : sc.failed_edges) {
          row.failed_edge_load = std::max(row.failed_edge_load,
                                          std::abs(wl.load.flow[e]));
        }
        losses[static_cast<size_t>(j) * nreg + r] =
            ScenarioLoss(rep.mlu, dm, wl.pair_dropped, 1.0 / jobs);
      }
    });
    return 0;
  });

  for (int r = 0; r < nreg; ++r) {
    RegimeSummary s;
    s.regime = config_.regimes[r];
    std::vector<double> mlu;
    std::vector<double> norm;
    double loss = 0;
    double delay = 0;
    for (int j = 0; j < jobs; ++j) {
      const ResultRow& row = rows[static_cast<size_t>(j) * nreg + r];
      mlu.push_back(row.mlu);
      norm.push_back(row.normalized_mlu);
      loss += row.loss;
      delay += row.delay;
      s.saturated += row.saturated ? 1 : 0;
      s.max_conservation_error =
          std::max(s.max_conservation_error, row.conservation_error);
      s.max_failed_edge_load =
          std::max(s.max_failed_edge_load, row.failed_edge_load);
      s.loss_records.push_back(losses[static_cast<size_t>(j) * nreg + r]);
    }
    s.mlu = Describe(mlu);
    s.normalized_mlu = Describe(norm);
    s.mean_loss = jobs > 0 ? loss / jobs : 0.0;
    s.mean_delay = jobs > 0 ? delay / jobs : 0.0;
    if (jobs > 0) {
      for (double b : config_.betas) {
        s.perc_loss[b] = PercLoss(s.loss_records, b);
      }
    }
    result.regimes.push_back(std::move(s));
  }

  auto find = [&](Regime want) -> int {
    for (int r = 0; r < nreg; ++r) {
      if (config_.regimes[r] == want) return r;
    }
    return -1;
  };
  const int w = find(Regime::kWeave);
  const int sr = find(Regime::kSourceReroute);
  if (w >= 0 && sr >= 0) {
    Comparison c;
    for (int j = 0; j < jobs; ++j) {
      const double a = rows[static_cast<size_t>(j) * nreg + w].mlu;
      const double b = rows[static_cast<size_t>(j) * nreg + sr].mlu;
      if (a <= b) {
        ++c.wins;
        if (a < b) ++c.strict_wins;
      } else {
        ++c.losses;
      }
    }
    result.weave_vs_source = c;
  }
  result.rows = std::move(rows);

  WriteTextFile(OutPath("results.csv"), ResultsCsv(config_.name, result.rows));
  WriteTextFile(OutPath("summary.json"), SummaryJson(config_, t, ps, result));
  Log("[evaluate] " + std::to_string(jobs) + " scenarios x " +
      std::to_string(nreg) + " regimes (" + FormatDouble(Seconds(start)) +
      " s)");
  return result;
}

std::vector<NoiseRow> Experiment::Noise() {
  const Topology& t = topology();
  const PathSet& ps = paths();
  const DemandSeries& series = demand();
  const PredictorModel& m = model();
  const int split = series.split_index();
  const int tests = series.size() - split;
  const int h = config_.train.history;

  // Normalized MLU on test matrix i, with every matrix it touches (history
  // and target) scaled by the same per-matrix noise draw.
  auto evaluate = [&](std::optional<std::pair<double, std::uint32_t>> noise) {
    std::vector<double> out(tests);
    ParallelFor(tests, config_.threads, [&](int i) {
      std::vector<DemandMatrix> window;
      for (int j = split + i - h; j <= split + i; ++j) {
        const DemandMatrix& clean = series.matrices[j];
        window.push_back(
            noise ? Perturb(clean, noise->first,
                            DeriveSeed(config_.noise.seed, noise->second, j))
                  : clean);
      }
      std::span<const DemandMatrix> history(window.data(), h);
      const DemandMatrix& target = window.back();
      RatioConfig r = Forward(m, ps, history);
      out[i] = NormalizedMlu(ComputeMlu(ComputeLoads(t, ps, target, r), t),
                             SolveMinMlu(t, ps, target).report);
    });
    return out;
  };

  std::vector<NoiseRow> rows;
  Stage("noise", [&] {
    const Distribution clean = Describe(evaluate(std::nullopt));
    std::vector<double> alphas = config_.noise.alphas;
    std::sort(alphas.begin(), alphas.end());
    for (size_t a = 0; a < alphas.size(); ++a) {
      const Distribution noisy = Describe(
          evaluate(std::make_pair(alphas[a], static_cast<std::uint32_t>(a))));
      NoiseRow row;
      row.alpha = alphas[a];
      row.clean_mean = clean.mean;
      row.noisy_mean = noisy.mean;
      row.mean_change = noisy.mean / clean.mean - 1.0;
      row.clean_p99 = clean.p99;
      row.noisy_p99 = noisy.p99;
      row.p99_change = noisy.p99 / clean.p99 - 1.0;
      rows.push_back(row);
    }
    return 0;
  });

  std::string csv =
      "topology,alpha,clean_mean,noisy_mean,mean_change,clean_p99,noisy_p99,"
      "p99_change\n";
  for (const NoiseRow& r : rows) {
    csv += config_.name + "," + FormatDouble(r.alpha) + "," +
           FormatDouble(r.clean_mean) + "," + FormatDouble(r.noisy_mean) +
           "," + FormatDouble(r.mean_change) + "," +
           FormatDouble(r.clean_p99) + "," + FormatDouble(r.noisy_p99) + "," +
           FormatDouble(r.p99_change) + "\n";
  }
  WriteTextFile(OutPath("noise.csv"), csv);
  return rows;
}

std::string ResultsCsv(const std::string& topology_name,
                       const std::vector<ResultRow>& rows) {
  std::string out =
      "topology,regime,tm_index,scenario_id,mlu,normalized_mlu,loss,delay\n";
  for (const ResultRow& r : rows) {
    out += topology_name + "," + RegimeName(r.regime) + "," +
           std::to_string(r.tm_index) + "," + std::to_string(r.scenario_id) +
           "," + FormatDouble(r.mlu) + "," + FormatDouble(r.normalized_mlu) +
           "," + FormatDouble(r.loss) + "," + FormatDouble(r.delay) + "\n";
  }
  return out;
}

std::string SummaryJson(const ExperimentConfig& config, const Topology& t,
                        const PathSet& paths, const RunResult& result) {
  auto dist = [](const Distribution& d) {
    return json{{"count", d.count},
                {"mean", d.mean},
                {"median", d.median},
                {"p99", d.p99},
                {"max", d.max}};
  };
  json regimes = json::object();
  for (const RegimeSummary& s : result.regimes) {
    json perc = json::object();
    for (auto [beta, v] : s.perc_loss) perc[FormatDouble(beta)] = v;
    regimes[RegimeName(s.regime)] = {
        {"mlu", dist(s.mlu)},
        {"normalized_mlu", dist(s.normalized_mlu)},
        {"mean_loss", s.mean_loss},
        {"perc_loss", perc},
        {"mean_delay", s.mean_delay},
        {"saturated_scenarios", s.saturated},
        {"max_conservation_error", s.max_conservation_error},
        {"max_failed_edge_load", s.max_failed_edge_load}};
  }
  json out = {
      {"name", config.name},
      {"topology", {{"nodes", t.num_nodes()}, {"links", t.num_edges()}}},
      {"paths",
       {{"routing", paths.num_routing_paths()},
        {"backup", paths.directed_backup_count()},
        {"links_without_backup", paths.edges_without_backup().size()}}},
      {"test_matrices", result.test_matrices},
      {"scenarios", result.scenarios},
      {"failure_free",
       {{"learned", dist(result.learned)}, {"uniform", dist(result.uniform)}}},
      {"regimes", regimes}};
  if (result.weave_vs_source) {
    const Comparison& c = *result.weave_vs_source;
    out["weave_vs_source_reroute"] = {{"wins", c.wins},
                                      {"strict_wins", c.strict_wins},
                                      {"losses", c.losses},
                                      {"win_fraction", c.win_fraction()}};
  }
  return out.dump(2) + "\n";
}

}  // namespace reweave::tools
