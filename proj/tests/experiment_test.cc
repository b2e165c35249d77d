#include "experiment.h"

#include <gtest/gtest.h>

#include <filesystem>

#include "reweave/error.h"
#include "reweave/io.h"

namespace reweave::tools {
namespace {

namespace fs = std::filesystem;

std::string TempDir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("reweave_exp_" + name);
  fs::remove_all(p);
  return p.string();
}

ExperimentConfig Small(const std::string& out) {
  ExperimentConfig c;
  c.name = "small";
  c.topology.random_nodes = 8;
  c.topology.random_seed = 3;
  c.paths.k = 3;
  c.demand.count = 16;
  c.demand.seed = 5;
  c.train.epochs = 3;
  c.train.hidden = {8, 8, 8, 8};
  c.scenarios.count = 6;
  c.regimes = {Regime::kWeave, Regime::kSourceReroute, Regime::kNoReaction};
  c.threads = 2;
  c.out_dir = out;
  return c;
}

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kRuntime;
}

TEST(ConfigTest, DefaultsAndOverrides) {
  ExperimentConfig c = ParseConfig(
      R"({"topology": {"random": {"nodes": 10}}, "train": {"epochs": 5}})",
      {"train.epochs=7", "paths.routing=ksp", "name=abc", "demand.volume=2"});
  EXPECT_EQ(c.topology.random_nodes, 10);
  EXPECT_EQ(c.train.epochs, 7);
  EXPECT_EQ(c.paths.routing, PathStrategy::kKsp);
  EXPECT_EQ(c.name, "abc");
  ASSERT_TRUE(c.demand.volume.has_value());
  EXPECT_EQ(*c.demand.volume, 2.0);
  EXPECT_EQ(c.paths.k, 8);
  EXPECT_EQ(c.regimes.size(), 2u);
}

TEST(ConfigTest, RoundTripsThroughJson) {
  ExperimentConfig c = Small("x");
  c.demand.volume = 1.5;
  ExperimentConfig back = ParseConfig(ConfigToJson(c));
  EXPECT_EQ(ConfigToJson(back), ConfigToJson(c));
}

TEST(ConfigTest, RejectsBadInput) {
  const std::string base = R"({"topology": {"random": {"nodes": 10}})";
  EXPECT_EQ(KindOf([&] { ParseConfig("{"); }), ErrorKind::kConfig);
  EXPECT_EQ(KindOf([&] { ParseConfig(R"({"bogus": 1})"); }),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf([&] { ParseConfig(base + "}", {"paths.k=0"}); }),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf([&] { ParseConfig(base + "}", {"regimes=[]"}); }),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf([&] { ParseConfig(base + "}", {"regimes=[\"magic\"]"}); }),
            ErrorKind::kConfig);
  // Three matrices leave no test split.
  EXPECT_EQ(KindOf([&] { ParseConfig(base + "}", {"demand.count=3"}); }),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf([&] { ParseConfig(base + "}", {"train.epochs=\"x\""}); }),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf([&] { ParseConfig("{}"); }), ErrorKind::kConfig);
  EXPECT_EQ(KindOf([&] { ParseConfig(base + "}", {"novalue"}); }),
            ErrorKind::kConfig);
}

TEST(ExperimentTest, RunProducesOneRowPerScenarioAndRegime) {
  const std::string out = TempDir("rows");
  Experiment e(Small(out));
  RunResult r = e.Run();
  EXPECT_EQ(r.scenarios, 6);
  EXPECT_EQ(r.test_matrices, 4);
  EXPECT_EQ(r.rows.size(), 18u);
  for (const ResultRow& row : r.rows) {
    EXPECT_LE(row.conservation_error, 1e-9);
    EXPECT_EQ(row.failed_edge_load, 0.0);
    EXPECT_GE(row.tm_index, 12);
    if (row.mlu <= 1.0) EXPECT_EQ(row.loss, 0.0);
  }
  ASSERT_TRUE(r.weave_vs_source.has_value());
  EXPECT_EQ(r.weave_vs_source->wins + r.weave_vs_source->losses, 6);
  for (const char* f : {"pathset.json", "tms.json", "model.ckpt",
                        "results.csv", "summary.json", "stages.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  }
  std::string csv = ReadTextFile((fs::path(out) / "results.csv").string());
  EXPECT_EQ(csv.rfind("topology,regime,tm_index,scenario_id,mlu,"
                      "normalized_mlu,loss,delay\n",
                      0),
            0u);
  fs::remove_all(out);
}

TEST(ExperimentTest, CalibrationHitsTargetMeanLpMlu) {
  const std::string out = TempDir("calib");
  ExperimentConfig c = Small(out);
  c.demand.target_lp_mlu = 0.8;
  Experiment e(c);
  EXPECT_GT(e.volume_scale(), 0.0);
  ExperimentConfig fixed = c;
  fixed.demand.volume = 1.0;
  fixed.out_dir = TempDir("calib_fixed");
  Experiment plain(fixed);
  const DemandSeries& a = e.demand();
  const DemandSeries& b = plain.demand();
  EXPECT_NEAR(a.matrices[0].Total(), b.matrices[0].Total() * e.volume_scale(),
              1e-12);
  fs::remove_all(out);
  fs::remove_all(fixed.out_dir);
}

TEST(ExperimentTest, SameSeedsGiveIdenticalFiles) {
  const std::string a = TempDir("det_a");
  const std::string b = TempDir("det_b");
  ExperimentConfig ca = Small(a);
  ExperimentConfig cb = Small(b);
  cb.threads = 1;
  Experiment(ca).Run();
  Experiment(cb).Run();
  for (const char* f : {"results.csv", "summary.json", "model.ckpt"}) {
    EXPECT_EQ(ReadTextFile((fs::path(a) / f).string()),
              ReadTextFile((fs::path(b) / f).string()))
        << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(ExperimentTest, CachedStagesReproduceColdRun) {
  const std::string out = TempDir("cache");
  ExperimentConfig c = Small(out);
  Experiment(c).Run();
  const std::string cold =
      ReadTextFile((fs::path(out) / "results.csv").string());
  const auto stamp = fs::last_write_time(fs::path(out) / "model.ckpt");
  std::ostringstream log;
  Experiment warm(c, &log);
  warm.Run();
  EXPECT_EQ(ReadTextFile((fs::path(out) / "results.csv").string()), cold);
  EXPECT_EQ(fs::last_write_time(fs::path(out) / "model.ckpt"), stamp);
  EXPECT_NE(log.str().find("[train] reused"), std::string::npos);

  // Changing the training config invalidates only the model stage.
  c.train.epochs = 4;
  std::ostringstream log2;
  Experiment changed(c, &log2);
  changed.model();
  EXPECT_NE(log2.str().find("[demand] reused"), std::string::npos);
  EXPECT_EQ(log2.str().find("[train] reused"), std::string::npos);
  fs::remove_all(out);
}

TEST(ExperimentTest, TinyNoiseLeavesMluUnchanged) {
  const std::string out = TempDir("noise");
  ExperimentConfig c = Small(out);
  c.noise.alphas = {0.3, 1e-9, 0.1};
  std::vector<NoiseRow> rows = Experiment(c).Noise();
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].alpha, 1e-9);
  EXPECT_EQ(rows[1].alpha, 0.1);
  EXPECT_NEAR(rows[0].mean_change, 0.0, 1e-6);
  EXPECT_TRUE(fs::exists(fs::path(out) / "noise.csv"));
  fs::remove_all(out);
}

TEST(ExperimentTest, FileTopologyAndStageTaggedErrors) {
  const std::string out = TempDir("file");
  fs::create_directories(out);
  const std::string chain = (fs::path(out) / "chain.txt").string();
  WriteTextFile(chain, "a b\nb c\nc d\n");
  ExperimentConfig c = Small(out);
  c.topology = TopologySpec{};
  c.topology.file = chain;
  Experiment e(c);
  try {
    e.topology();
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kData);
    EXPECT_EQ(std::string(err.what()).rfind("[topology]", 0), 0u);
  }
  fs::remove_all(out);
}

TEST(DescribeTest, Basics) {
  Distribution d = Describe({1, 2, 3, 4});
  EXPECT_EQ(d.count, 4);
  EXPECT_DOUBLE_EQ(d.mean, 2.5);
  EXPECT_DOUBLE_EQ(d.median, 2.5);
  EXPECT_DOUBLE_EQ(d.max, 4);
  EXPECT_EQ(Describe({}).count, 0);
}

}  // namespace
}  // namespace reweave::tools
