#include "reweave/io.h"

#include <gtest/gtest.h>

#include <filesystem>

#include "reweave/error.h"
#include "testing/fixtures.h"

namespace reweave {
namespace {

TEST(PathSetJsonTest, RoundTrips) {
  Topology t = testing::GoldenTopology();
  PathSetOptions opts;
  opts.k = 4;
  opts.backup_k = 2;
  opts.routing = PathStrategy::kKsp;
  PathSet ps = BuildPathSet(t, opts);
  PathSet back = PathSetFromJson(PathSetToJson(ps), t);
  EXPECT_EQ(back, ps);
  EXPECT_EQ(back.options().routing, PathStrategy::kKsp);
  EXPECT_EQ(back.options().effective_backup_k(), 2);
}

TEST(PathSetJsonTest, RejectsMismatchedTopology) {
  PathSet ps = BuildPathSet(testing::Square(), {});
  EXPECT_THROW(PathSetFromJson(PathSetToJson(ps), testing::Triangle()), Error);
  EXPECT_THROW(PathSetFromJson("{", testing::Square()), Error);
  EXPECT_THROW(PathSetFromJson(R"({"num_nodes": 4})", testing::Square()),
               Error);
}

TEST(PathSetJsonTest, RejectsNonAdjacentPath) {
  Topology t = testing::Square();
  std::string doc = R"({"num_nodes":4,"k":1,"backup_k":1,"routing":"ksp",
    "backup":"ksp","pairs":[{"src":0,"dst":2,"paths":[[0,2]]}],"backups":[]})";
  try {
    PathSetFromJson(doc, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(DemandJsonTest, RoundTripsBitExact) {
  GravityOptions g;
  g.count = 5;
  g.total_volume = 3.7;
  DemandSeries s = GravitySeries(6, g);
  DemandSeries back = DemandSeriesFromJson(DemandSeriesToJson(s));
  EXPECT_EQ(back.matrices, s.matrices);
}

TEST(DemandJsonTest, RejectsNegativeEntries) {
  EXPECT_THROW(DemandSeriesFromJson(
                   R"({"num_nodes":2,"matrices":[{"epoch":0,"entries":[0,-1,0,0]}]})"),
               Error);
}

TEST(ScenarioJsonTest, RoundTrips) {
  std::vector<FailureScenario> s = {{{1, 4}, 0.5}, {{2}, 0.5}};
  EXPECT_EQ(ScenariosFromJson(ScenariosToJson(s)), s);
  EXPECT_THROW(ScenariosFromJson(R"([{"failed_edges":[]}])"), Error);
}

TEST(RatioJsonTest, RoundTrips) {
  RatioConfig r{{0.1, 0.9, 1.0 / 3}};
  EXPECT_EQ(RatioConfigFromJson(RatioConfigToJson(r)), r);
}

TEST(FileTest, WriteThenRead) {
  std::string path =
      (std::filesystem::temp_directory_path() / "reweave_io_test.txt").string();
  WriteTextFile(path, "hello\n");
  EXPECT_EQ(ReadTextFile(path), "hello\n");
  std::filesystem::remove(path);
  EXPECT_THROW(ReadTextFile(path), Error);
}

}  // namespace
}  // namespace reweave
