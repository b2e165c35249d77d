#include "reweave/demand.h"

#include <gtest/gtest.h>

#include <cmath>

#include "reweave/error.h"

namespace reweave {
namespace {

TEST(DemandMatrixTest, ValidatesEntries) {
  DemandMatrix dm(3);
  dm.set(0, 1, 2.0);
  EXPECT_DOUBLE_EQ(dm.at(0, 1), 2.0);
  EXPECT_THROW(dm.set(0, 1, -1.0), Error);
  EXPECT_THROW(dm.set(1, 1, 1.0), Error);
  EXPECT_THROW(dm.set(0, 2, std::nan("")), Error);
  EXPECT_THROW(DemandMatrix::FromRowMajor(2, {0, 1, 1}), Error);
  EXPECT_DOUBLE_EQ(dm.Scaled(3).Total(), 6.0);
}

TEST(GravityTest, ExplicitMasses) {
  std::vector<double> masses = {1, 2, 3};
  DemandMatrix dm = GravityMatrix(masses, 22.0, 0);
  // Off-diagonal mass products sum to 2 * (2 + 3 + 6) = 22.
  EXPECT_DOUBLE_EQ(dm.at(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(dm.at(1, 2), 6.0);
  EXPECT_DOUBLE_EQ(dm.at(2, 0), 3.0);
  EXPECT_DOUBLE_EQ(dm.at(1, 1), 0.0);
  EXPECT_NEAR(dm.Total(), 22.0, 1e-12);
}

TEST(GravityTest, SymmetricAndScaledToVolume) {
  GravityOptions opts;
  opts.count = 8;
  opts.total_volume = 5.0;
  opts.seed = 3;
  DemandSeries series = GravitySeries(6, opts);
  ASSERT_EQ(series.size(), 8);
  for (int t = 0; t < series.size(); ++t) {
    const DemandMatrix& dm = series.matrices[t];
    EXPECT_EQ(dm.epoch(), t);
    EXPECT_NEAR(dm.Total(), 5.0, 1e-12);
    for (int s = 0; s < 6; ++s) {
      for (int d = 0; d < 6; ++d) EXPECT_DOUBLE_EQ(dm.at(s, d), dm.at(d, s));
    }
  }
  EXPECT_FALSE(series.matrices[0] == series.matrices[1]);
}

TEST(GravityTest, DeterministicUnderSeed) {
  GravityOptions opts;
  opts.count = 5;
  EXPECT_EQ(GravitySeries(7, opts).matrices, GravitySeries(7, opts).matrices);
  GravityOptions other = opts;
  other.seed = 2;
  EXPECT_FALSE(GravitySeries(7, opts).matrices ==
               GravitySeries(7, other).matrices);
}

TEST(GravityTest, MassOverride) {
  GravityOptions opts;
  opts.count = 4;
  opts.mass_override = std::vector<double>{1, 1, 1, 1};
  DemandSeries series = GravitySeries(4, opts);
  for (const DemandMatrix& dm : series.matrices) {
    EXPECT_NEAR(dm.at(0, 3), 1.0 / 12, 1e-15);
  }
  opts.mass_override = std::vector<double>{1, 1};
  EXPECT_THROW(GravitySeries(4, opts), Error);
}

TEST(GravityTest, RejectsShortSeries) {
  GravityOptions opts;
  opts.count = 3;
  EXPECT_THROW(GravitySeries(4, opts), Error);
}

TEST(PerturbTest, FactorsStayInBand) {
  std::vector<double> masses = {1, 2, 3, 4};
  DemandMatrix dm = GravityMatrix(masses, 10.0, 0);
  DemandMatrix noisy = Perturb(dm, 0.2, 9);
  for (int s = 0; s < 4; ++s) {
    for (int d = 0; d < 4; ++d) {
      if (s == d) continue;
      double f = noisy.at(s, d) / dm.at(s, d);
      EXPECT_GE(f, 0.8);
      EXPECT_LE(f, 1.2);
    }
  }
  EXPECT_EQ(Perturb(dm, 0.2, 9), noisy);
  EXPECT_THROW(Perturb(dm, 0.0, 1), Error);
  EXPECT_THROW(Perturb(dm, 1.0, 1), Error);
}

TEST(PerturbTest, TinyAlphaIsNearlyIdentity) {
  std::vector<double> masses = {1, 2, 3};
  DemandMatrix dm = GravityMatrix(masses, 1.0, 0);
  DemandMatrix noisy = Perturb(dm, 1e-9, 4);
  for (int s = 0; s < 3; ++s) {
    for (int d = 0; d < 3; ++d) {
      EXPECT_NEAR(noisy.at(s, d), dm.at(s, d), 1e-9 * dm.at(s, d) + 1e-18);
    }
  }
}

TEST(SplitTest, ThreeQuartersPrefix) {
  GravityOptions opts;
  opts.count = 10;
  DemandSeries series = GravitySeries(3, opts);
  auto [train, test] = Split(series);
  EXPECT_EQ(train.size(), 7u);
  EXPECT_EQ(test.size(), 3u);
  EXPECT_EQ(test.front().epoch(), 7);
  EXPECT_THROW(Split(DemandSeries{}), Error);
}

}  // namespace
}  // namespace reweave
