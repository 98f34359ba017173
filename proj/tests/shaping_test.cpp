#include <gtest/gtest.h>

#include <cmath>

#include "gdqn/error.hpp"
#include "gdqn/shaping.hpp"
#include "oracles.hpp"

using namespace gdqn;

namespace {

Raster random_mask(int w, int h, double density, Rng& rng) {
  Raster r(w, h);
  for (auto& c : r.cells) c = rng.uniform01() < density ? 1 : 0;
  if (r.count() == 0) r.at(static_cast<int>(rng.uniform_index(w)), 0) = 1;
  return r;
}

}  // namespace

TEST(Overlap, Basics) {
  Raster g(5, 4), s(5, 4);
  for (int x = 0; x < 5; ++x) {
    g.at(x, 2) = 1;
    g.at(x, 3) = 1;
  }
  EXPECT_EQ(overlap_ratio(g, g), 1.0);
  EXPECT_EQ(overlap_ratio(s, g), 0.0);
  s.at(0, 2) = s.at(1, 2) = s.at(2, 2) = s.at(3, 2) = s.at(4, 2) = 1;  // 5 of 10
  s.at(0, 0) = s.at(1, 0) = s.at(2, 0) = 1;                          // 3 elsewhere
  EXPECT_EQ(overlap_ratio(s, g), 0.5);
  EXPECT_THROW(overlap_ratio(s, Raster(5, 4)), DomainError);
  EXPECT_THROW(overlap_ratio(Raster(4, 4), g), ShapeError);
}

TEST(Overlap, RewardSignAndAntisymmetry) {
  Raster g(6, 1), a(6, 1), b(6, 1);
  g.at(1, 0) = g.at(2, 0) = 1;
  b.at(1, 0) = 1;
  EXPECT_EQ(overlap_reward(a, b, g), 1);
  EXPECT_EQ(overlap_reward(b, a, g), -1);
  EXPECT_EQ(overlap_reward(a, a, g), 0);
  Raster c = b;
  c.at(5, 0) = 1;  // extra cell outside the target does not change the ratio
  EXPECT_EQ(overlap_reward(b, c, g), 0);
}

TEST(Overlap, MonotoneUnderCorrectCells) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Raster g = random_mask(8, 8, 0.3, rng);
    Raster s = random_mask(8, 8, 0.2, rng);
    double prev = overlap_ratio(s, g);
    EXPECT_GE(prev, 0.0);
    EXPECT_LE(prev, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.cells[i] || s.cells[i]) continue;
      s.cells[i] = 1;
      const double now = overlap_ratio(s, g);
      EXPECT_GT(now, prev);
      prev = now;
    }
    EXPECT_EQ(prev, 1.0);
  }
}

TEST(DistanceTransform, MatchesBruteForce) {
  Rng rng(8);
  for (auto metric : {DistanceMetric::manhattan, DistanceMetric::euclidean}) {
    for (int t = 0; t < 200; ++t) {
      const Raster g = random_mask(9, 9, rng.uniform(0.02, 0.5), rng);
      const DistanceMap d = distance_transform(g, metric);
      EXPECT_EQ(d.values, oracle::distance_transform(g, metric)) << "mask " << t;
    }
  }
}

TEST(DistanceTransform, SmallCases) {
  Raster g(5, 5);
  g.at(2, 2) = 1;
  const DistanceMap m = distance_transform(g);
  EXPECT_EQ(m.at(2, 2), 0.0);
  EXPECT_EQ(m.at(1, 2), 1.0);
  EXPECT_EQ(m.at(0, 0), 4.0);
  const DistanceMap e = distance_transform(g, DistanceMetric::euclidean);
  EXPECT_EQ(e.at(0, 0), std::sqrt(8.0));
  EXPECT_THROW(distance_transform(Raster(3, 3)), DomainError);
}

TEST(DistanceTransform, NonSquareScenes) {
  Rng rng(12);
  for (int t = 0; t < 30; ++t) {
    const Raster g = random_mask(13, 4, 0.1, rng);
    for (auto metric : {DistanceMetric::manhattan, DistanceMetric::euclidean}) {
      EXPECT_EQ(distance_transform(g, metric).values, oracle::distance_transform(g, metric));
    }
  }
}

TEST(DistanceTransform, ZeroOnForegroundAndLipschitz) {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const Raster g = random_mask(12, 10, 0.05, rng);
    for (auto metric : {DistanceMetric::manhattan, DistanceMetric::euclidean}) {
      const DistanceMap d = distance_transform(g, metric);
      for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
          EXPECT_EQ(d.at(x, y) == 0.0, g.at(x, y) == 1);
          if (x + 1 < g.width) EXPECT_LE(std::abs(d.at(x, y) - d.at(x + 1, y)), 1.0 + 1e-12);
          if (y + 1 < g.height) EXPECT_LE(std::abs(d.at(x, y) - d.at(x, y + 1)), 1.0 + 1e-12);
        }
      }
    }
  }
}

TEST(DistanceSum, MatchesNaiveSum) {
  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    const Raster g = random_mask(9, 9, 0.1, rng);
    const Raster s = random_mask(9, 9, 0.3, rng);
    const DistanceMap d = distance_transform(g);
    double want = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.cells[i]) want += d.values[i];
    }
    EXPECT_EQ(distance_sum(s, d), want);
    EXPECT_EQ(distance_sum(g, d), 0.0);
  }
  Raster g(9, 1), s(9, 1);
  g.at(0, 0) = 1;
  s.at(4, 0) = 1;
  EXPECT_EQ(distance_sum(s, distance_transform(g)), 4.0);
  EXPECT_THROW(distance_sum(Raster(3, 3), distance_transform(g)), ShapeError);
}

TEST(DistanceReward, SignConvention) {
  Raster g(9, 1), far(9, 1), near(9, 1);
  g.at(0, 0) = 1;
  far.at(5, 0) = 1;
  near.at(4, 0) = 1;
  const DistanceMap d = distance_transform(g);
  EXPECT_EQ(distance_reward(far, near, d), 1);
  EXPECT_EQ(distance_reward(near, far, d), -1);
  EXPECT_EQ(distance_reward(near, near, d), 0);
}

TEST(Shaping, Names) {
  for (auto s : {Shaping::none, Shaping::overlap, Shaping::distance}) {
    EXPECT_EQ(shaping_from_string(to_string(s)), s);
  }
  EXPECT_EQ(to_string(Shaping::overlap), "or");
  EXPECT_EQ(to_string(Shaping::distance), "dt");
  EXPECT_THROW(shaping_from_string("potential"), InvalidConfig);
}
