#include "segfit/geom.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace segfit;
using segfit::test::brute_nearest;
using segfit::test::random_points;

namespace {

std::size_t indexed_count(const GridIndex& idx) {
  std::size_t total = 0;
  idx.for_each_cell([&](const GridIndex::Cell&, std::span<const std::uint32_t> ids) { total += ids.size(); });
  return total;
}

}  // namespace

TEST(BuildIndex, EmptySetIsRejected) {
  try {
    build_index(PointSet{}, 1.0);
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "cannot index empty set");
  }
}

TEST(BuildIndex, NonPositiveCellSizeIsRejected) {
  PointSet s({Point(0, 0, 0)});
  EXPECT_THROW(build_index(s, 0.0), std::invalid_argument);
  EXPECT_THROW(build_index(s, -1.0), std::invalid_argument);
}

TEST(BuildIndex, SinglePointOccupiesOneCell) {
  auto idx = build_index(PointSet({Point(0, 0, 0)}), 1.0);
  EXPECT_EQ(idx.occupied_cells(), 1u);
  EXPECT_EQ(indexed_count(idx), 1u);
}

TEST(BuildIndex, CubeCornersFitInAtMostEightCells) {
  PointSet s;
  for (int k = 0; k < 8; ++k) s.push_back(Point(k & 1, (k >> 1) & 1, (k >> 2) & 1));
  auto idx = build_index(s, 2.0);
  EXPECT_LE(idx.occupied_cells(), 8u);
  EXPECT_EQ(indexed_count(idx), 8u);
}

TEST(BuildIndex, CountsSumToPointCount) {
  std::mt19937_64 rng(3);
  auto s = random_points(rng, 100, 0.0, 10.0);
  EXPECT_EQ(indexed_count(build_index(s, 1.0)), 100u);
}

TEST(BuildIndex, EveryPointInExactlyOneCellMatchingFloorFormula) {
  std::mt19937_64 rng(11);
  for (double cell : {0.05, 0.7, 3.0}) {  // 0.05 forces the sparse layout
    auto s = random_points(rng, 300, -20.0, 20.0);
    auto idx = build_index(s, cell);
    std::multiset<std::uint32_t> seen;
    idx.for_each_cell([&](const GridIndex::Cell& c, std::span<const std::uint32_t> ids) {
      for (auto i : ids) {
        seen.insert(i);
        const Point& p = s[i];
        const Point o = idx.origin();
        EXPECT_EQ(c.x, static_cast<std::int64_t>(std::floor((p.x() - o.x()) / cell)));
        EXPECT_EQ(c.y, static_cast<std::int64_t>(std::floor((p.y() - o.y()) / cell)));
        EXPECT_EQ(c.z, static_cast<std::int64_t>(std::floor((p.z() - o.z()) / cell)));
      }
    });
    ASSERT_EQ(seen.size(), s.size());
    for (std::uint32_t i = 0; i < s.size(); ++i) EXPECT_EQ(seen.count(i), 1u);
  }
}

TEST(NearestDistance, SelfQueryIsZero) {
  std::mt19937_64 rng(5);
  auto s = random_points(rng, 50, -1.0, 1.0);
  auto idx = build_index(s, 0.3);
  for (const auto& p : s) EXPECT_EQ(nearest_distance(idx, p), 0.0);
}

TEST(NearestDistance, ThreeFourFive) {
  auto idx = build_index(PointSet({Point(0, 0, 0)}), 1.0);
  EXPECT_EQ(nearest_distance(idx, Point(3, 4, 0)), 5.0);
}

TEST(NearestDistance, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  auto s = random_points(rng, 200, 0.0, 10.0);
  auto idx = build_index(s, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Point q = segfit::test::random_point(rng, -3.0, 13.0);
    EXPECT_EQ(nearest_distance(idx, q), brute_nearest(s, q));
  }
}

// Clustered sets, flat sets, far queries and tiny cells, 120 instances.
TEST(NearestDistance, MatchesBruteForceOnVariedInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> cellu(0.01, 4.0);
  std::uniform_int_distribution<int> countu(1, 400);
  for (int inst = 0; inst < 120; ++inst) {
    PointSet s;
    const int count = countu(rng);
    const bool flat = inst % 3 == 0;
    for (int i = 0; i < count; ++i) {
      Point p = segfit::test::random_point(rng, -5.0, 5.0);
      if (flat) p.z() = 0.0;
      if (inst % 4 == 1) p *= 0.01;  // dense cluster
      s.push_back(p);
    }
    const double cell = cellu(rng);
    auto idx = build_index(s, cell);
    for (int k = 0; k < 20; ++k) {
      Point q = segfit::test::random_point(rng, -40.0, 40.0);
      if (flat && k % 2 == 0) q.z() = 0.0;
      ASSERT_EQ(nearest_distance(idx, q), brute_nearest(s, q)) << "instance " << inst;
    }
  }
}

TEST(NearestDistance, TranslationInvariant) {
  std::mt19937_64 rng(8);
  for (int inst = 0; inst < 100; ++inst) {
    auto s = random_points(rng, 60, -2.0, 2.0);
    const Point shift = segfit::test::random_point(rng, -50.0, 50.0);
    PointSet moved;
    for (const auto& p : s) moved.push_back(p + shift);
    const Point q = segfit::test::random_point(rng, -3.0, 3.0);
    const double a = nearest_distance(build_index(s, 0.5), q);
    const double b = nearest_distance(build_index(moved, 0.5), q + shift);
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(NearestWithin, AgreesWithUnboundedQueryInsideCutoff) {
  std::mt19937_64 rng(21);
  auto s = random_points(rng, 100, 0.0, 4.0);
  auto idx = build_index(s, 0.25);
  for (int k = 0; k < 200; ++k) {
    const Point q = segfit::test::random_point(rng, -2.0, 6.0);
    const double d = brute_nearest(s, q);
    const auto w = idx.nearest_within(q, 0.5);
    if (d < 0.5) {
      ASSERT_TRUE(w.has_value());
      EXPECT_EQ(*w, d);
    } else {
      EXPECT_FALSE(w.has_value());
    }
  }
}

TEST(NearestOther, ExcludesTheQueryPoint) {
  PointSet s({Point(0, 0, 0), Point(1, 0, 0), Point(3, 0, 0)});
  auto idx = build_index(s, 0.5);
  EXPECT_EQ(idx.nearest_other(0), 1.0);
  EXPECT_EQ(idx.nearest_other(2), 2.0);
  EXPECT_TRUE(std::isinf(build_index(PointSet({Point(1, 1, 1)}), 1.0).nearest_other(0)));
}

TEST(BoundingBox, Singleton) {
  auto [lo, hi] = bounding_box(PointSet({Point(1, 2, 3)}));
  EXPECT_EQ(lo, Point(1, 2, 3));
  EXPECT_EQ(hi, Point(1, 2, 3));
}

TEST(BoundingBox, TwoPoints) {
  auto [lo, hi] = bounding_box(PointSet({Point(0, 0, 0), Point(1, -1, 2)}));
  EXPECT_EQ(lo, Point(0, -1, 0));
  EXPECT_EQ(hi, Point(1, 0, 2));
}

TEST(BoundingBox, MatchesDirectScan) {
  std::mt19937_64 rng(4);
  auto s = random_points(rng, 50, -7.0, 7.0);
  Point lo = s[0], hi = s[0];
  for (const auto& p : s)
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  auto [blo, bhi] = bounding_box(s);
  EXPECT_EQ(blo, lo);
  EXPECT_EQ(bhi, hi);
}

TEST(BoundingBox, EmptySetThrows) {
  EXPECT_THROW(bounding_box(PointSet{}), std::invalid_argument);
  EXPECT_FALSE(PointSet{}.bbox().has_value());
}

TEST(PointSet, RejectsNonFinite) {
  PointSet s;
  EXPECT_THROW(s.push_back(Point(0, std::nan(""), 0)), std::invalid_argument);
  EXPECT_THROW(s.push_back(Point(INFINITY, 0, 0)), std::invalid_argument);
  EXPECT_TRUE(s.empty());
}

TEST(Xyz, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  auto s = random_points(rng, 40, -1e3, 1e3);
  std::stringstream ss;
  write_xyz(ss, s);
  EXPECT_EQ(read_xyz(ss), s);
}

TEST(Xyz, SkipsCommentsAndBlankLines) {
  std::istringstream in("# header\n1 2 3\n\n  # indented comment\n4 5 6\n");
  auto s = read_xyz(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1], Point(4, 5, 6));
}

TEST(Xyz, MalformedLineReportsLineNumber) {
  std::istringstream in("1 2 3\n1 2\n");
  try {
    read_xyz(in);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream extra("1 2 3 4\n");
  EXPECT_THROW(read_xyz(extra), std::runtime_error);
}
