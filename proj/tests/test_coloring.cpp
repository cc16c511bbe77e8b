#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ballmapper/coloring.hpp"
#include "ballmapper/cover.hpp"
#include "ballmapper/synth.hpp"
#include "ballmapper/table.hpp"
#include "oracles.hpp"

using namespace ballmapper;

namespace {

PointMatrix chain_points() { return PointMatrix(1, {0, 1, 2, 3, 4}); }

Cover chain_cover() { return build_cover(chain_points(), {1.0, LandmarkStrategy::first_uncovered, 0}); }

std::vector<Cell> cells(const std::vector<double>& v) { return {v.begin(), v.end()}; }

DataTable table_of(const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < cols.front().second.size(); ++i) ids.push_back("r" + std::to_string(i));
  std::vector<Column> out;
  for (const auto& [name, v] : cols) out.push_back({name, cells(v)});
  return DataTable(ids, out);
}

std::vector<BallId> ids(std::initializer_list<std::size_t> v) {
  std::vector<BallId> out;
  for (auto x : v) out.emplace_back(x);
  return out;
}

// Two pairs far apart: balls {0,1} and {2,3} at radius 1.
PointMatrix two_pairs() { return PointMatrix(1, {0, 0.5, 10, 10.5}); }

}  // namespace

TEST(Coloring, ChainMiddleBallMean) {
  const auto c = induce_coloring(chain_cover(), cells({0, 10, 20, 30, 0}), "f");
  ASSERT_EQ(c.values.size(), 3u);
  EXPECT_DOUBLE_EQ(*c.values[1], 20.0);
  EXPECT_DOUBLE_EQ(*c.values[0], 5.0);
  EXPECT_DOUBLE_EQ(*c.values[2], 15.0);
  EXPECT_EQ(c.counts, (std::vector<std::size_t>{2, 3, 2}));
}

TEST(Coloring, ConstantVariable) {
  const auto c = induce_coloring(chain_cover(), cells({7, 7, 7, 7, 7}), "k");
  for (const auto& v : c.values) EXPECT_EQ(*v, 7.0);
}

TEST(Coloring, IndicatorGivesShare) {
  const auto c = induce_coloring(chain_cover(), cells({1, 0, 1, 0, 1}), "jan");
  EXPECT_DOUBLE_EQ(*c.values[0], 0.5);
  EXPECT_DOUBLE_EQ(*c.values[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*c.values[2], 0.5);
}

TEST(Coloring, MissingValuesAreSkipped) {
  std::vector<Cell> v = {std::nullopt, std::nullopt, 4.0, std::nullopt, std::nullopt};
  const auto c = induce_coloring(chain_cover(), v, "m");
  EXPECT_FALSE(c.values[0].has_value());
  EXPECT_EQ(c.counts[0], 0u);
  EXPECT_DOUBLE_EQ(*c.values[1], 4.0);
  EXPECT_EQ(c.counts[1], 1u);
}

TEST(Coloring, TableVariableAndErrors) {
  const auto t = table_of({{"f", {1, 2, 3, 4, 5}}});
  EXPECT_DOUBLE_EQ(*induce_coloring(chain_cover(), t, "f").values[1], 3.0);
  EXPECT_THROW(induce_coloring(chain_cover(), t, "nope"), ValidationError);
  const auto short_t = table_of({{"f", {1, 2, 3}}});
  EXPECT_THROW(induce_coloring(chain_cover(), short_t, "f"), ValidationError);
}

// Each ball value lies between the min and max of its members.
TEST(ColoringProperty, BoundedByMembers) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = oracle::random_cloud(rng, 150, 3);
    const PointMatrix pts(3, c.xs);
    const auto cover = build_cover(pts, {0.25, LandmarkStrategy::first_uncovered, 0});
    std::vector<Cell> f;
    for (std::size_t i = 0; i < c.n; ++i) f.emplace_back(g(rng));
    const auto col = induce_coloring(cover, f, "f");
    for (std::size_t b = 0; b < cover.ball_count(); ++b) {
      double lo = INFINITY, hi = -INFINITY;
      for (auto p : cover.members[b]) {
        lo = std::min(lo, *f[p]);
        hi = std::max(hi, *f[p]);
      }
      EXPECT_GE(*col.values[b], lo - 1e-12);
      EXPECT_LE(*col.values[b], hi + 1e-12);
    }
  }
}

TEST(Summary, ChainObsAndMeans) {
  const auto t = table_of({{"f", {1, 2, 3, 4, 5}}, {"g", {0, 0, 1, 1, 1}}});
  const std::string vars[] = {"f", "g"};
  const auto rows = ball_summary(chain_cover(), t, vars);
  ASSERT_EQ(rows.size(), 3u);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.obs;
  EXPECT_EQ(total, 7u);
  EXPECT_EQ(rows[1].obs, 3u);
  EXPECT_EQ(rows[1].ball, BallId(2));
  EXPECT_DOUBLE_EQ(*rows[1].means[0], 3.0);
  EXPECT_DOUBLE_EQ(*rows[1].means[1], 2.0 / 3.0);
}

TEST(Summary, SingleBallIsWholeSample) {
  const auto t = table_of({{"f", {1, 2, 3, 4, 5}}});
  const auto cover = build_cover(chain_points(), {10.0, LandmarkStrategy::first_uncovered, 0});
  const std::string vars[] = {"f"};
  const auto rows = ball_summary(cover, t, vars);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].obs, 5u);
  EXPECT_DOUBLE_EQ(*rows[0].means[0], 3.0);
}

TEST(Summary, SingleMemberBallShowsRawValues) {
  const auto t = table_of({{"f", {1.25, 2, 3, 4, -9.5}}});
  const auto cover = build_cover(chain_points(), {0.5, LandmarkStrategy::first_uncovered, 0});
  const std::string vars[] = {"f"};
  const auto rows = ball_summary(cover, t, vars);
  EXPECT_EQ(*rows[0].means[0], 1.25);
  EXPECT_EQ(*rows[4].means[0], -9.5);
}

// Original units come back from normalized coordinates.
TEST(Summary, MeansAreInOriginalUnits) {
  const auto t = generate_y_cloud({.n = 120, .seed = 3});
  const std::string axes[] = {"x", "y"};
  const auto cloud = normalize_minmax(t, axes);
  const auto cover = build_cover(cloud, {0.2, LandmarkStrategy::first_uncovered, 0});
  const auto rows = ball_summary(cover, t, axes);
  for (std::size_t b = 0; b < cover.ball_count(); ++b) {
    double sx = 0;
    for (auto p : cover.members[b]) sx += cloud.original(p, 0);
    EXPECT_NEAR(*rows[b].means[0], sx / static_cast<double>(cover.members[b].size()), 1e-9);
  }
}

TEST(Compare, SelfComparisonIsZero) {
  const auto t = table_of({{"f", {1, 2, 3, 4, 5}}, {"g", {3, 1, 4, 1, 5}}});
  const std::string vars[] = {"f", "g"};
  const auto a = ids({2});
  const auto r = compare_balls(chain_cover(), t, a, a, vars);
  for (const auto& row : r.rows) {
    EXPECT_EQ(*row.diff, 0.0);
    EXPECT_EQ(*row.dist, 0.0);
    EXPECT_FALSE(row.flagged);
  }
  EXPECT_TRUE(r.flags().empty());
}

TEST(Compare, ChainEnds) {
  const auto t = table_of({{"f", {1, 2, 3, 4, 5}}});
  const std::string vars[] = {"f"};
  const auto r = compare_balls(chain_cover(), t, ids({1}), ids({3}), vars);
  ASSERT_EQ(r.rows.size(), 1u);
  const auto& row = r.rows[0];
  EXPECT_DOUBLE_EQ(*row.mean_a, 1.5);
  EXPECT_DOUBLE_EQ(*row.mean_b, 4.5);
  EXPECT_DOUBLE_EQ(*row.diff, -3.0);
  EXPECT_DOUBLE_EQ(row.sigma, std::sqrt(2.0));
  EXPECT_NEAR(*row.dist, -3.0 / std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(row.flagged);
  EXPECT_EQ(r.flags(), std::vector<std::string>{"f"});
}

TEST(Compare, Antisymmetric) {
  std::mt19937_64 rng(9);
  const auto c = oracle::random_cloud(rng, 200, 2);
  const PointMatrix pts(2, c.xs);
  const auto cover = build_cover(pts, {0.2, LandmarkStrategy::first_uncovered, 0});
  std::vector<double> f(c.n);
  for (std::size_t i = 0; i < c.n; ++i) f[i] = c.xs[2 * i] * 3 + c.xs[2 * i + 1];
  const auto t = table_of({{"f", f}});
  const std::string vars[] = {"f"};
  const auto ab = compare_balls(cover, t, ids({1, 2}), ids({3}), vars);
  const auto ba = compare_balls(cover, t, ids({3}), ids({1, 2}), vars);
  EXPECT_DOUBLE_EQ(*ab.rows[0].diff, -*ba.rows[0].diff);
  EXPECT_DOUBLE_EQ(*ab.rows[0].dist, -*ba.rows[0].dist);
}

TEST(Compare, PooledMembersAreDistinct) {
  const auto cover = chain_cover();
  const auto g = ids({1, 2});
  EXPECT_EQ(pooled_members(cover, g), (std::vector<std::size_t>{0, 1, 2, 3}));
  const auto t = table_of({{"f", {1, 2, 3, 4, 5}}});
  const std::string vars[] = {"f"};
  const auto r = compare_balls(cover, t, g, ids({3}), vars);
  EXPECT_EQ(r.members_a, 4u);
  EXPECT_DOUBLE_EQ(*r.rows[0].mean_a, 2.5);
}

TEST(Compare, ZeroSigmaIsNotFlagged) {
  const auto t = table_of({{"k", {2, 2, 2, 2, 2}}});
  const std::string vars[] = {"k"};
  const auto r = compare_balls(chain_cover(), t, ids({1}), ids({3}), vars);
  EXPECT_TRUE(r.rows[0].sigma_zero);
  EXPECT_FALSE(r.rows[0].dist.has_value());
  EXPECT_FALSE(r.rows[0].flagged);
}

TEST(Compare, Errors) {
  const auto t = table_of({{"f", {1, 2, 3, 4, 5}}});
  const std::string vars[] = {"f"}, bad[] = {"zzz"};
  EXPECT_THROW(compare_balls(chain_cover(), t, ids({9}), ids({1}), vars), NotFoundError);
  EXPECT_THROW(compare_balls(chain_cover(), t, {}, ids({1}), vars), ValidationError);
  EXPECT_THROW(compare_balls(chain_cover(), t, ids({1}), ids({2}), bad), ValidationError);
}

TEST(Compare, FlagsOnlyTheShiftedVariable) {
  // a-rows in the left tail of x, b-rows in the right tail, bulk in between;
  // y and w take identical values in both groups.
  std::vector<double> x, y, w, u;
  const double ab_y[] = {0.48, 0.49, 0.5, 0.51, 0.52};
  for (int g = 0; g < 2; ++g) {
    for (int i = 0; i < 5; ++i) {
      x.push_back(g == 0 ? 3.0 : 7.0);
      y.push_back(ab_y[i]);
      w.push_back(i % 2 ? -1 : 1);
    }
  }
  for (int i = 0; i < 40; ++i) {
    x.push_back(i % 2 ? 5.5 : 4.5);
    y.push_back(i / 39.0);
    w.push_back(i % 2 ? 1 : -1);
  }
  const auto t = table_of({{"x", x}, {"y", y}, {"w", w}});
  const std::string axes[] = {"x", "y"};
  const auto cloud = normalize_minmax(t, axes);
  const auto cover = build_cover(cloud, {0.1, LandmarkStrategy::first_uncovered, 0});
  EXPECT_EQ(cover.members[0], (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(cover.members[1], (std::vector<std::size_t>{5, 6, 7, 8, 9}));
  const std::string vars[] = {"x", "y", "w"};
  const auto r = compare_balls(cover, t, ids({1}), ids({2}), vars);
  EXPECT_EQ(r.flags(), std::vector<std::string>{"x"});
  EXPECT_DOUBLE_EQ(r.rows[0].sigma, 1.0);
  EXPECT_DOUBLE_EQ(*r.rows[0].dist, -4.0);
}

TEST(CompareArithmetic, PublishedGroupMeans) {
  // The diff of two printed group means, rounded as printed.
  const double diff = -57.17 - 8.621;
  EXPECT_NEAR(std::round(diff * 100) / 100, -65.79, 1e-12);
}

TEST(CompareArithmetic, PublishedDiffAndSigma) {
  // Four points whose group means differ by 0.262 and whose population
  // standard deviation is 0.636.
  const double m = 1.0, h = 0.131, s = 0.636, t = std::sqrt(s * s - h * h);
  const auto tab = table_of({{"v", {m + h + t, m + h - t, m - h + t, m - h - t}}});
  const auto cover = build_cover(two_pairs(), {1.0, LandmarkStrategy::first_uncovered, 0});
  ASSERT_EQ(cover.ball_count(), 2u);
  const std::string vars[] = {"v"};
  const auto r = compare_balls(cover, tab, ids({1}), ids({2}), vars);
  EXPECT_NEAR(*r.rows[0].diff, 0.262, 1e-12);
  EXPECT_NEAR(r.rows[0].sigma, 0.636, 1e-12);
  EXPECT_NEAR(std::abs(*r.rows[0].dist), 0.412, 0.0005);
  EXPECT_NEAR(std::abs(*r.rows[0].dist), 0.413, 0.002);
  EXPECT_FALSE(r.rows[0].flagged);
}

TEST(StandardizedDifference, Basic) {
  EXPECT_DOUBLE_EQ(*standardized_difference(1.0, 0.5), 2.0);
  EXPECT_FALSE(standardized_difference(1.0, 0.0).has_value());
}

TEST(AssignUnique, ChainLowestBallWins) {
  const auto owner = assign_unique(chain_cover());
  EXPECT_EQ(owner, ids({1, 1, 2, 2, 3}));
}

TEST(AssignUniqueProperty, PartitionAndOverlapAccounting) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = oracle::random_cloud(rng, 100 + trial, 2 + trial % 3);
    const PointMatrix pts(c.d, c.xs);
    const double e = 0.1 + 0.02 * (trial % 10);
    const auto cover = build_cover(pts, {e, LandmarkStrategy::first_uncovered, 0});
    const auto owner = assign_unique(cover);
    ASSERT_EQ(owner.size(), c.n);
    std::size_t weight_sum = 0;
    for (const auto& m : cover.members) weight_sum += m.size();
    for (std::size_t p = 0; p < c.n; ++p) {
      const auto& m = cover.members[owner[p].index()];
      EXPECT_TRUE(std::binary_search(m.begin(), m.end(), p));
      for (std::size_t b = 0; b < owner[p].index(); ++b) {
        EXPECT_FALSE(std::binary_search(cover.members[b].begin(), cover.members[b].end(), p));
      }
    }
    // Sum of weights counts each point once per ball holding it.
    EXPECT_GE(weight_sum, c.n);
    EXPECT_EQ(weight_sum == c.n, build_graph(cover).edges.empty());
  }
}
