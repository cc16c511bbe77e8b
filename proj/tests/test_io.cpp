#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ballmapper/hash.hpp"
#include "ballmapper/io.hpp"
#include "oracles.hpp"

using namespace ballmapper;

namespace {

const std::vector<std::string> kIds = {"r0", "r1", "r2", "r3", "r4"};

Cover chain_cover() {
  return build_cover(PointMatrix(1, {0, 1, 2, 3, 4}), {1.0, LandmarkStrategy::first_uncovered, 0});
}

}  // namespace

TEST(GraphJson, ChainShape) {
  const auto cover = chain_cover();
  const auto g = build_graph(cover);
  const auto j = graph_to_json(cover, g, kIds);
  ASSERT_EQ(j["vertices"].size(), 3u);
  EXPECT_EQ(j["vertices"][1]["id"], 2);
  EXPECT_EQ(j["vertices"][1]["weight"], 3);
  EXPECT_EQ(j["vertices"][1]["members"], (json{"r1", "r2", "r3"}));
  ASSERT_EQ(j["edges"].size(), 2u);
  EXPECT_EQ(j["edges"][0], (json{{"source", 1}, {"target", 2}, {"weight", 1}}));
  EXPECT_EQ(j["params"]["epsilon"], 1.0);
  EXPECT_EQ(j["params"]["strategy"], "first");
  EXPECT_FALSE(j.contains("colorings"));
}

TEST(GraphJson, ColoringsWithMissingBalls) {
  const auto cover = chain_cover();
  std::vector<Cell> f = {std::nullopt, std::nullopt, 3.0, std::nullopt, std::nullopt};
  const Coloring c[] = {induce_coloring(cover, f, "f")};
  const auto j = graph_to_json(cover, build_graph(cover), kIds, c);
  EXPECT_EQ(j["colorings"]["f"], (json{nullptr, 3.0, nullptr}));
}

TEST(Dot, ChainWidthsAndLinks) {
  std::ostringstream out;
  write_dot(out, build_graph(chain_cover()));
  const std::string s = out.str();
  EXPECT_NE(s.find("1 [label=\"1\", width=" + format_number(0.25 * std::sqrt(2.0))), std::string::npos) << s;
  EXPECT_NE(s.find("2 [label=\"2\", width=" + format_number(0.25 * std::sqrt(3.0))), std::string::npos);
  EXPECT_NE(s.find("1 -- 2 [weight=1]"), std::string::npos);
  EXPECT_NE(s.find("2 -- 3 [weight=1]"), std::string::npos);
  EXPECT_EQ(s.find("1 -- 3"), std::string::npos);
}

TEST(MembershipCsv, Chain) {
  std::ostringstream out;
  write_membership_csv(out, chain_cover(), kIds);
  EXPECT_EQ(out.str(), "row_id,ball_id\nr0,1\nr1,1\nr1,2\nr2,2\nr3,2\nr3,3\nr4,3\n");
}

TEST(RegressionTable, StarsAndTRow) {
  RegressionFit fit;
  fit.terms = {"const", "size"};
  fit.coefficients = {0.5, -1.25};
  fit.standard_errors = {0.1, 1.0};
  fit.t_abs = {5.0, 1.25};
  fit.n_obs = 40;
  std::ostringstream out;
  write_regression_table(out, fit);
  EXPECT_EQ(out.str(), "row,const,size,n\nestimate,0.500***,-1.250,40\n|t|,(5.000),(1.250),\n");
  const auto j = regression_to_json(fit);
  EXPECT_EQ(j["terms"][0]["stars"], "***");
  EXPECT_EQ(j["terms"][1]["stars"], "");
  EXPECT_TRUE(j["r_squared"].is_number());
}

TEST(ComparisonJson, FlagsListed) {
  ComparisonReport r;
  r.group_a = {BallId(1)};
  r.group_b = {BallId(3)};
  ComparisonRow row;
  row.variable = "f";
  row.mean_a = 1.5;
  row.mean_b = 4.5;
  row.diff = -3.0;
  row.sigma = 1.0;
  row.dist = -3.0;
  row.flagged = true;
  r.rows.push_back(row);
  const auto j = comparison_to_json(r);
  EXPECT_EQ(j["flags"], (json{"f"}));
  EXPECT_EQ(j["rows"][0]["dist"], -3.0);
}

TEST(CoverArtifact, RoundTripOnRandomCovers) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = oracle::random_cloud(rng, 80 + trial, 3);
    const PointMatrix pts(3, c.xs);
    const CoverParams p{0.2 + 0.01 * trial, trial % 2 ? LandmarkStrategy::seeded_random : LandmarkStrategy::first_uncovered,
                        static_cast<std::uint64_t>(trial)};
    const auto cover = build_cover(pts, p);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < c.n; ++i) ids.push_back("id" + std::to_string(i));
    const std::vector<std::string> axes = {"a", "b", "c"};
    const json j = cover_to_json(cover, axes, ids);
    const auto back = cover_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.cover.landmarks, cover.landmarks);
    EXPECT_EQ(back.cover.members, cover.members);
    EXPECT_EQ(back.cover.params.epsilon, cover.params.epsilon);
    EXPECT_EQ(back.cover.params.strategy, cover.params.strategy);
    EXPECT_EQ(back.cover.params.seed, cover.params.seed);
    EXPECT_EQ(back.axes, axes);
    EXPECT_EQ(build_graph(back.cover).edges, build_graph(cover).edges);
    EXPECT_EQ(cover_to_json(back.cover, back.axes, ids), j);
  }
}

TEST(CoverArtifact, RejectsBadArtifacts) {
  const auto cover = chain_cover();
  const std::vector<std::string> axes = {"x"};
  json j = cover_to_json(cover, axes, kIds);
  json wrong = j;
  wrong["format"] = "other";
  EXPECT_THROW(cover_from_json(wrong), DataError);
  json out_of_range = j;
  out_of_range["members"][0].push_back(17);
  EXPECT_THROW(cover_from_json(out_of_range), DataError);
  json bad_eps = j;
  bad_eps["params"]["epsilon"] = -1.0;
  EXPECT_THROW(cover_from_json(bad_eps), ValidationError);
}

TEST(CoverArtifact, TableMismatch) {
  const std::vector<std::string> axes = {"x"};
  const auto stored = cover_from_json(cover_to_json(chain_cover(), axes, kIds));
  std::vector<Cell> v(5, 1.0);
  const DataTable same(kIds, {{"x", v}});
  EXPECT_NO_THROW(check_cover_matches(stored, same));
  const DataTable renamed({"r0", "r1", "zz", "r3", "r4"}, {{"x", v}});
  EXPECT_THROW(check_cover_matches(stored, renamed), DataError);
  const DataTable shorter({"r0", "r1"}, {{"x", {1.0, 2.0}}});
  EXPECT_THROW(check_cover_matches(stored, shorter), DataError);
}

TEST(Hash, KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
