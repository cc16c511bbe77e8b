#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ballmapper/error.hpp"
#include "ballmapper/geometry.hpp"

namespace ballmapper {

// 1-based ball number as shown to analysts. Ball k is cover element k - 1.
struct BallId {
  std::size_t value = 0;

  constexpr BallId() = default;
  constexpr explicit BallId(std::size_t v) : value(v) {}
  static constexpr BallId from_index(std::size_t index) { return BallId(index + 1); }
  constexpr std::size_t index() const { return value - 1; }

  friend constexpr auto operator<=>(BallId, BallId) = default;
};

enum class LandmarkStrategy { first_uncovered, seeded_random };

inline std::string to_string(LandmarkStrategy s) {
  return s == LandmarkStrategy::first_uncovered ? "first" : "random";
}

inline LandmarkStrategy parse_strategy(const std::string& s) {
  if (s == "first" || s == "first-uncovered-index") return LandmarkStrategy::first_uncovered;
  if (s == "random" || s == "seeded-random") return LandmarkStrategy::seeded_random;
  throw ValidationError("unknown landmark strategy: " + s);
}

struct CoverParams {
  double epsilon = 0.1;  // radius in normalized coordinate units
  LandmarkStrategy strategy = LandmarkStrategy::first_uncovered;
  std::uint64_t seed = 0;  // seeded_random only

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw ValidationError("epsilon must be a positive finite number");
    }
  }
};

// Landmarks (point indices) and, for each, the sorted indices of every point
// within epsilon. Balls overlap.
struct Cover {
  CoverParams params;
  std::vector<std::size_t> landmarks;
  std::vector<std::vector<std::size_t>> members;
  std::size_t point_count = 0;
  // Table row behind each point, and the table's row count.
  std::vector<std::size_t> source_rows;
  std::size_t table_rows = 0;

  std::size_t ball_count() const { return landmarks.size(); }
  const std::vector<std::size_t>& ball(BallId id) const {
    if (id.value == 0 || id.value > members.size()) {
      throw NotFoundError("unknown ball id " + std::to_string(id.value));
    }
    return members[id.index()];
  }
};

struct Edge {
  BallId source;  // source < target
  BallId target;
  std::size_t weight;  // |C_source ∩ C_target|

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct BallMapperGraph {
  std::vector<std::size_t> vertex_weights;  // |C_i|, indexed by ball index
  std::vector<Edge> edges;                  // sorted by (source, target)

  std::size_t vertex_count() const { return vertex_weights.size(); }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(vertex_count(), 0);
    for (const Edge& e : edges) {
      ++deg[e.source.index()];
      ++deg[e.target.index()];
    }
    return deg;
  }

  std::size_t leaf_count() const {
    const auto deg = degrees();
    return static_cast<std::size_t>(std::count(deg.begin(), deg.end(), 1u));
  }

  std::size_t component_count() const {
    std::vector<std::size_t> parent(vertex_count());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = vertex_count();
    for (const Edge& e : edges) {
      const auto a = find(e.source.index()), b = find(e.target.index());
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
        --components;
      }
    }
    return components;
  }
};

// Greedy epsilon-net. Each round takes an uncovered point as the next landmark
// (the lowest index, or a seeded uniform pick among the uncovered) and marks
// every point within epsilon as covered. Comparisons are plain `<=` on
// doubles.
template <PointSet P>
std::vector<std::size_t> build_epsilon_net(const P& points, const CoverParams& params) {
  params.validate();
  const std::size_t n = points.size();
  if (n == 0) throw DataError("cannot build a cover of an empty point cloud");

  std::vector<char> covered(n, 0);
  std::vector<std::size_t> landmarks;
  auto cover_from = [&](std::size_t centre) {
    landmarks.push_back(centre);
    const auto c = points.point(centre);
    for (std::size_t p = 0; p < n; ++p) {
      if (!covered[p] && euclidean(c, points.point(p)) <= params.epsilon) covered[p] = 1;
    }
    covered[centre] = 1;
  };

  if (params.strategy == LandmarkStrategy::first_uncovered) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!covered[i]) cover_from(i);
    }
    return landmarks;
  }

  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> uncovered(n);
  std::iota(uncovered.begin(), uncovered.end(), 0);
  while (!uncovered.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, uncovered.size() - 1);
    cover_from(uncovered[pick(rng)]);
    std::erase_if(uncovered, [&](std::size_t p) { return covered[p] != 0; });
  }
  return landmarks;
}

// Every point within epsilon of each landmark, in ascending index order.
template <PointSet P>
Cover build_cover(const P& points, std::vector<std::size_t> landmarks,
                  const CoverParams& params) {
  params.validate();
  const std::size_t n = points.size();
  Cover cover;
  cover.params = params;
  cover.point_count = n;
  cover.members.reserve(landmarks.size());
  for (std::size_t l : landmarks) {
    if (l >= n) throw ValidationError("landmark index " + std::to_string(l) + " out of range");
    const auto c = points.point(l);
    std::vector<std::size_t> ball;
    for (std::size_t p = 0; p < n; ++p) {
      if (euclidean(c, points.point(p)) <= params.epsilon) ball.push_back(p);
    }
    cover.members.push_back(std::move(ball));
  }
  cover.landmarks = std::move(landmarks);
  if constexpr (requires { points.source_rows(); points.table_rows(); }) {
    cover.source_rows = points.source_rows();
    cover.table_rows = points.table_rows();
  } else {
    cover.source_rows.resize(n);
    std::iota(cover.source_rows.begin(), cover.source_rows.end(), 0);
    cover.table_rows = n;
  }
  return cover;
}

template <PointSet P>
Cover build_cover(const P& points, const CoverParams& params) {
  return build_cover(points, build_epsilon_net(points, params), params);
}

inline std::size_t intersection_size(const std::vector<std::size_t>& a,
                                     const std::vector<std::size_t>& b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

// Vertices weighted by ball size; an edge for every pair of balls sharing a
// point, weighted by the size of the overlap. Candidate pairs come from the
// point-to-ball incidence so only balls that can intersect are merged.
inline BallMapperGraph build_graph(const Cover& cover) {
  BallMapperGraph graph;
  graph.vertex_weights.reserve(cover.ball_count());
  for (const auto& m : cover.members) graph.vertex_weights.push_back(m.size());

  std::vector<std::vector<std::size_t>> balls_of(cover.point_count);
  for (std::size_t b = 0; b < cover.ball_count(); ++b) {
    for (std::size_t p : cover.members[b]) balls_of[p].push_back(b);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& balls : balls_of) {
    for (std::size_t x = 0; x < balls.size(); ++x) {
      for (std::size_t y = x + 1; y < balls.size(); ++y) pairs.emplace_back(balls[x], balls[y]);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  graph.edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    graph.edges.push_back({BallId::from_index(a), BallId::from_index(b),
                           intersection_size(cover.members[a], cover.members[b])});
  }
  return graph;
}

struct DiameterReport {
  std::vector<double> max_intra_distance;  // per ball
  std::vector<BallId> violations;          // balls wider than 2 epsilon + slack
};

// Largest pairwise distance inside each ball, checked against 2 epsilon.
template <PointSet P>
DiameterReport diameter_bound_check(const Cover& cover, const P& points,
                                    double slack = 1e-12) {
  DiameterReport report;
  const double bound = 2.0 * cover.params.epsilon + slack;
  for (std::size_t b = 0; b < cover.ball_count(); ++b) {
    const auto& m = cover.members[b];
    double widest = 0.0;
    for (std::size_t x = 0; x < m.size(); ++x) {
      for (std::size_t y = x + 1; y < m.size(); ++y) {
        widest = std::max(widest, euclidean(points.point(m[x]), points.point(m[y])));
      }
    }
    report.max_intra_distance.push_back(widest);
    if (widest > bound) report.violations.push_back(BallId::from_index(b));
  }
  return report;
}

}  // namespace ballmapper
