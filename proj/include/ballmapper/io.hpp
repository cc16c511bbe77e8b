#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballmapper/coloring.hpp"
#include "ballmapper/cover.hpp"
#include "ballmapper/models.hpp"
#include "ballmapper/table.hpp"

namespace ballmapper {

using nlohmann::json;

namespace detail {

inline json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::string csv_number(const std::optional<double>& v) {
  return v ? format_number(*v) : "NA";
}

inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string join_ids(std::span<const BallId> ids) {
  std::string out;
  for (BallId b : ids) {
    if (!out.empty()) out += ' ';
    out += std::to_string(b.value);
  }
  return out;
}

}  // namespace detail

inline json params_to_json(const CoverParams& p) {
  return {{"epsilon", p.epsilon}, {"strategy", to_string(p.strategy)}, {"seed", p.seed}};
}

inline CoverParams params_from_json(const json& j) {
  CoverParams p;
  p.epsilon = j.at("epsilon").get<double>();
  p.strategy = parse_strategy(j.at("strategy").get<std::string>());
  p.seed = j.value("seed", std::uint64_t{0});
  p.validate();
  return p;
}

inline json coloring_values(const Coloring& c) {
  json values = json::array();
  for (const auto& v : c.values) values.push_back(detail::optional_number(v));
  return values;
}

// {vertices:[{id,weight,members}], edges:[{source,target,weight}], params,
// colorings?}. Members are listed by row id.
inline json graph_to_json(const Cover& cover, const BallMapperGraph& graph,
                          std::span<const std::string> table_row_ids,
                          std::span<const Coloring> colorings = {}) {
  json vertices = json::array();
  for (std::size_t b = 0; b < cover.ball_count(); ++b) {
    json members = json::array();
    for (std::size_t p : cover.members[b]) members.push_back(table_row_ids[cover.source_rows[p]]);
    vertices.push_back({{"id", b + 1}, {"weight", graph.vertex_weights[b]}, {"members", std::move(members)}});
  }
  json edges = json::array();
  for (const Edge& e : graph.edges) {
    edges.push_back({{"source", e.source.value}, {"target", e.target.value}, {"weight", e.weight}});
  }
  json out{{"vertices", std::move(vertices)},
           {"edges", std::move(edges)},
           {"params", params_to_json(cover.params)}};
  if (!colorings.empty()) {
    json cj = json::object();
    for (const auto& c : colorings) cj[c.variable] = coloring_values(c);
    out["colorings"] = std::move(cj);
  }
  return out;
}

// Vertex width grows with the square root of the ball size.
inline void write_dot(std::ostream& out, const BallMapperGraph& graph, double scale = 0.25) {
  out << "graph ballmapper {\n  node [shape=circle, fixedsize=true];\n";
  for (std::size_t b = 0; b < graph.vertex_count(); ++b) {
    const double w = scale * std::sqrt(static_cast<double>(graph.vertex_weights[b]));
    out << "  " << b + 1 << " [label=\"" << b + 1 << "\", width=" << format_number(w)
        << ", weight=" << graph.vertex_weights[b] << "];\n";
  }
  for (const Edge& e : graph.edges) {
    out << "  " << e.source.value << " -- " << e.target.value << " [weight=" << e.weight
        << "];\n";
  }
  out << "}\n";
}

// One line per (row, ball) membership; rows in several balls repeat.
inline void write_membership_csv(std::ostream& out, const Cover& cover,
                                 std::span<const std::string> table_row_ids) {
  out << "row_id,ball_id\n";
  for (std::size_t b = 0; b < cover.ball_count(); ++b) {
    for (std::size_t p : cover.members[b]) {
      out << table_row_ids[cover.source_rows[p]] << ',' << b + 1 << '\n';
    }
  }
}

inline void write_dropped_csv(std::ostream& out, std::span<const DroppedRow> rows) {
  out << "row_id,reason\n";
  for (const auto& r : rows) out << r.row_id << ",\"" << r.reason << "\"\n";
}

inline void write_summary_csv(std::ostream& out, std::span<const BallSummaryRow> rows,
                              std::span<const std::string> variables) {
  out << "ball";
  for (const auto& v : variables) out << ',' << v;
  out << ",obs\n";
  for (const auto& r : rows) {
    out << r.ball.value;
    for (const auto& m : r.means) out << ',' << detail::csv_number(m);
    out << ',' << r.obs << '\n';
  }
}

inline json summary_to_json(std::span<const BallSummaryRow> rows,
                            std::span<const std::string> variables) {
  json out = json::array();
  for (const auto& r : rows) {
    json means = json::object();
    for (std::size_t i = 0; i < variables.size(); ++i) {
      means[variables[i]] = detail::optional_number(r.means[i]);
    }
    out.push_back({{"ball", r.ball.value}, {"means", std::move(means)}, {"obs", r.obs}});
  }
  return out;
}

inline void write_colorings_csv(std::ostream& out, std::span<const Coloring> colorings,
                                std::size_t balls) {
  out << "ball";
  for (const auto& c : colorings) out << ',' << c.variable;
  out << '\n';
  for (std::size_t b = 0; b < balls; ++b) {
    out << b + 1;
    for (const auto& c : colorings) out << ',' << detail::csv_number(c.values[b]);
    out << '\n';
  }
}

inline json coloring_to_json(const Coloring& c) {
  return {{"variable", c.variable}, {"values", coloring_values(c)}, {"counts", c.counts}};
}

inline json comparison_to_json(const ComparisonReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"variable", row.variable},
                    {"mean_a", detail::optional_number(row.mean_a)},
                    {"mean_b", detail::optional_number(row.mean_b)},
                    {"diff", detail::optional_number(row.diff)},
                    {"sigma", row.sigma},
                    {"dist", detail::optional_number(row.dist)},
                    {"sigma_zero", row.sigma_zero},
                    {"flagged", row.flagged}});
  }
  json a = json::array(), b = json::array();
  for (BallId id : r.group_a) a.push_back(id.value);
  for (BallId id : r.group_b) b.push_back(id.value);
  return {{"group_a", a},         {"group_b", b},
          {"members_a", r.members_a}, {"members_b", r.members_b},
          {"rows", std::move(rows)}, {"flags", r.flags()}};
}

// Diff and Dist per variable; flagged rows carry a '*' in the last column.
inline void write_comparison_csv(std::ostream& out, const ComparisonReport& r) {
  out << "compare," << detail::join_ids(r.group_a) << "\nwith," << detail::join_ids(r.group_b)
      << "\nvariable,mean_a,mean_b,diff,dist,flag\n";
  for (const auto& row : r.rows) {
    out << row.variable << ',' << detail::csv_number(row.mean_a) << ','
        << detail::csv_number(row.mean_b) << ',' << detail::csv_number(row.diff) << ','
        << detail::csv_number(row.dist) << ',' << (row.flagged ? "*" : "") << '\n';
  }
}

inline json regression_to_json(const RegressionFit& fit) {
  json terms = json::array();
  for (std::size_t j = 0; j < fit.terms.size(); ++j) {
    terms.push_back({{"term", fit.terms[j]},
                     {"coefficient", fit.coefficients[j]},
                     {"standard_error", fit.standard_errors[j]},
                     {"t_abs", fit.t_abs[j]},
                     {"stars", significance_stars(fit.t_abs[j])}});
  }
  return {{"terms", std::move(terms)},
          {"r_squared", std::isnan(fit.r_squared) ? json(nullptr) : json(fit.r_squared)},
          {"n", fit.n_obs}};
}

// Coefficient row with stars, then absolute t-statistics in parentheses.
inline void write_regression_table(std::ostream& out, const RegressionFit& fit,
                                   const std::string& label = "estimate") {
  out << "row";
  for (const auto& t : fit.terms) out << ',' << t;
  out << ",n\n" << label;
  for (std::size_t j = 0; j < fit.terms.size(); ++j) {
    out << ',' << detail::fixed(fit.coefficients[j]) << significance_stars(fit.t_abs[j]);
  }
  out << ',' << fit.n_obs << "\n|t|";
  for (double t : fit.t_abs) out << ",(" << detail::fixed(t) << ')';
  out << ",\n";
}

inline void write_cluster_report(std::ostream& out, std::span<const ClusterSizeReport> rows) {
  out << "method,groups,min,max\n";
  for (const auto& r : rows) {
    out << '"' << r.method << "\"," << r.groups << ',' << r.min_size << ',' << r.max_size << '\n';
  }
}

inline json cluster_report_to_json(std::span<const ClusterSizeReport> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"method", r.method}, {"groups", r.groups}, {"min", r.min_size},
                   {"max", r.max_size}, {"total", r.total}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persisted cover, shared by the CLI run directory and the service store.

inline json cover_to_json(const Cover& cover, std::span<const std::string> axes,
                          std::span<const std::string> table_row_ids) {
  json point_ids = json::array();
  for (std::size_t r : cover.source_rows) point_ids.push_back(table_row_ids[r]);
  return {{"format", "ballmapper-cover"},
          {"version", 1},
          {"params", params_to_json(cover.params)},
          {"axes", axes},
          {"table_rows", cover.table_rows},
          {"point_rows", cover.source_rows},
          {"point_ids", std::move(point_ids)},
          {"landmarks", cover.landmarks},
          {"members", cover.members}};
}

struct StoredCover {
  Cover cover;
  std::vector<std::string> axes;
  std::vector<std::string> point_ids;
};

inline StoredCover cover_from_json(const json& j) {
  if (j.value("format", "") != "ballmapper-cover") {
    throw DataError("not a ballmapper cover artifact");
  }
  StoredCover s;
  s.cover.params = params_from_json(j.at("params"));
  s.axes = j.at("axes").get<std::vector<std::string>>();
  s.cover.table_rows = j.at("table_rows").get<std::size_t>();
  s.cover.source_rows = j.at("point_rows").get<std::vector<std::size_t>>();
  s.point_ids = j.at("point_ids").get<std::vector<std::string>>();
  s.cover.landmarks = j.at("landmarks").get<std::vector<std::size_t>>();
  s.cover.members = j.at("members").get<std::vector<std::vector<std::size_t>>>();
  s.cover.point_count = s.cover.source_rows.size();
  if (s.cover.members.size() != s.cover.landmarks.size() ||
      s.point_ids.size() != s.cover.point_count) {
    throw DataError("inconsistent cover artifact");
  }
  for (const auto& m : s.cover.members) {
    for (std::size_t p : m) {
      if (p >= s.cover.point_count) throw DataError("cover artifact member out of range");
    }
  }
  for (std::size_t r : s.cover.source_rows) {
    if (r >= s.cover.table_rows) throw DataError("cover artifact row out of range");
  }
  return s;
}

// The stored cover must point at the same row ids in `table`.
inline void check_cover_matches(const StoredCover& stored, const DataTable& table) {
  if (stored.cover.table_rows != table.rows()) {
    throw DataError("cover artifact was built on " + std::to_string(stored.cover.table_rows) +
                    " rows but the table has " + std::to_string(table.rows()));
  }
  for (std::size_t p = 0; p < stored.cover.point_count; ++p) {
    if (table.row_ids()[stored.cover.source_rows[p]] != stored.point_ids[p]) {
      throw DataError("cover artifact row ids do not match the table");
    }
  }
}

}  // namespace ballmapper
