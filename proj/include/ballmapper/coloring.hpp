#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ballmapper/cover.hpp"
#include "ballmapper/error.hpp"
#include "ballmapper/table.hpp"

namespace ballmapper {

// Per-ball mean of a per-point variable. A ball whose members are all missing
// the variable has no value.
struct Coloring {
  std::string variable;
  std::vector<std::optional<double>> values;  // by ball index
  std::vector<std::size_t> counts;            // contributing members per ball
};

struct BallSummaryRow {
  BallId ball;
  std::vector<std::optional<double>> means;  // original units, one per variable
  std::size_t obs = 0;                       // |C_i|
};

// Absolute standardized difference at or above which a comparison row is
// flagged.
inline constexpr double kDistBenchmark = 2.0;

struct ComparisonRow {
  std::string variable;
  std::optional<double> mean_a;
  std::optional<double> mean_b;
  std::optional<double> diff;   // mean_a - mean_b
  double sigma = 0.0;           // population sd over all points of the run
  std::optional<double> dist;   // diff / sigma; empty when sigma == 0
  bool sigma_zero = false;
  bool flagged = false;         // |dist| >= kDistBenchmark
};

struct ComparisonReport {
  std::vector<BallId> group_a;
  std::vector<BallId> group_b;
  std::size_t members_a = 0;  // distinct points pooled over group_a
  std::size_t members_b = 0;
  std::vector<ComparisonRow> rows;

  std::vector<std::string> flags() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
      if (r.flagged) out.push_back(r.variable);
    }
    return out;
  }
};

namespace detail {

inline void check_alignment(const Cover& cover, std::size_t table_rows) {
  if (cover.table_rows != table_rows) {
    throw ValidationError("cover was built on a table with " +
                          std::to_string(cover.table_rows) + " rows, got " +
                          std::to_string(table_rows));
  }
}

// Mean over the non-missing values of `values` at the given points.
inline std::optional<double> mean_over(const Cover& cover, std::span<const Cell> values,
                                       const std::vector<std::size_t>& points,
                                       std::size_t* count = nullptr) {
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t p : points) {
    if (const Cell& v = values[cover.source_rows[p]]) {
      sum += *v;
      ++k;
    }
  }
  if (count) *count = k;
  if (k == 0) return std::nullopt;
  return sum / static_cast<double>(k);
}

}  // namespace detail

// Colors each ball by the mean of a per-row value vector aligned with the
// table the cover was built from.
inline Coloring induce_coloring(const Cover& cover, std::span<const Cell> row_values,
                                std::string variable) {
  detail::check_alignment(cover, row_values.size());
  Coloring coloring{std::move(variable), {}, {}};
  coloring.values.reserve(cover.ball_count());
  for (const auto& members : cover.members) {
    std::size_t count = 0;
    coloring.values.push_back(detail::mean_over(cover, row_values, members, &count));
    coloring.counts.push_back(count);
  }
  return coloring;
}

inline Coloring induce_coloring(const Cover& cover, const DataTable& table,
                                const std::string& variable) {
  return induce_coloring(cover, table.column(variable).values, variable);
}

inline std::vector<BallSummaryRow> ball_summary(const Cover& cover, const DataTable& table,
                                                std::span<const std::string> variables) {
  detail::check_alignment(cover, table.rows());
  std::vector<const Column*> cols;
  for (const auto& v : variables) cols.push_back(&table.column(v));
  std::vector<BallSummaryRow> rows;
  for (std::size_t b = 0; b < cover.ball_count(); ++b) {
    BallSummaryRow row{BallId::from_index(b), {}, cover.members[b].size()};
    for (const Column* c : cols) {
      row.means.push_back(detail::mean_over(cover, c->values, cover.members[b]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Distinct points over a set of balls, ascending.
inline std::vector<std::size_t> pooled_members(const Cover& cover,
                                               std::span<const BallId> group) {
  std::vector<std::size_t> pooled;
  for (BallId id : group) {
    const auto& m = cover.ball(id);
    pooled.insert(pooled.end(), m.begin(), m.end());
  }
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  return pooled;
}

// Signed difference in units of the whole-sample standard deviation.
inline std::optional<double> standardized_difference(double diff, double sigma) {
  if (!(sigma > 0.0)) return std::nullopt;
  return diff / sigma;
}

// Population standard deviation (divisor n) of a variable over every point
// of the cover.
inline double whole_sample_sd(const Cover& cover, std::span<const Cell> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < cover.point_count; ++p) {
    if (const Cell& v = values[cover.source_rows[p]]) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t p = 0; p < cover.point_count; ++p) {
    if (const Cell& v = values[cover.source_rows[p]]) ss += (*v - mean) * (*v - mean);
  }
  return std::sqrt(ss / static_cast<double>(n));
}

// Compares the pooled distinct members of two groups of balls, variable by
// variable.
inline ComparisonReport compare_balls(const Cover& cover, const DataTable& table,
                                      std::span<const BallId> group_a,
                                      std::span<const BallId> group_b,
                                      std::span<const std::string> variables) {
  detail::check_alignment(cover, table.rows());
  if (group_a.empty() || group_b.empty()) {
    throw ValidationError("both comparison groups need at least one ball");
  }
  ComparisonReport report;
  report.group_a.assign(group_a.begin(), group_a.end());
  report.group_b.assign(group_b.begin(), group_b.end());
  const auto a = pooled_members(cover, group_a);
  const auto b = pooled_members(cover, group_b);
  if (a.empty() || b.empty()) throw DataError("a comparison group has no members");
  report.members_a = a.size();
  report.members_b = b.size();

  for (const auto& name : variables) {
    const auto& values = table.column(name).values;
    ComparisonRow row;
    row.variable = name;
    row.mean_a = detail::mean_over(cover, values, a);
    row.mean_b = detail::mean_over(cover, values, b);
    row.sigma = whole_sample_sd(cover, values);
    row.sigma_zero = !(row.sigma > 0.0);
    if (row.mean_a && row.mean_b) {
      row.diff = *row.mean_a - *row.mean_b;
      row.dist = standardized_difference(*row.diff, row.sigma);
      row.flagged = row.dist && std::abs(*row.dist) >= kDistBenchmark;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

// Hard partition of the points: each goes to the lowest-numbered ball that
// contains it.
inline std::vector<BallId> assign_unique(const Cover& cover) {
  std::vector<BallId> owner(cover.point_count);
  for (std::size_t b = cover.ball_count(); b-- > 0;) {
    for (std::size_t p : cover.members[b]) owner[p] = BallId::from_index(b);
  }
  for (std::size_t p = 0; p < owner.size(); ++p) {
    if (owner[p].value == 0) {
      throw DataError("point " + std::to_string(p) + " is not covered by any ball");
    }
  }
  return owner;
}

}  // namespace ballmapper
