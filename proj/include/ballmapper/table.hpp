#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ballmapper/error.hpp"

namespace ballmapper {

using Cell = std::optional<double>;

struct Column {
  std::string name;
  std::vector<Cell> values;
};

// Text column carried alongside the numeric data, e.g. a month label.
struct LabelColumn {
  std::string name;
  std::vector<std::string> values;
};

// A row removed somewhere in preprocessing, and why.
struct DroppedRow {
  std::string row_id;
  std::string reason;
};

// Labeled rows x named numeric columns. Immutable once built.
class DataTable {
 public:
  DataTable() = default;

  DataTable(std::vector<std::string> row_ids, std::vector<Column> columns,
            std::vector<LabelColumn> labels = {},
            std::optional<std::string> group_column = std::nullopt)
      : row_ids_(std::move(row_ids)),
        columns_(std::move(columns)),
        labels_(std::move(labels)),
        group_column_(std::move(group_column)) {
    std::unordered_set<std::string> names;
    std::unordered_set<std::string> ids(row_ids_.begin(), row_ids_.end());
    if (ids.size() != row_ids_.size()) {
      throw DataError("row ids are not unique");
    }
    for (const auto& c : columns_) {
      if (c.values.size() != row_ids_.size()) {
        throw DataError("column '" + c.name + "' has " +
                        std::to_string(c.values.size()) + " values for " +
                        std::to_string(row_ids_.size()) + " rows");
      }
      if (!names.insert(c.name).second) {
        throw DataError("duplicate column name '" + c.name + "'");
      }
    }
    for (const auto& c : labels_) {
      if (c.values.size() != row_ids_.size()) {
        throw DataError("label column '" + c.name + "' has wrong length");
      }
      if (!names.insert(c.name).second) {
        throw DataError("duplicate column name '" + c.name + "'");
      }
    }
    if (group_column_ && !find_label(*group_column_) && !find(*group_column_)) {
      throw ValidationError("group column not found: " + *group_column_);
    }
  }

  std::size_t rows() const { return row_ids_.size(); }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<LabelColumn>& labels() const { return labels_; }
  const std::optional<std::string>& group_column() const { return group_column_; }

  const Column* find(std::string_view name) const {
    for (const auto& c : columns_) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const LabelColumn* find_label(std::string_view name) const {
    for (const auto& c : labels_) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const Column& column(std::string_view name) const {
    if (const Column* c = find(name)) return *c;
    if (find_label(name)) {
      throw ValidationError("column is not numeric: " + std::string(name));
    }
    throw ValidationError("column not found: " + std::string(name));
  }

  // Group key per row. Numeric group columns are keyed by their printed value.
  std::vector<std::string> group_keys() const {
    if (!group_column_) throw ValidationError("table has no group column");
    if (const LabelColumn* l = find_label(*group_column_)) return l->values;
    const Column& c = column(*group_column_);
    std::vector<std::string> keys;
    keys.reserve(rows());
    for (const Cell& v : c.values) keys.push_back(v ? std::to_string(*v) : "NA");
    return keys;
  }

  // A row is complete for a selection when none of those columns is missing.
  bool complete(std::size_t row, std::span<const std::string> names) const {
    return std::all_of(names.begin(), names.end(), [&](const std::string& n) {
      return column(n).values[row].has_value();
    });
  }

  DataTable select_rows(std::span<const std::size_t> keep) const {
    std::vector<std::string> ids;
    ids.reserve(keep.size());
    for (std::size_t r : keep) ids.push_back(row_ids_[r]);
    std::vector<Column> cols;
    for (const auto& c : columns_) {
      Column out{c.name, {}};
      out.values.reserve(keep.size());
      for (std::size_t r : keep) out.values.push_back(c.values[r]);
      cols.push_back(std::move(out));
    }
    std::vector<LabelColumn> labs;
    for (const auto& c : labels_) {
      LabelColumn out{c.name, {}};
      for (std::size_t r : keep) out.values.push_back(c.values[r]);
      labs.push_back(std::move(out));
    }
    return DataTable(std::move(ids), std::move(cols), std::move(labs), group_column_);
  }

  DataTable with_column(Column replacement) const {
    std::vector<Column> cols = columns_;
    bool replaced = false;
    for (auto& c : cols) {
      if (c.name == replacement.name) {
        c = replacement;
        replaced = true;
      }
    }
    if (!replaced) cols.push_back(std::move(replacement));
    return DataTable(row_ids_, std::move(cols), labels_, group_column_);
  }

 private:
  std::vector<std::string> row_ids_;
  std::vector<Column> columns_;
  std::vector<LabelColumn> labels_;
  std::optional<std::string> group_column_;
};

// ---------------------------------------------------------------------------
// Delimited text input

struct LoadOptions {
  char delimiter = ',';
  std::string id_column = "id";
  // Columns read as opaque text instead of numbers.
  std::vector<std::string> label_columns;
  std::optional<std::string> group_column;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits one record; double quotes group a field and "" escapes a quote.
inline std::vector<std::string> split_record(std::string_view line, char delim,
                                             std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(std::string(trim(current)));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::string(trim(current)));
  return fields;
}

inline bool is_missing_token(std::string_view s) { return s.empty() || s == "NA"; }

inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace detail

inline DataTable load_table(std::istream& in, const LoadOptions& options = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split_record(line, options.delimiter, line_no);
      break;
    }
  }
  if (header.empty()) throw ParseError(line_no == 0 ? 1 : line_no, "no header");
  const std::size_t header_line = line_no;

  std::set<std::string> label_names(options.label_columns.begin(),
                                    options.label_columns.end());
  if (options.group_column) label_names.insert(*options.group_column);

  std::unordered_set<std::string> seen;
  std::optional<std::size_t> id_index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].empty()) {
      throw ParseError(header_line, "malformed header: empty name for field " +
                                        std::to_string(i + 1));
    }
    if (!seen.insert(header[i]).second) {
      throw ParseError(header_line, "duplicate column name '" + header[i] + "'");
    }
    if (header[i] == options.id_column) id_index = i;
  }
  for (const auto& name : label_names) {
    if (!seen.count(name)) throw ValidationError("column not found: " + name);
  }

  std::vector<std::string> row_ids;
  std::vector<Column> columns;
  std::vector<LabelColumn> labels;
  std::vector<int> slot(header.size(), -1);  // index into columns or labels
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (id_index && i == *id_index) continue;
    if (label_names.count(header[i])) {
      slot[i] = static_cast<int>(labels.size());
      labels.push_back({header[i], {}});
    } else {
      slot[i] = static_cast<int>(columns.size());
      columns.push_back({header[i], {}});
    }
  }
  if (columns.empty()) throw ParseError(header_line, "no numeric column");

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_record(line, options.delimiter, line_no);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                    " fields, found " + std::to_string(fields.size()));
    }
    ++row;
    row_ids.push_back(id_index ? fields[*id_index] : std::to_string(row));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (slot[i] < 0) continue;
      if (label_names.count(header[i])) {
        labels[slot[i]].values.push_back(fields[i]);
        continue;
      }
      Column& col = columns[slot[i]];
      if (detail::is_missing_token(fields[i])) {
        col.values.emplace_back(std::nullopt);
      } else if (auto v = detail::parse_number(fields[i])) {
        col.values.emplace_back(*v);
      } else {
        throw ParseError(line_no, "row " + std::to_string(row) + ", column '" +
                                      col.name + "': non-numeric value '" +
                                      fields[i] + "'");
      }
    }
  }
  return DataTable(std::move(row_ids), std::move(columns), std::move(labels),
                   options.group_column);
}

// Shortest representation that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

inline void write_table(std::ostream& out, const DataTable& table, char delim = ',') {
  out << "id";
  for (const auto& c : table.columns()) out << delim << c.name;
  for (const auto& c : table.labels()) out << delim << c.name;
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << table.row_ids()[r];
    for (const auto& c : table.columns()) {
      out << delim;
      if (c.values[r]) out << format_number(*c.values[r]);
    }
    for (const auto& c : table.labels()) out << delim << c.values[r];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Winsorization

enum class WinsorMode { clamp, drop };
enum class QuantileRule { nearest_rank, interpolate };

struct WinsorSpec {
  double lower_q = 0.005;
  double upper_q = 0.995;
  WinsorMode mode = WinsorMode::clamp;
  bool per_group = false;
  QuantileRule rule = QuantileRule::nearest_rank;

  void validate() const {
    if (!(lower_q >= 0.0 && lower_q < 0.5)) {
      throw ValidationError("winsor lower quantile must lie in [0, 0.5)");
    }
    if (!(upper_q > 0.5 && upper_q <= 1.0)) {
      throw ValidationError("winsor upper quantile must lie in (0.5, 1]");
    }
  }
};

// Value at 1-based rank ceil(q*m) of m ascending values; q = 0 gives the
// minimum. Products that land within 1e-9 of an integer are snapped to it so
// that e.g. 0.995 * 1000 selects rank 995.
inline double nearest_rank_quantile(std::span<const double> sorted, double q) {
  const std::size_t m = sorted.size();
  if (m == 0) throw DataError("quantile of an empty sample");
  const double r = q * static_cast<double>(m);
  const double snapped = std::round(r);
  const double rank = std::abs(r - snapped) < 1e-9 ? snapped : std::ceil(r);
  const auto k = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(m)));
  return sorted[k - 1];
}

// Linear interpolation between order statistics at h = (m - 1) q.
inline double interpolated_quantile(std::span<const double> sorted, double q) {
  const std::size_t m = sorted.size();
  if (m == 0) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(m) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, m - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace detail {

struct Bounds {
  double lower;
  double upper;
};

inline Bounds winsor_bounds(std::vector<double> values, const WinsorSpec& spec,
                            const std::string& column) {
  if (values.size() < 2) {
    throw DataError("column '" + column +
                    "' has fewer than 2 non-missing values; quantile undefined");
  }
  std::sort(values.begin(), values.end());
  const auto quantile = spec.rule == QuantileRule::nearest_rank
                            ? nearest_rank_quantile
                            : interpolated_quantile;
  return {spec.lower_q == 0.0 ? values.front() : quantile(values, spec.lower_q),
          quantile(values, spec.upper_q)};
}

}  // namespace detail

// Clamps (or drops) extreme values in the named columns. Missing cells are
// left alone. Dropped rows are appended to `dropped` when supplied.
inline DataTable winsorize(const DataTable& table, std::span<const std::string> columns,
                           const WinsorSpec& spec,
                           std::vector<DroppedRow>* dropped = nullptr) {
  spec.validate();
  if (spec.per_group && !table.group_column()) {
    throw ValidationError("per-group winsorization requires a group column");
  }
  const std::size_t n = table.rows();
  std::vector<std::string> keys = spec.per_group ? table.group_keys()
                                                 : std::vector<std::string>(n);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < n; ++r) groups[keys[r]].push_back(r);

  // Per selected column: bounds indexed by row (through its group).
  std::vector<std::vector<detail::Bounds>> row_bounds;
  for (const std::string& name : columns) {
    const Column& col = table.column(name);
    std::vector<detail::Bounds> per_row(n);
    for (const auto& [key, rows] : groups) {
      std::vector<double> values;
      for (std::size_t r : rows) {
        if (col.values[r]) values.push_back(*col.values[r]);
      }
      const std::string label = spec.per_group ? name + "' in group '" + key : name;
      const auto bounds = detail::winsor_bounds(std::move(values), spec, label);
      for (std::size_t r : rows) per_row[r] = bounds;
    }
    row_bounds.push_back(std::move(per_row));
  }

  if (spec.mode == WinsorMode::clamp) {
    DataTable out = table;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      Column col = table.column(columns[c]);
      for (std::size_t r = 0; r < n; ++r) {
        if (col.values[r]) {
          col.values[r] = std::clamp(*col.values[r], row_bounds[c][r].lower,
                                     row_bounds[c][r].upper);
        }
      }
      out = out.with_column(std::move(col));
    }
    return out;
  }

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < n; ++r) {
    std::optional<std::string> reason;
    for (std::size_t c = 0; c < columns.size() && !reason; ++c) {
      const Cell& v = table.column(columns[c]).values[r];
      if (v && (*v < row_bounds[c][r].lower || *v > row_bounds[c][r].upper)) {
        reason = "winsorized: " + columns[c] + " outside [" +
                 format_number(row_bounds[c][r].lower) + ", " +
                 format_number(row_bounds[c][r].upper) + "]";
      }
    }
    if (reason) {
      if (dropped) dropped->push_back({table.row_ids()[r], *reason});
    } else {
      keep.push_back(r);
    }
  }
  return table.select_rows(keep);
}

// ---------------------------------------------------------------------------
// Normalization and the point cloud

struct AxisScaling {
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;  // min == max; the axis maps to all zeros

  double normalize(double x) const {
    return degenerate ? 0.0 : (x - min) / (max - min);
  }
  double denormalize(double u) const { return degenerate ? min : min + u * (max - min); }
};

struct NormalizeOptions {
  // Compute min/max within each group of the table's group column instead of
  // over the whole run.
  bool per_group = false;
};

// Normalized d-dimensional coordinates for the rows of a DataTable that have
// every axis value. Satisfies PointSet.
class PointCloud {
 public:
  std::size_t size() const { return source_rows_.size(); }
  std::size_t dim() const { return axis_names_.size(); }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim(), dim()};
  }
  double coord(std::size_t i, std::size_t axis) const { return coords_[i * dim() + axis]; }

  const std::vector<std::string>& axis_names() const { return axis_names_; }
  // Bounds computed over all retained rows.
  const std::vector<AxisScaling>& scaling() const { return scaling_; }
  // Non-empty only when bounds were computed per group.
  const std::map<std::string, std::vector<AxisScaling>>& group_scaling() const {
    return group_scaling_;
  }
  // Table row index for each point.
  const std::vector<std::size_t>& source_rows() const { return source_rows_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<DroppedRow>& excluded_rows() const { return excluded_; }
  std::size_t table_rows() const { return table_rows_; }

  // Coordinate in original units.
  double original(std::size_t i, std::size_t axis) const {
    const AxisScaling& s = group_scaling_.empty()
                               ? scaling_[axis]
                               : group_scaling_.at(point_groups_[i])[axis];
    return s.denormalize(coord(i, axis));
  }

 private:
  friend PointCloud normalize_minmax(const DataTable&, std::span<const std::string>,
                                     const NormalizeOptions&);

  std::vector<double> coords_;
  std::vector<std::string> axis_names_;
  std::vector<AxisScaling> scaling_;
  std::map<std::string, std::vector<AxisScaling>> group_scaling_;
  std::vector<std::string> point_groups_;
  std::vector<std::size_t> source_rows_;
  std::vector<std::string> row_ids_;
  std::vector<DroppedRow> excluded_;
  std::size_t table_rows_ = 0;
};

namespace detail {

inline AxisScaling scaling_of(const Column& col, std::span<const std::size_t> rows) {
  AxisScaling s{*col.values[rows.front()], *col.values[rows.front()], false};
  for (std::size_t r : rows) {
    s.min = std::min(s.min, *col.values[r]);
    s.max = std::max(s.max, *col.values[r]);
  }
  s.degenerate = !(s.min < s.max);
  return s;
}

}  // namespace detail

// Maps each axis column onto [0, 1] by (x - min) / (max - min). Rows missing
// any axis value are excluded and listed in excluded_rows().
inline PointCloud normalize_minmax(const DataTable& table,
                                   std::span<const std::string> axis_columns,
                                   const NormalizeOptions& options = {}) {
  if (axis_columns.empty()) throw ValidationError("at least one axis column is required");
  std::vector<const Column*> axes;
  for (const auto& name : axis_columns) axes.push_back(&table.column(name));

  PointCloud cloud;
  cloud.axis_names_.assign(axis_columns.begin(), axis_columns.end());
  cloud.table_rows_ = table.rows();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto missing = std::find_if(axes.begin(), axes.end(), [&](const Column* c) {
      return !c->values[r].has_value();
    });
    if (missing == axes.end()) {
      cloud.source_rows_.push_back(r);
      cloud.row_ids_.push_back(table.row_ids()[r]);
    } else {
      cloud.excluded_.push_back({table.row_ids()[r], "missing axis value: " + (*missing)->name});
    }
  }
  if (cloud.source_rows_.empty()) throw DataError("no rows retained for the point cloud");

  for (const Column* c : axes) {
    cloud.scaling_.push_back(detail::scaling_of(*c, cloud.source_rows_));
  }

  const std::size_t d = axes.size();
  cloud.coords_.resize(cloud.source_rows_.size() * d);
  if (options.per_group) {
    const auto keys = table.group_keys();
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t r : cloud.source_rows_) groups[keys[r]].push_back(r);
    for (const auto& [key, rows] : groups) {
      auto& s = cloud.group_scaling_[key];
      for (const Column* c : axes) s.push_back(detail::scaling_of(*c, rows));
    }
    for (std::size_t i = 0; i < cloud.source_rows_.size(); ++i) {
      cloud.point_groups_.push_back(keys[cloud.source_rows_[i]]);
    }
  }
  for (std::size_t i = 0; i < cloud.source_rows_.size(); ++i) {
    const std::size_t r = cloud.source_rows_[i];
    const auto& s = options.per_group ? cloud.group_scaling_.at(cloud.point_groups_[i])
                                      : cloud.scaling_;
    for (std::size_t k = 0; k < d; ++k) {
      cloud.coords_[i * d + k] = s[k].normalize(*axes[k]->values[r]);
    }
  }
  return cloud;
}

// Axis names whose values were all equal.
inline std::vector<std::string> degenerate_axes(const PointCloud& cloud) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < cloud.dim(); ++k) {
    if (cloud.scaling()[k].degenerate) out.push_back(cloud.axis_names()[k]);
  }
  return out;
}

}  // namespace ballmapper
