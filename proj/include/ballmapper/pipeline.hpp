#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballmapper/coloring.hpp"
#include "ballmapper/cover.hpp"
#include "ballmapper/hash.hpp"
#include "ballmapper/io.hpp"
#include "ballmapper/table.hpp"

namespace ballmapper {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunConfig {
  std::filesystem::path input;
  LoadOptions load;
  std::vector<std::string> axes;
  std::vector<std::string> colors;
  std::optional<WinsorSpec> winsor = WinsorSpec{};  // nullopt disables
  bool normalize_per_group = false;
  CoverParams cover;
  std::filesystem::path out;
  std::set<std::string> formats = {"json", "dot", "csv"};

  void validate() const {
    cover.validate();
    if (axes.empty()) throw ValidationError("at least one axis column is required");
    if (winsor) winsor->validate();
    for (const auto& f : formats) {
      if (f != "json" && f != "dot" && f != "csv") throw ValidationError("unknown format: " + f);
    }
  }

  // Columns that pass through winsorization: the axes then the colorings.
  std::vector<std::string> preprocessed_columns() const {
    std::vector<std::string> cols = axes;
    for (const auto& c : colors) {
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    return cols;
  }
};

inline json config_to_json(const RunConfig& c) {
  json winsor = nullptr;
  if (c.winsor) {
    winsor = {{"lower_q", c.winsor->lower_q},
              {"upper_q", c.winsor->upper_q},
              {"mode", c.winsor->mode == WinsorMode::clamp ? "clamp" : "drop"},
              {"per_group", c.winsor->per_group},
              {"rule", c.winsor->rule == QuantileRule::nearest_rank ? "nearest-rank" : "interpolate"}};
  }
  return {{"input", c.input.string()},
          {"delimiter", std::string(1, c.load.delimiter)},
          {"id_column", c.load.id_column},
          {"label_columns", c.load.label_columns},
          {"group_column", c.load.group_column ? json(*c.load.group_column) : json(nullptr)},
          {"axes", c.axes},
          {"colors", c.colors},
          {"winsor", winsor},
          {"normalize_per_group", c.normalize_per_group},
          {"cover", params_to_json(c.cover)},
          {"formats", c.formats}};
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.input = j.at("input").get<std::string>();
  const auto delim = j.at("delimiter").get<std::string>();
  if (delim.size() != 1) throw DataError("bad delimiter in manifest");
  c.load.delimiter = delim[0];
  c.load.id_column = j.at("id_column").get<std::string>();
  c.load.label_columns = j.at("label_columns").get<std::vector<std::string>>();
  if (!j.at("group_column").is_null()) c.load.group_column = j.at("group_column").get<std::string>();
  c.axes = j.at("axes").get<std::vector<std::string>>();
  c.colors = j.at("colors").get<std::vector<std::string>>();
  if (j.at("winsor").is_null()) {
    c.winsor.reset();
  } else {
    const auto& w = j.at("winsor");
    WinsorSpec s;
    s.lower_q = w.at("lower_q").get<double>();
    s.upper_q = w.at("upper_q").get<double>();
    s.mode = w.at("mode").get<std::string>() == "drop" ? WinsorMode::drop : WinsorMode::clamp;
    s.per_group = w.at("per_group").get<bool>();
    s.rule = w.at("rule").get<std::string>() == "interpolate" ? QuantileRule::interpolate
                                                              : QuantileRule::nearest_rank;
    c.winsor = s;
  }
  c.normalize_per_group = j.at("normalize_per_group").get<bool>();
  c.cover = params_from_json(j.at("cover"));
  c.formats = j.at("formats").get<std::set<std::string>>();
  return c;
}

// Re-labels an engine error with the pipeline stage it came from.
template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.what());
  }
}

struct Prepared {
  DataTable table;  // after winsorization
  PointCloud cloud;
  std::vector<DroppedRow> dropped;  // winsorization drops, then missing-axis rows
};

inline Prepared prepare(const DataTable& raw, const RunConfig& config) {
  Prepared out;
  const auto cols = config.preprocessed_columns();
  in_stage("validate", [&] {
    for (const auto& c : cols) (void)raw.column(c);
    return 0;
  });
  out.table = in_stage("winsorize", [&] {
    return config.winsor ? winsorize(raw, cols, *config.winsor, &out.dropped) : raw;
  });
  out.cloud = in_stage("normalize", [&] {
    return normalize_minmax(out.table, config.axes, {config.normalize_per_group});
  });
  out.dropped.insert(out.dropped.end(), out.cloud.excluded_rows().begin(),
                     out.cloud.excluded_rows().end());
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DataTable load_input(const RunConfig& config, std::string* bytes_out = nullptr) {
  return in_stage("load", [&] {
    std::string bytes = read_file(config.input);
    std::istringstream in(bytes);
    DataTable t = load_table(in, config.load);
    if (bytes_out) *bytes_out = std::move(bytes);
    return t;
  });
}

// Every artifact of a build, rendered in memory.
struct RunArtifacts {
  std::map<std::string, std::string> files;  // file name -> contents
  json manifest;
  std::size_t balls = 0;
  std::size_t edges = 0;
};

inline RunArtifacts render_run(const RunConfig& config, const Prepared& prep,
                               const std::string& input_bytes) {
  RunArtifacts run;
  const Cover cover = in_stage("cover", [&] { return build_cover(prep.cloud, config.cover); });
  const BallMapperGraph graph = build_graph(cover);
  run.balls = cover.ball_count();
  run.edges = graph.edges.size();

  std::vector<Coloring> colorings;
  in_stage("color", [&] {
    for (const auto& c : config.colors) colorings.push_back(induce_coloring(cover, prep.table, c));
    return 0;
  });
  std::vector<std::string> summary_vars = config.axes;
  for (const auto& c : config.colors) {
    if (std::find(summary_vars.begin(), summary_vars.end(), c) == summary_vars.end()) {
      summary_vars.push_back(c);
    }
  }
  const auto summary = in_stage("summary", [&] { return ball_summary(cover, prep.table, summary_vars); });
  const auto& ids = prep.table.row_ids();

  auto render = [&](const std::string& name, auto&& writer) {
    std::ostringstream ss;
    writer(ss);
    run.files[name] = ss.str();
  };
  render("cover.json", [&](std::ostream& o) {
    o << cover_to_json(cover, config.axes, ids).dump(1) << '\n';
  });
  render("retained_rows.csv", [&](std::ostream& o) { write_dropped_csv(o, prep.dropped); });
  if (config.formats.count("json")) {
    render("graph.json", [&](std::ostream& o) {
      o << graph_to_json(cover, graph, ids, colorings).dump(2) << '\n';
    });
    render("summary.json", [&](std::ostream& o) {
      o << summary_to_json(summary, summary_vars).dump(2) << '\n';
    });
  }
  if (config.formats.count("dot")) {
    render("graph.dot", [&](std::ostream& o) { write_dot(o, graph); });
  }
  if (config.formats.count("csv")) {
    render("membership.csv", [&](std::ostream& o) { write_membership_csv(o, cover, ids); });
    render("summary.csv", [&](std::ostream& o) { write_summary_csv(o, summary, summary_vars); });
    render("colorings.csv", [&](std::ostream& o) {
      write_colorings_csv(o, colorings, cover.ball_count());
    });
  }

  json hashes = json::object();
  for (const auto& [name, contents] : run.files) hashes[name] = sha256_hex(contents);
  run.manifest = {{"tool", "ballmapper"},
                  {"version", kToolVersion},
                  {"config", config_to_json(config)},
                  {"input_sha256", sha256_hex(input_bytes)},
                  {"stats",
                   {{"rows", prep.table.rows()},
                    {"points", prep.cloud.size()},
                    {"dropped", prep.dropped.size()},
                    {"balls", run.balls},
                    {"edges", run.edges},
                    {"degenerate_axes", degenerate_axes(prep.cloud)}}},
                  {"outputs", std::move(hashes)}};
  run.files["manifest.json"] = run.manifest.dump(2) + "\n";
  return run;
}

// Loads, preprocesses, builds and writes every output into config.out.
// Nothing is written unless every stage succeeds; a failed write removes the
// files written so far.
inline json run_pipeline(const RunConfig& config) {
  in_stage("config", [&] {
    config.validate();
    return 0;
  });
  std::string bytes;
  const DataTable raw = load_input(config, &bytes);
  const Prepared prep = prepare(raw, config);
  const RunArtifacts run = render_run(config, prep, bytes);

  namespace fs = std::filesystem;
  const bool created = !fs::exists(config.out);
  std::vector<fs::path> written;
  try {
    fs::create_directories(config.out);
    for (const auto& [name, contents] : run.files) {
      const fs::path path = config.out / name;
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      written.push_back(path);
      f << contents;
      if (!f) throw DataError("write: cannot write " + path.string());
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created) fs::remove(config.out, ec);
    throw;
  }
  return run.manifest;
}

// A finished run reloaded from its directory: the manifest's config, the
// re-derived table and cloud, and the stored cover checked against them.
struct RunContext {
  RunConfig config;
  Prepared prepared;
  StoredCover stored;
};

inline RunContext load_run(const std::filesystem::path& dir) {
  RunContext ctx;
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  ctx.config = config_from_json(manifest.at("config"));
  std::string bytes;
  const DataTable raw = load_input(ctx.config, &bytes);
  if (sha256_hex(bytes) != manifest.at("input_sha256").get<std::string>()) {
    throw DataError("input file changed since the run was built: " + ctx.config.input.string());
  }
  ctx.prepared = prepare(raw, ctx.config);
  ctx.stored = cover_from_json(json::parse(read_file(dir / "cover.json")));
  check_cover_matches(ctx.stored, ctx.prepared.table);
  return ctx;
}

}  // namespace ballmapper
