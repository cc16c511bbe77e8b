// Command-line front end: build a Ball Mapper run, then recolor, summarize,
// compare, regress, cluster or re-export it; generate synthetic data; serve
// the HTTP API.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ballmapper/coloring.hpp"
#include "ballmapper/cover.hpp"
#include "ballmapper/io.hpp"
#include "ballmapper/models.hpp"
#include "ballmapper/pipeline.hpp"
#include "ballmapper/service.hpp"
#include "ballmapper/synth.hpp"

namespace fs = std::filesystem;
using namespace ballmapper;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::data:
      return kExitData;
    case ErrorKind::numeric:
      return kExitNumeric;
    default:
      return kExitValidation;
  }
}

// Writes to `path`, or stdout when it is empty.
void emit(const std::string& path, const std::string& contents) {
  if (path.empty()) {
    std::cout << contents;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  if (!out) throw DataError("cannot write " + path);
}

WinsorSpec parse_winsor(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ValidationError("--winsor expects lower,upper or none");
  WinsorSpec w;
  try {
    w.lower_q = std::stod(text.substr(0, comma));
    w.upper_q = std::stod(text.substr(comma + 1));
  } catch (const std::exception&) {
    throw ValidationError("--winsor expects two numbers: " + text);
  }
  return w;
}

std::vector<BallId> parse_balls(const std::vector<std::size_t>& ids, const Cover& cover) {
  std::vector<BallId> out;
  for (std::size_t v : ids) {
    if (v == 0 || v > cover.ball_count()) {
      throw ValidationError("unknown ball id " + std::to_string(v) + " (run has " +
                            std::to_string(cover.ball_count()) + " balls)");
    }
    out.emplace_back(v);
  }
  return out;
}

std::vector<std::string> all_numeric(const DataTable& t) {
  std::vector<std::string> out;
  for (const auto& c : t.columns()) out.push_back(c.name);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ball Mapper graphs for multivariate tables"};
  app.require_subcommand(1);

  // build -----------------------------------------------------------------
  RunConfig build_cfg;
  std::string input, out_dir, strategy = "first", winsor = "0.005,0.995", winsor_mode = "clamp";
  std::string delimiter = ",", group_col;
  std::vector<std::string> formats{"json", "dot", "csv"}, labels;
  bool winsor_per_group = false;
  auto* build = app.add_subcommand("build", "Preprocess, cover, graph and color a table");
  build->add_option("--input", input, "Delimited input table")->required()->check(CLI::ExistingFile);
  build->add_option("--axes", build_cfg.axes, "Axis columns")->required()->delimiter(',');
  build->add_option("--color", build_cfg.colors, "Coloring columns")->delimiter(',');
  build->add_option("--epsilon", build_cfg.cover.epsilon, "Ball radius in normalized units")->required();
  build->add_option("--strategy", strategy, "Landmark choice: first|random");
  build->add_option("--seed", build_cfg.cover.seed, "Seed for --strategy random");
  build->add_option("--winsor", winsor, "lower,upper quantiles, or none");
  build->add_option("--winsor-mode", winsor_mode, "clamp|drop");
  build->add_flag("--winsor-per-group", winsor_per_group, "Winsorize within each group");
  build->add_flag("--normalize-per-group", build_cfg.normalize_per_group,
                  "Normalize within each group");
  build->add_option("--group-col", group_col, "Group label column, e.g. month");
  build->add_option("--labels", labels, "Extra text columns")->delimiter(',');
  build->add_option("--id-col", build_cfg.load.id_column, "Row id column");
  build->add_option("--delimiter", delimiter, "Field delimiter (',' or 'tab')");
  build->add_option("--out", out_dir, "Output directory")->required();
  build->add_option("--format", formats, "json,dot,csv")->delimiter(',');

  // run-based commands ------------------------------------------------------
  std::string run_dir, out_path, out_format = "csv";
  std::vector<std::string> vars;

  auto* color = app.add_subcommand("color", "Per-ball coloring of a stored run");
  std::string color_var;
  color->add_option("--run", run_dir, "Run directory")->required();
  color->add_option("--color", color_var, "Variable")->required();
  color->add_option("--format", out_format, "csv|json");
  color->add_option("--out", out_path, "Output file (default stdout)");

  auto* compare = app.add_subcommand("compare", "Compare two groups of balls");
  std::vector<std::size_t> group_a, group_b;
  compare->add_option("--run", run_dir, "Run directory")->required();
  compare->add_option("--a", group_a, "First group ball ids")->required()->delimiter(',');
  compare->add_option("--b", group_b, "Second group ball ids")->required()->delimiter(',');
  compare->add_option("--vars", vars, "Variables (default all numeric)")->delimiter(',');
  compare->add_option("--format", out_format, "csv|json");
  compare->add_option("--out", out_path, "Output file (default stdout)");

  auto* summary = app.add_subcommand("summary", "Per-ball means and counts");
  summary->add_option("--run", run_dir, "Run directory")->required();
  summary->add_option("--vars", vars, "Variables (default all numeric)")->delimiter(',');
  summary->add_option("--format", out_format, "csv|json");
  summary->add_option("--out", out_path, "Output file (default stdout)");

  auto* regress = app.add_subcommand("regress", "OLS fit with residual colorings");
  std::string response;
  std::vector<std::string> regressors;
  regress->add_option("--run", run_dir, "Run directory")->required();
  regress->add_option("--response", response, "Response column")->required();
  regress->add_option("--regressors", regressors, "Regressor columns")->required()->delimiter(',');
  regress->add_option("--format", out_format, "csv|json");
  regress->add_option("--out", out_path, "Output file (default stdout)");

  auto* kmeans_cmd = app.add_subcommand("kmeans", "Group-size contrast against k-means");
  std::size_t k = 0, max_iter = 300;
  std::uint64_t km_seed = 0;
  kmeans_cmd->add_option("--run", run_dir, "Run directory")->required();
  kmeans_cmd->add_option("--k", k, "Clusters for the first k-means row")->required();
  kmeans_cmd->add_option("--seed", km_seed, "Initialization seed");
  kmeans_cmd->add_option("--max-iter", max_iter, "Lloyd iteration cap");
  kmeans_cmd->add_option("--format", out_format, "csv|json");
  kmeans_cmd->add_option("--out", out_path, "Output file (default stdout)");

  auto* export_cmd = app.add_subcommand("export", "Re-export a stored run's graph");
  std::string export_dir;
  std::vector<std::string> export_formats{"json", "dot", "csv"};
  export_cmd->add_option("--run", run_dir, "Run directory")->required();
  export_cmd->add_option("--format", export_formats, "json,dot,csv")->delimiter(',');
  export_cmd->add_option("--out", export_dir, "Output directory")->required();

  // synth -------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic table");
  std::string kind = "y";
  YCloudOptions y_opt;
  HeavyTailOptions ht_opt;
  std::size_t synth_n = 0;
  std::uint64_t synth_seed = 7;
  synth->add_option("--kind", kind, "y|heavy-tail");
  synth->add_option("--n", synth_n, "Number of rows");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--arm-length", y_opt.arm_length, "Y cloud arm length");
  synth->add_option("--noise", y_opt.noise, "Y cloud arm noise");
  synth->add_option("--outliers", ht_opt.outliers, "Heavy-tail planted outliers");
  synth->add_option("--dim", ht_opt.dim, "Heavy-tail dimension");
  synth->add_option("--outlier-scale", ht_opt.outlier_scale, "Heavy-tail outlier radius");
  synth->add_option("--out", out_path, "Output file (default stdout)");

  // serve -------------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host = "127.0.0.1", store_dir;
  int port = 8080;
  service::ServiceOptions svc_opt;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--max-points", svc_opt.max_build_points, "Synchronous build cap");
  serve->add_option("--max-bytes", svc_opt.max_stored_bytes, "Store capacity in bytes");
  serve->add_option("--store-dir", store_dir, "Also write graph artifacts here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  const bool json_out = out_format == "json";
  try {
    if (*build) {
      build_cfg.input = input;
      build_cfg.out = out_dir;
      build_cfg.cover.strategy = parse_strategy(strategy);
      build_cfg.load.delimiter = delimiter == "tab" || delimiter == "\\t" ? '\t' : delimiter.at(0);
      build_cfg.load.label_columns = labels;
      if (!group_col.empty()) build_cfg.load.group_column = group_col;
      if (winsor == "none") {
        build_cfg.winsor.reset();
      } else {
        WinsorSpec w = parse_winsor(winsor);
        if (winsor_mode != "clamp" && winsor_mode != "drop") {
          throw ValidationError("--winsor-mode must be clamp or drop");
        }
        w.mode = winsor_mode == "drop" ? WinsorMode::drop : WinsorMode::clamp;
        w.per_group = winsor_per_group;
        build_cfg.winsor = w;
      }
      build_cfg.formats = {formats.begin(), formats.end()};
      const json manifest = run_pipeline(build_cfg);
      const auto& stats = manifest.at("stats");
      std::cout << "wrote " << out_dir << ": " << stats.at("points").get<std::size_t>()
                << " points, " << stats.at("balls").get<std::size_t>() << " balls, "
                << stats.at("edges").get<std::size_t>() << " edges\n";
      return 0;
    }

    if (*color) {
      const RunContext ctx = load_run(run_dir);
      const Coloring c = induce_coloring(ctx.stored.cover, ctx.prepared.table, color_var);
      std::ostringstream ss;
      if (json_out) {
        ss << coloring_to_json(c).dump(2) << '\n';
      } else {
        write_colorings_csv(ss, std::span(&c, 1), ctx.stored.cover.ball_count());
      }
      emit(out_path, ss.str());
      return 0;
    }

    if (*compare) {
      const RunContext ctx = load_run(run_dir);
      const auto& cover = ctx.stored.cover;
      if (vars.empty()) vars = all_numeric(ctx.prepared.table);
      const auto report = compare_balls(cover, ctx.prepared.table, parse_balls(group_a, cover),
                                        parse_balls(group_b, cover), vars);
      std::ostringstream ss;
      if (json_out) {
        ss << comparison_to_json(report).dump(2) << '\n';
      } else {
        write_comparison_csv(ss, report);
      }
      emit(out_path, ss.str());
      return 0;
    }

    if (*summary) {
      const RunContext ctx = load_run(run_dir);
      if (vars.empty()) vars = all_numeric(ctx.prepared.table);
      const auto rows = ball_summary(ctx.stored.cover, ctx.prepared.table, vars);
      std::ostringstream ss;
      if (json_out) {
        ss << summary_to_json(rows, vars).dump(2) << '\n';
      } else {
        write_summary_csv(ss, rows, vars);
      }
      emit(out_path, ss.str());
      return 0;
    }

    if (*regress) {
      const RunContext ctx = load_run(run_dir);
      const RegressionFit fit = ols_fit(ctx.prepared.table, regressors, response);
      const auto rc = residual_coloring(fit, ctx.stored.cover);
      std::ostringstream ss;
      if (json_out) {
        ss << json{{"fit", regression_to_json(fit)},
                   {"colorings",
                    {{"residual", coloring_values(rc.residual)},
                     {"abs_residual", coloring_values(rc.absolute_residual)}}}}
                  .dump(2)
           << '\n';
      } else {
        write_regression_table(ss, fit);
        ss << '\n';
        const Coloring both[] = {rc.residual, rc.absolute_residual};
        write_colorings_csv(ss, both, ctx.stored.cover.ball_count());
      }
      emit(out_path, ss.str());
      return 0;
    }

    if (*kmeans_cmd) {
      const RunContext ctx = load_run(run_dir);
      const auto rows = clustering_contrast(ctx.prepared.cloud, ctx.stored.cover, k, km_seed, max_iter);
      std::ostringstream ss;
      if (json_out) {
        ss << cluster_report_to_json(rows).dump(2) << '\n';
      } else {
        write_cluster_report(ss, rows);
      }
      emit(out_path, ss.str());
      return 0;
    }

    if (*export_cmd) {
      const RunContext ctx = load_run(run_dir);
      const auto& cover = ctx.stored.cover;
      const BallMapperGraph graph = build_graph(cover);
      const auto& ids = ctx.prepared.table.row_ids();
      std::vector<Coloring> colorings;
      for (const auto& c : ctx.config.colors) {
        colorings.push_back(induce_coloring(cover, ctx.prepared.table, c));
      }
      fs::create_directories(export_dir);
      const fs::path dir(export_dir);
      for (const auto& f : export_formats) {
        std::ostringstream ss;
        if (f == "json") {
          ss << graph_to_json(cover, graph, ids, colorings).dump(2) << '\n';
          emit((dir / "graph.json").string(), ss.str());
        } else if (f == "dot") {
          write_dot(ss, graph);
          emit((dir / "graph.dot").string(), ss.str());
        } else if (f == "csv") {
          write_membership_csv(ss, cover, ids);
          emit((dir / "membership.csv").string(), ss.str());
        } else {
          throw ValidationError("unknown format: " + f);
        }
      }
      return 0;
    }

    if (*synth) {
      DataTable table;
      if (kind == "y") {
        if (synth_n) y_opt.n = synth_n;
        y_opt.seed = synth_seed;
        table = generate_y_cloud(y_opt);
      } else if (kind == "heavy-tail") {
        if (synth_n) ht_opt.n = synth_n;
        ht_opt.seed = synth_seed;
        table = generate_heavy_tail_cloud(ht_opt);
      } else {
        throw ValidationError("unknown synthetic kind: " + kind);
      }
      std::ostringstream ss;
      write_table(ss, table);
      emit(out_path, ss.str());
      return 0;
    }

    if (*serve) {
      if (!store_dir.empty()) svc_opt.write_through = fs::path(store_dir);
      service::Service svc(svc_opt);
      httplib::Server server;
      svc.mount(server);
      std::cerr << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
        return kExitValidation;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed artifact: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
