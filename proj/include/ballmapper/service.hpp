#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballmapper/coloring.hpp"
#include "ballmapper/cover.hpp"
#include "ballmapper/hash.hpp"
#include "ballmapper/io.hpp"
#include "ballmapper/models.hpp"
#include "ballmapper/pipeline.hpp"
#include "ballmapper/table.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro collides with
// Eigen parameter names.
#include <httplib.h>

namespace ballmapper::service {

struct ServiceOptions {
  std::size_t max_build_points = 50'000;
  std::size_t max_stored_bytes = std::size_t{1} << 30;
  // When set, each graph is also written there in the CLI's cover format.
  std::optional<std::filesystem::path> write_through;
};

class StorageFullError : public Error {
 public:
  StorageFullError() : Error(ErrorKind::validation, "store capacity exceeded") {}
};

// Request body could not be decoded at all.
class BadRequestError : public Error {
 public:
  explicit BadRequestError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct Dataset {
  std::string id;
  DataTable table;
  std::size_t bytes = 0;
  std::chrono::system_clock::time_point created;
};

struct GraphArtifact {
  std::string id;
  std::string dataset_id;
  RunConfig config;  // axes, winsorization and cover parameters
  Prepared prepared;
  Cover cover;
  BallMapperGraph graph;
  json graph_json;
  std::string content_hash;
  std::size_t bytes = 0;
  std::chrono::system_clock::time_point created;
};

// Immutable artifacts behind shared pointers; the mutex only guards the maps.
class SessionStore {
 public:
  explicit SessionStore(std::size_t max_bytes) : max_bytes_(max_bytes) {}

  std::shared_ptr<const Dataset> add_dataset(DataTable table, std::size_t bytes) {
    auto ds = std::make_shared<Dataset>();
    ds->table = std::move(table);
    ds->bytes = bytes;
    ds->created = std::chrono::system_clock::now();
    std::lock_guard lock(mu_);
    reserve(bytes);
    ds->id = "ds-" + std::to_string(++next_dataset_);
    datasets_[ds->id] = ds;
    return ds;
  }

  std::shared_ptr<const GraphArtifact> add_graph(std::shared_ptr<GraphArtifact> g) {
    g->created = std::chrono::system_clock::now();
    std::lock_guard lock(mu_);
    reserve(g->bytes);
    g->id = "g-" + std::to_string(++next_graph_);
    graphs_[g->id] = g;
    return g;
  }

  std::shared_ptr<const Dataset> dataset(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = datasets_.find(id);
    if (it == datasets_.end()) throw NotFoundError("unknown dataset " + id);
    return it->second;
  }

  std::shared_ptr<const GraphArtifact> graph(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = graphs_.find(id);
    if (it == graphs_.end()) throw NotFoundError("unknown graph " + id);
    return it->second;
  }

  std::size_t stored_bytes() const {
    std::lock_guard lock(mu_);
    return used_;
  }
  std::size_t dataset_count() const {
    std::lock_guard lock(mu_);
    return datasets_.size();
  }
  std::size_t graph_count() const {
    std::lock_guard lock(mu_);
    return graphs_.size();
  }

 private:
  void reserve(std::size_t bytes) {
    if (used_ + bytes > max_bytes_) {
      throw StorageFullError();
    }
    used_ += bytes;
  }

  mutable std::mutex mu_;
  std::size_t max_bytes_;
  std::size_t used_ = 0;
  std::size_t next_dataset_ = 0;
  std::size_t next_graph_ = 0;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::map<std::string, std::shared_ptr<const GraphArtifact>> graphs_;
};

// Per-column count, missing, mean, population sd, min and max.
inline json column_summaries(const DataTable& t) {
  json cols = json::array();
  for (const auto& c : t.columns()) {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    std::size_t n = 0;
    for (const Cell& v : c.values) {
      if (!v) continue;
      lo = n == 0 ? *v : std::min(lo, *v);
      hi = n == 0 ? *v : std::max(hi, *v);
      sum += *v;
      ++n;
    }
    json entry{{"name", c.name}, {"n", n}, {"missing", c.values.size() - n}};
    if (n > 0) {
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (const Cell& v : c.values) {
        if (v) ss += (*v - mean) * (*v - mean);
      }
      entry["mean"] = mean;
      entry["sd"] = std::sqrt(ss / static_cast<double>(n));
      entry["min"] = lo;
      entry["max"] = hi;
    } else {
      entry["mean"] = entry["sd"] = entry["min"] = entry["max"] = nullptr;
    }
    cols.push_back(std::move(entry));
  }
  json labels = json::array();
  for (const auto& l : t.labels()) labels.push_back(l.name);
  return {{"rows", t.rows()}, {"columns", std::move(cols)}, {"label_columns", std::move(labels)}};
}

namespace detail {

// Maps engine errors onto HTTP statuses. `parse_status` applies to data
// errors on upload, where the body itself is at fault.
inline int status_for(const Error& e, int parse_status) {
  switch (e.kind()) {
    case ErrorKind::not_found:
      return 404;
    case ErrorKind::data:
      return parse_status;
    default:
      return 422;
  }
}

inline const char* code_for(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 404: return "not_found";
    case 422: return "invalid_parameters";
    case 507: return "storage_full";
    default: return "internal_error";
  }
}

inline void send_error(httplib::Response& res, int status, const std::string& message,
                       const json& detail = nullptr) {
  res.status = status;
  res.set_content(json{{"code", code_for(status)}, {"message", message}, {"detail", detail}}.dump(),
                  "application/json");
}

inline void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw BadRequestError(std::string("request body is not valid JSON: ") + e.what());
  }
}

template <class T>
T field(const json& body, const char* key) {
  if (!body.contains(key)) throw ValidationError(std::string("missing field: ") + key);
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field has the wrong type: ") + key);
  }
}

template <class T>
T field_or(const json& body, const char* key, T fallback) {
  return body.contains(key) && !body.at(key).is_null() ? field<T>(body, key) : fallback;
}

inline std::vector<BallId> ball_ids(const json& body, const char* key, const Cover& cover) {
  std::vector<BallId> out;
  for (std::size_t v : field<std::vector<std::size_t>>(body, key)) {
    if (v == 0 || v > cover.ball_count()) {
      throw ValidationError("unknown ball id " + std::to_string(v) + " in " + key);
    }
    out.emplace_back(v);
  }
  return out;
}

inline std::vector<std::string> numeric_columns(const DataTable& t) {
  std::vector<std::string> out;
  for (const auto& c : t.columns()) out.push_back(c.name);
  return out;
}

}  // namespace detail

class Service {
 public:
  explicit Service(ServiceOptions options = {})
      : options_(std::move(options)), store_(options_.max_stored_bytes) {}

  SessionStore& store() { return store_; }

  void mount(httplib::Server& server) {
    server.Post("/datasets", wrap(400, [this](const auto& req, auto& res) { post_dataset(req, res); }));
    server.Get(R"(/datasets/([^/]+))",
               wrap(422, [this](const auto& req, auto& res) { get_dataset(req, res); }));
    server.Post(R"(/datasets/([^/]+)/graphs)",
                wrap(422, [this](const auto& req, auto& res) { post_build(req, res); }));
    server.Post(R"(/datasets/([^/]+)/regress)",
                wrap(422, [this](const auto& req, auto& res) { post_regress(req, res); }));
    server.Get(R"(/graphs/([^/]+))",
               wrap(422, [this](const auto& req, auto& res) { get_graph(req, res); }));
    server.Get(R"(/graphs/([^/]+)/colorings/([^/]+))",
               wrap(422, [this](const auto& req, auto& res) { get_coloring(req, res); }));
    server.Post(R"(/graphs/([^/]+)/compare)",
                wrap(422, [this](const auto& req, auto& res) { post_compare(req, res); }));
    server.Get(R"(/graphs/([^/]+)/summary)",
               wrap(422, [this](const auto& req, auto& res) { get_summary(req, res); }));
  }

 private:
  template <class F>
  httplib::Server::Handler wrap(int data_status, F f) {
    return [f, data_status](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const StorageFullError& e) {
        detail::send_error(res, 507, e.what());
      } catch (const BadRequestError& e) {
        detail::send_error(res, 400, e.what());
      } catch (const Error& e) {
        const int status = detail::status_for(e, data_status);
        json detail = nullptr;
        if (const auto* pe = dynamic_cast<const ParseError*>(&e)) detail = {{"line", pe->line()}};
        detail::send_error(res, status, e.what(), detail);
      } catch (const std::exception& e) {
        detail::send_error(res, 500, e.what());
      }
    };
  }

  void post_dataset(const httplib::Request& req, httplib::Response& res) {
    LoadOptions opt;
    if (req.has_param("delimiter")) {
      const auto d = req.get_param_value("delimiter");
      opt.delimiter = d == "tab" || d == "\\t" ? '\t' : (d.empty() ? ',' : d[0]);
    }
    if (req.has_param("id_column")) opt.id_column = req.get_param_value("id_column");
    if (req.has_param("label_columns")) {
      opt.label_columns = detail::split_list(req.get_param_value("label_columns"));
    }
    if (req.has_param("group_column")) opt.group_column = req.get_param_value("group_column");
    std::istringstream in(req.body);
    DataTable table = load_table(in, opt);
    const std::size_t bytes =
        req.body.size() + table.rows() * table.columns().size() * sizeof(Cell);
    const auto ds = store_.add_dataset(std::move(table), bytes);
    json body = column_summaries(ds->table);
    body["id"] = ds->id;
    detail::send_json(res, body, 201);
  }

  void get_dataset(const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.dataset(req.matches[1]);
    json body = column_summaries(ds->table);
    body["id"] = ds->id;
    detail::send_json(res, body);
  }

  void post_build(const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.dataset(req.matches[1]);
    const json body = detail::parse_body(req);
    auto g = std::make_shared<GraphArtifact>();
    g->dataset_id = ds->id;
    RunConfig& cfg = g->config;
    cfg.axes = detail::field<std::vector<std::string>>(body, "axes");
    cfg.cover.epsilon = detail::field<double>(body, "epsilon");
    cfg.cover.strategy = parse_strategy(detail::field_or<std::string>(body, "strategy", "first"));
    cfg.cover.seed = detail::field_or<std::uint64_t>(body, "seed", 0);
    cfg.normalize_per_group = detail::field_or<bool>(body, "normalize_per_group", false);
    if (body.contains("winsor") && body.at("winsor").is_null()) {
      cfg.winsor.reset();
    } else {
      const auto q = detail::field_or<std::vector<double>>(body, "winsor", {0.005, 0.995});
      if (q.size() != 2) throw ValidationError("winsor must be [lower_q, upper_q]");
      WinsorSpec w;
      w.lower_q = q[0];
      w.upper_q = q[1];
      w.mode = detail::field_or<std::string>(body, "winsor_mode", "clamp") == "drop"
                   ? WinsorMode::drop
                   : WinsorMode::clamp;
      w.per_group = detail::field_or<bool>(body, "winsor_per_group", false);
      cfg.winsor = w;
    }
    cfg.validate();
    g->prepared = prepare(ds->table, cfg);
    if (g->prepared.cloud.size() > options_.max_build_points) {
      throw ValidationError("point cloud of " + std::to_string(g->prepared.cloud.size()) +
                            " exceeds the synchronous build cap of " +
                            std::to_string(options_.max_build_points));
    }
    g->cover = build_cover(g->prepared.cloud, cfg.cover);
    g->graph = build_graph(g->cover);
    g->graph_json = graph_to_json(g->cover, g->graph, g->prepared.table.row_ids());
    const std::string dumped = g->graph_json.dump();
    g->content_hash = sha256_hex(dumped);
    g->bytes = dumped.size() + g->prepared.table.rows() * g->prepared.table.columns().size() * sizeof(Cell);
    const auto stored = store_.add_graph(std::move(g));
    if (options_.write_through) write_through(*ds, *stored);
    detail::send_json(res, graph_body(*stored), 201);
  }

  // Writes a complete run directory the CLI can open with --run: the dataset
  // as input.csv, the manifest and the rendered outputs.
  void write_through(const Dataset& ds, const GraphArtifact& g) const {
    namespace fs = std::filesystem;
    const fs::path dir = *options_.write_through / g.id;
    std::ostringstream csv;
    write_table(csv, ds.table);
    RunConfig cfg = g.config;
    cfg.input = fs::absolute(dir / "input.csv");
    cfg.out = dir;
    cfg.load = LoadOptions{};
    for (const auto& l : ds.table.labels()) cfg.load.label_columns.push_back(l.name);
    cfg.load.group_column = ds.table.group_column();
    cfg.formats = {"json", "csv"};
    const RunArtifacts run = render_run(cfg, g.prepared, csv.str());
    fs::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& contents) {
      std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
      f << contents;
      if (!f) throw DataError("write-through: cannot write " + (dir / name).string());
    };
    put("input.csv", csv.str());
    for (const auto& [name, contents] : run.files) put(name, contents);
  }

  static json graph_body(const GraphArtifact& g) {
    return {{"id", g.id}, {"dataset_id", g.dataset_id}, {"content_hash", g.content_hash},
            {"graph", g.graph_json}};
  }

  void get_graph(const httplib::Request& req, httplib::Response& res) {
    detail::send_json(res, graph_body(*store_.graph(req.matches[1])));
  }

  void get_coloring(const httplib::Request& req, httplib::Response& res) {
    const auto g = store_.graph(req.matches[1]);
    const std::string variable = req.matches[2];
    detail::send_json(res, coloring_to_json(induce_coloring(g->cover, g->prepared.table, variable)));
  }

  void post_compare(const httplib::Request& req, httplib::Response& res) {
    const auto g = store_.graph(req.matches[1]);
    const json body = detail::parse_body(req);
    const auto a = detail::ball_ids(body, "group_a", g->cover);
    const auto b = detail::ball_ids(body, "group_b", g->cover);
    const auto vars = detail::field_or<std::vector<std::string>>(
        body, "variables", detail::numeric_columns(g->prepared.table));
    detail::send_json(res, comparison_to_json(compare_balls(g->cover, g->prepared.table, a, b, vars)));
  }

  void get_summary(const httplib::Request& req, httplib::Response& res) {
    const auto g = store_.graph(req.matches[1]);
    const auto vars = req.has_param("variables")
                          ? detail::split_list(req.get_param_value("variables"))
                          : detail::numeric_columns(g->prepared.table);
    detail::send_json(res, {{"graph_id", g->id},
                            {"rows", summary_to_json(ball_summary(g->cover, g->prepared.table, vars), vars)}});
  }

  void post_regress(const httplib::Request& req, httplib::Response& res) {
    const auto ds = store_.dataset(req.matches[1]);
    const json body = detail::parse_body(req);
    const auto response = detail::field<std::string>(body, "response");
    const auto regressors = detail::field<std::vector<std::string>>(body, "regressors");
    const auto graph_id = detail::field_or<std::string>(body, "graph_id", "");

    json out;
    if (graph_id.empty()) {
      out = {{"fit", regression_to_json(ols_fit(ds->table, regressors, response))}};
    } else {
      // Fit on the graph's preprocessed table so residual rows line up with
      // its cover.
      const auto g = store_.graph(graph_id);
      if (g->dataset_id != ds->id) throw ValidationError("graph " + graph_id + " belongs to another dataset");
      const RegressionFit fit = ols_fit(g->prepared.table, regressors, response);
      const auto rc = residual_coloring(fit, g->cover);
      out = {{"fit", regression_to_json(fit)},
             {"graph_id", g->id},
             {"colorings",
              {{"residual", coloring_values(rc.residual)},
               {"abs_residual", coloring_values(rc.absolute_residual)}}}};
    }
    detail::send_json(res, out);
  }

  ServiceOptions options_;
  SessionStore store_;
};

}  // namespace ballmapper::service
