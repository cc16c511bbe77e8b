#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ballmapper/coloring.hpp"
#include "ballmapper/cover.hpp"
#include "ballmapper/error.hpp"
#include "ballmapper/geometry.hpp"
#include "ballmapper/table.hpp"

namespace ballmapper {

// ---------------------------------------------------------------------------
// Ordinary least squares

struct RegressionFit {
  std::vector<std::string> terms;  // "const" followed by the regressors
  std::vector<double> coefficients;
  std::vector<double> standard_errors;  // classical, homoskedastic
  std::vector<double> t_abs;            // |coefficient / standard error|
  std::vector<Cell> residuals;          // per table row; empty for excluded rows
  double r_squared = 0.0;               // NaN when the response is constant
  std::size_t n_obs = 0;
};

// Coefficients, standard errors and residuals for y on a design matrix whose
// first column is the intercept. Solved by column-pivoted Householder QR.
struct OlsSolution {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd residuals;
  double r_squared = 0.0;
};

inline OlsSolution ols_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                             std::span<const std::string> terms) {
  const auto n = design.rows();
  const auto k = design.cols();
  if (n <= k) {
    throw NumericError("need more observations than parameters: n = " + std::to_string(n) +
                       ", parameters = " + std::to_string(k));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k) {
    std::string names;
    for (Eigen::Index j = qr.rank(); j < k; ++j) {
      if (!names.empty()) names += ", ";
      names += terms[static_cast<std::size_t>(qr.colsPermutation().indices()(j))];
    }
    throw NumericError("design matrix is rank deficient; collinear columns: " + names);
  }

  OlsSolution out;
  out.coefficients = qr.solve(y);
  out.residuals = y - design * out.coefficients;
  const double rss = out.residuals.squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();
  out.r_squared = tss > 0.0 ? 1.0 - rss / tss : std::numeric_limits<double>::quiet_NaN();

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
  const double sigma2 = rss / static_cast<double>(n - k);
  out.standard_errors.resize(k);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index j = 0; j < k; ++j) {
    out.standard_errors(perm(j)) = std::sqrt(sigma2 * xtx_inv_perm(j, j));
  }
  return out;
}

// Regresses `response` on `regressors` (plus an intercept) using the rows
// where all of them are present.
inline RegressionFit ols_fit(const DataTable& table, std::span<const std::string> regressors,
                             const std::string& response) {
  const Column& y_col = table.column(response);
  std::vector<const Column*> x_cols;
  for (const auto& r : regressors) x_cols.push_back(&table.column(r));

  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    bool ok = y_col.values[r].has_value();
    for (const Column* c : x_cols) ok = ok && c->values[r].has_value();
    if (ok) rows.push_back(r);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(regressors.size() + 1);
  if (rows.size() <= regressors.size() + 1) {
    throw NumericError("need more complete rows than parameters: n = " +
                       std::to_string(rows.size()) + ", parameters = " + std::to_string(k));
  }

  RegressionFit fit;
  fit.terms.push_back("const");
  fit.terms.insert(fit.terms.end(), regressors.begin(), regressors.end());

  Eigen::MatrixXd design(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) design(i, j) = *x_cols[j - 1]->values[r];
    y(i) = *y_col.values[r];
  }
  const OlsSolution sol = ols_solve(design, y, fit.terms);

  for (Eigen::Index j = 0; j < k; ++j) {
    fit.coefficients.push_back(sol.coefficients(j));
    fit.standard_errors.push_back(sol.standard_errors(j));
    fit.t_abs.push_back(std::abs(sol.coefficients(j) / sol.standard_errors(j)));
  }
  fit.residuals.assign(table.rows(), std::nullopt);
  for (Eigen::Index i = 0; i < n; ++i) fit.residuals[rows[static_cast<std::size_t>(i)]] = sol.residuals(i);
  fit.r_squared = sol.r_squared;
  fit.n_obs = rows.size();
  return fit;
}

// Two-sided normal-approximation stars: * 5%, ** 1%, *** 0.1%.
inline std::string significance_stars(double t_abs) {
  if (t_abs >= 3.2905267314918945) return "***";
  if (t_abs >= 2.5758293035489004) return "**";
  if (t_abs >= 1.959963984540054) return "*";
  return "";
}

struct ResidualColorings {
  Coloring residual;
  Coloring absolute_residual;
};

inline ResidualColorings residual_coloring(const RegressionFit& fit, const Cover& cover) {
  if (fit.residuals.size() != cover.table_rows) {
    throw ValidationError("regression rows (" + std::to_string(fit.residuals.size()) +
                          ") do not match the cover's table (" +
                          std::to_string(cover.table_rows) + ")");
  }
  std::vector<Cell> abs_res;
  abs_res.reserve(fit.residuals.size());
  for (const Cell& r : fit.residuals) abs_res.push_back(r ? Cell(std::abs(*r)) : std::nullopt);
  return {induce_coloring(cover, fit.residuals, "residual"),
          induce_coloring(cover, abs_res, "abs_residual")};
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
};

struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  std::vector<double> centroids;  // k x d, row-major
  double objective = 0.0;
  std::size_t iterations_run = 0;
  std::vector<double> objective_history;  // after each assignment step
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

// Lloyd's algorithm from k distinct seeded data points. Stops when an
// assignment step changes nothing or after max_iter assignment steps. An
// empty cluster is moved onto the point farthest from its old centroid.
template <PointSet P>
Clustering kmeans(const P& points, const KMeansOptions& opt) {
  const std::size_t n = points.size();
  const std::size_t d = points.dim();
  if (opt.k == 0) throw ValidationError("k must be at least 1");
  if (opt.k > n) {
    throw ValidationError("k = " + std::to_string(opt.k) + " exceeds the " +
                          std::to_string(n) + " points");
  }
  if (opt.max_iter == 0) throw ValidationError("max_iter must be at least 1");

  Clustering c;
  c.k = opt.k;
  c.centroids.resize(opt.k * d);
  auto centroid = [&](std::size_t j) { return std::span<double>(c.centroids.data() + j * d, d); };

  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t j = 0; j < opt.k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(order[j], order[pick(rng)]);
    const auto p = points.point(order[j]);
    std::copy(p.begin(), p.end(), centroid(j).begin());
  }

  std::vector<std::size_t> previous;
  c.assignments.assign(n, 0);
  for (std::size_t iter = 1;; ++iter) {
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = points.point(i);
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < opt.k; ++j) {
        const double dd = detail::squared_distance(p, centroid(j));
        if (dd < best_d) {
          best_d = dd;
          best = j;
        }
      }
      c.assignments[i] = best;
      objective += best_d;
    }
    c.objective = objective;
    c.objective_history.push_back(objective);
    c.iterations_run = iter;
    if (c.assignments == previous || iter >= opt.max_iter) break;
    previous = c.assignments;

    std::vector<double> sums(opt.k * d, 0.0);
    std::vector<std::size_t> sizes(opt.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = points.point(i);
      const std::size_t j = c.assignments[i];
      for (std::size_t a = 0; a < d; ++a) sums[j * d + a] += p[a];
      ++sizes[j];
    }
    std::vector<char> taken(n, 0);
    for (std::size_t j = 0; j < opt.k; ++j) {
      if (sizes[j] > 0) {
        for (std::size_t a = 0; a < d; ++a) {
          centroid(j)[a] = sums[j * d + a] / static_cast<double>(sizes[j]);
        }
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dd = detail::squared_distance(points.point(i), centroid(j));
        if (!taken[i] && dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      taken[far] = 1;
      const auto p = points.point(far);
      std::copy(p.begin(), p.end(), centroid(j).begin());
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Group-size contrast

struct LabelledPartition {
  std::string method;
  std::vector<std::size_t> groups;  // group label per point
};

struct ClusterSizeReport {
  std::string method;
  std::size_t groups = 0;  // non-empty groups
  std::size_t min_size = 0;
  std::size_t max_size = 0;
  std::size_t total = 0;
};

inline ClusterSizeReport size_report(const LabelledPartition& partition) {
  std::vector<std::size_t> sizes;
  for (std::size_t g : partition.groups) {
    if (g >= sizes.size()) sizes.resize(g + 1, 0);
    ++sizes[g];
  }
  std::erase(sizes, 0u);
  ClusterSizeReport r{partition.method, sizes.size(), 0, 0, partition.groups.size()};
  if (!sizes.empty()) {
    r.min_size = *std::min_element(sizes.begin(), sizes.end());
    r.max_size = *std::max_element(sizes.begin(), sizes.end());
  }
  return r;
}

inline LabelledPartition ball_partition(const Cover& cover, std::string method) {
  LabelledPartition p{std::move(method), {}};
  for (BallId b : assign_unique(cover)) p.groups.push_back(b.index());
  return p;
}

inline LabelledPartition kmeans_partition(const Clustering& c, std::string method) {
  return {std::move(method), c.assignments};
}

inline std::vector<ClusterSizeReport> cluster_size_report(
    const LabelledPartition& ball_mapper, std::span<const LabelledPartition> kmeans_runs) {
  std::vector<ClusterSizeReport> rows;
  for (const auto& p : kmeans_runs) {
    if (p.groups.size() != ball_mapper.groups.size()) {
      throw ValidationError("partitions cover different point sets");
    }
  }
  if (!kmeans_runs.empty()) rows.push_back(size_report(kmeans_runs.front()));
  rows.push_back(size_report(ball_mapper));
  for (std::size_t i = 1; i < kmeans_runs.size(); ++i) rows.push_back(size_report(kmeans_runs[i]));
  return rows;
}

// The three-row contrast: k-means at the analyst's k, Ball Mapper with unique
// assignment, and k-means with as many clusters as there are balls.
template <PointSet P>
std::vector<ClusterSizeReport> clustering_contrast(const P& points, const Cover& cover,
                                                   std::size_t k, std::uint64_t seed,
                                                   std::size_t max_iter = 300) {
  const std::size_t m = cover.ball_count();
  const auto at_k = kmeans(points, {k, seed, max_iter});
  const auto at_m = kmeans(points, {m, seed, max_iter});
  const LabelledPartition runs[] = {
      kmeans_partition(at_k, "k-means (" + std::to_string(k) + ")"),
      kmeans_partition(at_m, "k-means (" + std::to_string(m) + ")")};
  return cluster_size_report(ball_partition(cover, "Ball Mapper (" + format_number(cover.params.epsilon) + ")"),
                             runs);
}

}  // namespace ballmapper
