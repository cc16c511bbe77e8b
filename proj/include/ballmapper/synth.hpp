#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ballmapper/error.hpp"
#include "ballmapper/table.hpp"

namespace ballmapper {

struct YCloudOptions {
  std::size_t n = 300;
  double arm_length = 1.0;
  double noise = 0.0;  // standard deviation of the perpendicular arm jitter
  std::uint64_t seed = 7;
  double blob_fraction = 0.4;
  double blob_radius = 0.08;  // relative to arm_length
};

// A dense blob at the origin with three arms leaving it at 90, 210 and 330
// degrees. Columns: x, y and arm (0 for the blob, 1..3 for the arms). Rows are
// ordered blob first, then each arm from the join outwards.
inline DataTable generate_y_cloud(const YCloudOptions& opt) {
  if (opt.n < 30) throw ValidationError("a Y cloud needs at least 30 points");
  if (!(opt.arm_length > 0.0)) throw ValidationError("arm length must be positive");
  if (opt.noise < 0.0) throw ValidationError("noise must be non-negative");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto n_blob = static_cast<std::size_t>(std::round(opt.blob_fraction * opt.n));
  const std::size_t n_arms = opt.n - n_blob;
  const double r_blob = opt.blob_radius * opt.arm_length;

  std::vector<Cell> xs, ys, arm;
  for (std::size_t i = 0; i < n_blob; ++i) {
    const double r = r_blob * std::sqrt(unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    xs.emplace_back(r * std::cos(theta));
    ys.emplace_back(r * std::sin(theta));
    arm.emplace_back(0.0);
  }
  const double angles[3] = {90.0, 210.0, 330.0};
  for (int a = 0; a < 3; ++a) {
    const std::size_t count = n_arms / 3 + (static_cast<std::size_t>(a) < n_arms % 3 ? 1 : 0);
    const double phi = angles[a] * std::numbers::pi / 180.0;
    const double ux = std::cos(phi), uy = std::sin(phi);
    for (std::size_t j = 0; j < count; ++j) {
      // Stratified positions keep the spacing along the arm even.
      const double t = r_blob + (opt.arm_length - r_blob) *
                                    (static_cast<double>(j) + unit(rng)) /
                                    static_cast<double>(count);
      const double off = opt.noise > 0.0 ? opt.noise * gauss(rng) : 0.0;
      xs.emplace_back(t * ux - off * uy);
      ys.emplace_back(t * uy + off * ux);
      arm.emplace_back(static_cast<double>(a + 1));
    }
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < xs.size(); ++i) ids.push_back("p" + std::to_string(i + 1));
  return DataTable(std::move(ids), {{"x", std::move(xs)}, {"y", std::move(ys)}, {"arm", std::move(arm)}});
}

struct HeavyTailOptions {
  std::size_t n = 2000;
  std::size_t dim = 5;
  std::size_t outliers = 3;
  double tail_dof = 3.0;  // Student-t degrees of freedom for the bulk
  double outlier_scale = 40.0;
  std::uint64_t seed = 1;
};

// Student-t bulk plus a few points placed far out on distinct directions.
// Columns x1..x<dim> and outlier (1 for the planted points).
inline DataTable generate_heavy_tail_cloud(const HeavyTailOptions& opt) {
  if (opt.dim == 0) throw ValidationError("dimension must be positive");
  if (opt.outliers >= opt.n) throw ValidationError("too many outliers for n");
  std::mt19937_64 rng(opt.seed);
  std::student_t_distribution<double> t(opt.tail_dof);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<Cell>> cols(opt.dim);
  std::vector<Cell> flag;
  const std::size_t bulk = opt.n - opt.outliers;
  for (std::size_t i = 0; i < bulk; ++i) {
    for (auto& c : cols) c.emplace_back(t(rng));
    flag.emplace_back(0.0);
  }
  for (std::size_t o = 0; o < opt.outliers; ++o) {
    const double phi = 2.0 * std::numbers::pi *
                       (static_cast<double>(o) + 0.25 * unit(rng)) /
                       static_cast<double>(opt.outliers);
    for (std::size_t k = 0; k < opt.dim; ++k) {
      const double dir = k % 2 == 0 ? std::cos(phi + 0.5 * static_cast<double>(k))
                                    : std::sin(phi + 0.5 * static_cast<double>(k - 1));
      cols[k].emplace_back(opt.outlier_scale * dir);
    }
    flag.emplace_back(1.0);
  }
  std::vector<Column> columns;
  for (std::size_t k = 0; k < opt.dim; ++k) {
    columns.push_back({"x" + std::to_string(k + 1), std::move(cols[k])});
  }
  columns.push_back({"outlier", std::move(flag)});
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < opt.n; ++i) ids.push_back("p" + std::to_string(i + 1));
  return DataTable(std::move(ids), std::move(columns));
}

}  // namespace ballmapper
