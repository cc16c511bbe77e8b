#pragma once

// Brute-force reference computations for the test suites. Nothing here calls
// into the engine's algorithms; only plain containers go in and out.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct Cloud {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> xs;  // row-major

  const double* row(std::size_t i) const { return xs.data() + i * d; }
};

inline double dist(const Cloud& c, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.d; ++k) {
    const double t = c.row(a)[k] - c.row(b)[k];
    s += t * t;
  }
  return std::sqrt(s);
}

// Uniform points in the unit cube, optionally with a few tight clusters so
// covers contain real overlaps and duplicates.
inline Cloud random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Cloud c{n, d, std::vector<double>(n * d)};
  for (double& x : c.xs) x = u(rng);
  return c;
}

inline double diameter(const Cloud& c) {
  double best = 0.0;
  for (std::size_t a = 0; a < c.n; ++a) {
    for (std::size_t b = a + 1; b < c.n; ++b) best = std::max(best, dist(c, a, b));
  }
  return best;
}

inline double min_gap(const Cloud& c) {
  double best = INFINITY;
  for (std::size_t a = 0; a < c.n; ++a) {
    for (std::size_t b = a + 1; b < c.n; ++b) best = std::min(best, dist(c, a, b));
  }
  return best;
}

// Points not within eps of any landmark.
inline std::size_t uncovered_points(const Cloud& c, const std::vector<std::size_t>& landmarks,
                                    double eps) {
  std::size_t bad = 0;
  for (std::size_t p = 0; p < c.n; ++p) {
    bool ok = false;
    for (std::size_t l : landmarks) ok = ok || dist(c, l, p) <= eps;
    bad += ok ? 0 : 1;
  }
  return bad;
}

// Every ball's members recomputed from scratch.
inline std::vector<std::set<std::size_t>> balls(const Cloud& c,
                                                const std::vector<std::size_t>& landmarks,
                                                double eps) {
  std::vector<std::set<std::size_t>> out;
  for (std::size_t l : landmarks) {
    std::set<std::size_t> b;
    for (std::size_t p = 0; p < c.n; ++p) {
      if (dist(c, l, p) <= eps) b.insert(p);
    }
    out.push_back(std::move(b));
  }
  return out;
}

// (i, j) with i < j (0-based ball indices) -> |C_i ∩ C_j| for every
// nonempty intersection.
inline std::map<std::pair<std::size_t, std::size_t>, std::size_t> intersections(
    const std::vector<std::set<std::size_t>>& bs) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> out;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    for (std::size_t j = i + 1; j < bs.size(); ++j) {
      std::size_t k = 0;
      for (std::size_t p : bs[i]) k += bs[j].count(p);
      if (k > 0) out[{i, j}] = k;
    }
  }
  return out;
}

inline std::vector<std::size_t> degrees(
    std::size_t vertices, const std::map<std::pair<std::size_t, std::size_t>, std::size_t>& edges) {
  std::vector<std::size_t> deg(vertices, 0);
  for (const auto& [e, w] : edges) {
    ++deg[e.first];
    ++deg[e.second];
  }
  return deg;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

struct OlsOracle {
  std::vector<double> beta;
  std::vector<double> se;
  double r2 = 0.0;
};

// Explicit normal equations: beta = (X'X)^-1 X'y, se from the diagonal of
// sigma^2 (X'X)^-1. `x` holds rows of regressors; an intercept is prepended.
inline OlsOracle normal_equations(const std::vector<std::vector<double>>& x,
                                  const std::vector<double>& y) {
  const std::size_t n = y.size();
  const std::size_t k = x.front().size() + 1;
  auto design = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : x[i][j - 1]; };
  std::vector<std::vector<double>> xtx(k, std::vector<double>(k, 0.0));
  std::vector<double> xty(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      xty[a] += design(i, a) * y[i];
      for (std::size_t b = 0; b < k; ++b) xtx[a][b] += design(i, a) * design(i, b);
    }
  }
  OlsOracle out;
  out.beta = solve(xtx, xty);
  double rss = 0.0, mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t a = 0; a < k; ++a) fit += design(i, a) * out.beta[a];
    rss += (y[i] - fit) * (y[i] - fit);
    tss += (y[i] - mean) * (y[i] - mean);
  }
  out.r2 = 1.0 - rss / tss;
  const double sigma2 = rss / static_cast<double>(n - k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> e(k, 0.0);
    e[j] = 1.0;
    out.se.push_back(std::sqrt(sigma2 * solve(xtx, e)[j]));
  }
  return out;
}

// Nearest-rank quantile by direct enumeration: the smallest sorted value v
// such that at least q*m of the values are <= v.
inline double nearest_rank_by_count(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (static_cast<double>(i + 1) >= q * m - 1e-9) return values[i];
  }
  return values.back();
}

}  // namespace oracle
