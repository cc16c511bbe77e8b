#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "ballmapper/error.hpp"

namespace ballmapper {

// Anything the cover engine can run on: a fixed-dimension set of points with
// random access to each point's coordinates.
template <class P>
concept PointSet = requires(const P& points, std::size_t i) {
  { points.size() } -> std::convertible_to<std::size_t>;
  { points.dim() } -> std::convertible_to<std::size_t>;
  { points.point(i) } -> std::convertible_to<std::span<const double>>;
};

// Euclidean distance. Coordinates are accumulated in axis order so every
// caller gets bit-identical results for the same pair.
inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

template <PointSet P>
double distance(const P& points, std::size_t a, std::size_t b) {
  if (a >= points.size() || b >= points.size()) {
    throw ValidationError("point index out of range");
  }
  return euclidean(points.point(a), points.point(b));
}

// Row-major n x d coordinates with no range constraint. Handy for raw
// geometry and for tests; PointCloud is the normalized counterpart.
class PointMatrix {
 public:
  PointMatrix() = default;
  PointMatrix(std::size_t dim, std::vector<double> coords)
      : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0 || coords_.size() % dim_ != 0) {
      throw ValidationError("coordinate count is not a multiple of the dimension");
    }
  }

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

}  // namespace ballmapper
