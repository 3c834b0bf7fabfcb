#pragma once

#include "wgeo/linalg.hpp"

namespace wgeo {

/// n x d samples of an empirical measure; n >= 1 and every entry finite.
class PointCloud {
 public:
  PointCloud() = default;
  /// Throws ArgumentError on an empty or non-finite matrix.
  explicit PointCloud(Matrix points);

  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dim() const noexcept { return points_.cols(); }
  const Matrix& points() const& noexcept { return points_; }
  Matrix points() && noexcept { return std::move(points_); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  Matrix points_;
};

}  // namespace wgeo
