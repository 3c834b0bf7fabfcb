#include "wgeo/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wgeo/errors.hpp"

namespace wgeo {

Matrix rasterize_scatter(const Matrix& points, std::size_t size) {
  if (points.rows() == 0) throw ArgumentError("scatter plot needs at least one point");
  if (points.cols() < 2) throw ArgumentError("scatter plot needs two columns");
  if (size < 2) throw ArgumentError("canvas too small");
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[1]};
  for (std::size_t i = 0; i < points.rows(); ++i)
    for (int k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], points(i, k));
      hi[k] = std::max(hi[k], points(i, k));
    }
  // Same scale on both axes so shapes are not distorted.
  double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1e-12}) * 1.05;
  const double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);

  Matrix pixels(size * size, 3);
  pixels.fill(1.0);
  const double last = static_cast<double>(size - 1);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double u = ((points(i, 0) - cx) / span + 0.5) * last;
    const double v = ((points(i, 1) - cy) / span + 0.5) * last;
    const auto col = static_cast<std::size_t>(std::clamp(std::lround(u), 0L, static_cast<long>(last)));
    const auto row = static_cast<std::size_t>(std::clamp(std::lround(last - v), 0L, static_cast<long>(last)));
    auto px = pixels.row(row * size + col);
    px[0] = px[1] = px[2] = 0.0;
  }
  return pixels;
}

}  // namespace wgeo
