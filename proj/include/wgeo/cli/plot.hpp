#pragma once

#include <cstddef>

#include "wgeo/linalg.hpp"

namespace wgeo {

inline constexpr std::size_t kScatterCanvas = 512;

/// RGB pixels in [0,1] (row-major, size x size rows) showing the first two
/// columns of `points`. Axes are scaled to the data bounds with a small margin.
Matrix rasterize_scatter(const Matrix& points, std::size_t size = kScatterCanvas);

}  // namespace wgeo
