#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "wgeo/linalg.hpp"
#include "wgeo/point_cloud.hpp"
#include "wgeo/random.hpp"

namespace wgeo {

struct GaussianSpec {
  std::vector<double> mean;
  Matrix cov;
};

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<GaussianSpec> components;
};

/// Rows of a headerless CSV file, resampled with replacement.
struct EmpiricalSpec {
  std::string path;
};

/// Pixels of a binary PPM scaled to [0,1]^3, resampled with replacement.
struct ImagePaletteSpec {
  std::string path;
};

using MeasureSpec = std::variant<GaussianSpec, MixtureSpec, EmpiricalSpec, ImagePaletteSpec>;

/// Checks the invariants of a spec without touching the filesystem.
void validate(const MeasureSpec& spec);
std::size_t spec_dim(const MeasureSpec& spec);  // 0 for file-backed specs

/// A spec with its Cholesky factors computed and files loaded, ready to draw from.
class MeasureSampler {
 public:
  explicit MeasureSampler(const MeasureSpec& spec);

  std::size_t dim() const noexcept { return dim_; }
  /// n i.i.d. draws; throws ArgumentError when n == 0.
  Matrix sample(std::size_t n, Rng& rng) const;

 private:
  struct Component {
    std::vector<double> mean;
    Matrix chol;  // lower-triangular factor of the covariance
  };
  std::vector<double> weights_;  // empty unless a mixture
  std::vector<Component> components_;
  Matrix rows_;  // for empirical and image specs
  std::size_t dim_ = 0;
};

PointCloud sample(const MeasureSpec& spec, std::size_t n, Rng& rng);

/// Lower-triangular L with L L^T = cov; zero columns for null directions.
/// Throws ArgumentError when cov is not symmetric positive semi-definite.
Matrix cholesky_psd(const Matrix& cov);

/// Headerless comma-separated rows of equal length; throws ParseError with the line number.
PointCloud load_csv(const std::filesystem::path& path);
PointCloud parse_csv(const std::string& text);
/// Rows with 17 significant digits, LF line endings.
void write_csv(const std::filesystem::path& path, const Matrix& rows);
std::string format_csv(const Matrix& rows);

struct Image {
  PointCloud pixels;  // row-major pixel order, channels in [0,1]
  std::size_t width = 0;
  std::size_t height = 0;
};

/// Binary P6 with maxval 255; throws FormatError otherwise.
Image load_ppm_palette(const std::filesystem::path& path);
Image parse_ppm(const std::string& bytes);
/// P6, maxval 255, channel = round(clamp(v, 0, 1) * 255).
void write_ppm(const std::filesystem::path& path, const Matrix& pixels, std::size_t width,
               std::size_t height);
std::string encode_ppm(const Matrix& pixels, std::size_t width, std::size_t height);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace wgeo
