#include "wgeo/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "wgeo/errors.hpp"

namespace wgeo {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw ShapeError("row slice out of range");
  Matrix out(end - begin, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>(end * cols_), out.data_.begin());
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

namespace {
void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(what);
}
}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix sum: shapes differ");
  Matrix out = a;
  auto o = out.flat();
  auto bf = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bf[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix difference: shapes differ");
  Matrix out = a;
  auto o = out.flat();
  auto bf = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bf[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.flat()) v *= s;
  return out;
}

double frobenius_norm(const Matrix& a) { return norm(a.flat()); }

double trace(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("trace of non-square matrix");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff: shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  return m;
}

Matrix hcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) throw ShapeError("hcat: row counts differ");
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    std::copy(left.row(r).begin(), left.row(r).end(), out.row(r).begin());
    std::copy(right.row(r).begin(), right.row(r).end(),
              out.row(r).begin() + static_cast<std::ptrdiff_t>(left.cols()));
  }
  return out;
}

std::vector<double> column_means(const Matrix& a) {
  std::vector<double> mean(a.cols(), 0.0);
  if (a.rows() == 0) return mean;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) mean[c] += a(r, c);
  for (double& m : mean) m /= static_cast<double>(a.rows());
  return mean;
}

Matrix sample_covariance(const Matrix& a) {
  if (a.rows() < 2) throw ArgumentError("covariance needs at least two rows");
  const auto mean = column_means(a);
  Matrix cov(a.cols(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double di = a(r, i) - mean[i];
      for (std::size_t j = 0; j < a.cols(); ++j) cov(i, j) += di * (a(r, j) - mean[j]);
    }
  const double scale = 1.0 / static_cast<double>(a.rows() - 1);
  for (double& v : cov.flat()) v *= scale;
  return cov;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace wgeo
