#include "wgeo/measures.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wgeo/errors.hpp"

namespace wgeo {

namespace {

void validate_gaussian(const GaussianSpec& g) {
  const std::size_t d = g.mean.size();
  if (d == 0) throw ArgumentError("gaussian mean is empty");
  if (g.cov.rows() != d || g.cov.cols() != d)
    throw ArgumentError("gaussian covariance must be " + std::to_string(d) + "x" +
                        std::to_string(d));
  cholesky_psd(g.cov);
}

struct DimVisitor {
  std::size_t operator()(const GaussianSpec& g) const { return g.mean.size(); }
  std::size_t operator()(const MixtureSpec& m) const {
    return m.components.empty() ? 0 : m.components.front().mean.size();
  }
  std::size_t operator()(const EmpiricalSpec&) const { return 0; }
  std::size_t operator()(const ImagePaletteSpec&) const { return 0; }
};

}  // namespace

Matrix cholesky_psd(const Matrix& cov) {
  const std::size_t d = cov.rows();
  if (cov.cols() != d) throw ArgumentError("covariance must be square");
  double scale = 0.0;
  for (double v : cov.flat()) {
    if (!std::isfinite(v)) throw ArgumentError("covariance has non-finite entries");
    scale = std::max(scale, std::abs(v));
  }
  const double tol = 1e-12 * std::max(scale, 1.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(cov(i, j) - cov(j, i)) > tol) throw ArgumentError("covariance is not symmetric");

  Matrix l(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = cov(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (diag < -tol) throw ArgumentError("covariance is not positive semi-definite");
    if (diag <= tol) {
      // Null direction: the remaining entries of this column must vanish too.
      for (std::size_t i = j + 1; i < d; ++i) {
        double off = cov(i, j);
        for (std::size_t k = 0; k < j; ++k) off -= l(i, k) * l(j, k);
        if (std::abs(off) > 1e-9 * std::max(scale, 1.0))
          throw ArgumentError("covariance is not positive semi-definite");
      }
      continue;
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double off = cov(i, j);
      for (std::size_t k = 0; k < j; ++k) off -= l(i, k) * l(j, k);
      l(i, j) = off / ljj;
    }
  }
  return l;
}

void validate(const MeasureSpec& spec) {
  if (const auto* g = std::get_if<GaussianSpec>(&spec)) {
    validate_gaussian(*g);
  } else if (const auto* m = std::get_if<MixtureSpec>(&spec)) {
    if (m->components.empty()) throw ArgumentError("mixture has no components");
    if (m->weights.size() != m->components.size())
      throw ArgumentError("mixture needs one weight per component");
    double total = 0.0;
    for (double w : m->weights) {
      if (!(w >= 0.0)) throw ArgumentError("mixture weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("mixture weights must sum to 1");
    const std::size_t d = m->components.front().mean.size();
    for (const auto& c : m->components) {
      if (c.mean.size() != d) throw ArgumentError("mixture components differ in dimension");
      validate_gaussian(c);
    }
  } else if (const auto* e = std::get_if<EmpiricalSpec>(&spec)) {
    if (e->path.empty()) throw ArgumentError("empirical measure needs a path");
  } else if (const auto* p = std::get_if<ImagePaletteSpec>(&spec)) {
    if (p->path.empty()) throw ArgumentError("image palette needs a path");
  }
}

std::size_t spec_dim(const MeasureSpec& spec) { return std::visit(DimVisitor{}, spec); }

MeasureSampler::MeasureSampler(const MeasureSpec& spec) {
  validate(spec);
  if (const auto* g = std::get_if<GaussianSpec>(&spec)) {
    components_.push_back({g->mean, cholesky_psd(g->cov)});
    dim_ = g->mean.size();
  } else if (const auto* m = std::get_if<MixtureSpec>(&spec)) {
    weights_ = m->weights;
    for (const auto& c : m->components) components_.push_back({c.mean, cholesky_psd(c.cov)});
    dim_ = components_.front().mean.size();
  } else if (const auto* e = std::get_if<EmpiricalSpec>(&spec)) {
    rows_ = load_csv(e->path).points();
    dim_ = rows_.cols();
  } else if (const auto* p = std::get_if<ImagePaletteSpec>(&spec)) {
    rows_ = load_ppm_palette(p->path).pixels.points();
    dim_ = 3;
  }
}

Matrix MeasureSampler::sample(std::size_t n, Rng& rng) const {
  if (n == 0) throw ArgumentError("sample size must be at least 1");
  Matrix out(n, dim_);
  if (!rows_.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, rows_.rows() - 1);
    for (std::size_t r = 0; r < n; ++r) {
      const auto src = rows_.row(pick(rng));
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::discrete_distribution<std::size_t> choose(weights_.begin(), weights_.end());
  std::vector<double> z(dim_);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = weights_.empty() ? 0 : choose(rng);
    const auto& comp = components_[c];
    for (double& v : z) v = normal(rng);
    auto row = out.row(r);
    for (std::size_t i = 0; i < dim_; ++i) {
      double v = comp.mean[i];
      for (std::size_t k = 0; k <= i; ++k) v += comp.chol(i, k) * z[k];
      row[i] = v;
    }
  }
  return out;
}

PointCloud sample(const MeasureSpec& spec, std::size_t n, Rng& rng) {
  return PointCloud(MeasureSampler(spec).sample(n, rng));
}

// ----------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

PointCloud parse_csv(const std::string& text) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto first = field.find_first_not_of(" \t");
      const auto last = field.find_last_not_of(" \t");
      if (first == std::string::npos) throw ParseError("empty CSV field", line_no);
      field = field.substr(first, last - first + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("non-numeric CSV field '" + field + "'", line_no);
      if (!std::isfinite(v)) throw ParseError("non-finite CSV value", line_no);
      values.push_back(v);
      ++count;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError("ragged CSV row: expected " + std::to_string(cols) + " fields, got " +
                           std::to_string(count),
                       line_no);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("CSV has no rows");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return PointCloud(std::move(m));
}

PointCloud load_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string format_csv(const Matrix& rows) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", rows(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Matrix& rows) {
  write_file_atomic(path, format_csv(rows));
}

namespace {

// Next whitespace-delimited header token; '#' comments run to end of line.
std::string ppm_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw FormatError("truncated PPM header");
  return bytes.substr(start, pos - start);
}

std::size_t ppm_number(const std::string& token) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw FormatError("bad PPM header field '" + token + "'");
  return v;
}

}  // namespace

Image parse_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  if (ppm_token(bytes, pos) != "P6") throw FormatError("not a binary PPM (magic must be P6)");
  const std::size_t width = ppm_number(ppm_token(bytes, pos));
  const std::size_t height = ppm_number(ppm_token(bytes, pos));
  const std::size_t maxval = ppm_number(ppm_token(bytes, pos));
  if (maxval != 255) throw FormatError("PPM maxval must be 255");
  if (width == 0 || height == 0) throw FormatError("PPM has zero size");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw FormatError("truncated PPM header");
  ++pos;
  const std::size_t n = width * height;
  if (bytes.size() - pos < 3 * n) throw FormatError("PPM pixel data is truncated");
  Matrix px(n, 3);
  for (std::size_t i = 0; i < 3 * n; ++i)
    px.flat()[i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + i])) / 255.0;
  return {PointCloud(std::move(px)), width, height};
}

Image load_ppm_palette(const std::filesystem::path& path) { return parse_ppm(read_file(path)); }

std::string encode_ppm(const Matrix& pixels, std::size_t width, std::size_t height) {
  if (pixels.cols() != 3) throw ShapeError("PPM pixels need 3 channels");
  if (pixels.rows() != width * height)
    throw ShapeError("PPM pixel count does not match width x height");
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + 3 * pixels.rows());
  for (double v : pixels.flat()) {
    const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Matrix& pixels, std::size_t width,
               std::size_t height) {
  write_file_atomic(path, encode_ppm(pixels, width, height));
}

}  // namespace wgeo
