#pragma once

// Helpers shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "wgeo/diffcore/mlp.hpp"
#include "wgeo/geoflow.hpp"
#include "wgeo/linalg.hpp"
#include "wgeo/random.hpp"

namespace wgeo::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = n(rng);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

/// Network with every parameter drawn from N(0, scale^2), biases included.
inline MlpParams random_params(const MlpArchitecture& arch, Rng& rng, double scale = 0.5) {
  MlpParams p = MlpParams::zeros(arch);
  std::normal_distribution<double> n(0.0, scale);
  for (double& v : p.flat()) v = n(rng);
  return p;
}

/// Network whose output is the constant c (zero weights, bias c on the last layer).
inline MlpParams constant_params(const MlpArchitecture& arch, const std::vector<double>& c) {
  MlpParams p = MlpParams::zeros(arch);
  auto b = p.bias(p.num_layers() - 1);
  std::copy(c.begin(), c.end(), b.begin());
  return p;
}

/// Single affine layer y = W x + b.
inline MlpParams affine_params(const Matrix& w, const std::vector<double>& b) {
  MlpParams p({LayerShape{w.cols(), w.rows()}});
  std::copy(w.flat().begin(), w.flat().end(), p.weights(0).begin());
  std::copy(b.begin(), b.end(), p.bias(0).begin());
  return p;
}

// Scalar-loop oracle straight from the layer definition.
inline std::vector<double> naive_forward(const MlpParams& p, std::vector<double> x) {
  for (std::size_t k = 0; k < p.num_layers(); ++k) {
    const auto& s = p.shapes()[k];
    const auto w = p.weights(k);
    const auto b = p.bias(k);
    std::vector<double> y(s.out);
    for (std::size_t o = 0; o < s.out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < s.in; ++i) acc += w[o * s.in + i] * x[i];
      y[o] = k + 1 < p.num_layers() ? std::tanh(acc) : acc;
    }
    x = std::move(y);
  }
  return x;
}

/// Central differences of f over every parameter of p.
inline std::vector<double> fd_gradient(MlpParams p, const std::function<double(const MlpParams&)>& f,
                                       double h = 1e-5) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p.flat()[i];
    p.flat()[i] = orig + h;
    const double up = f(p);
    p.flat()[i] = orig - h;
    const double down = f(p);
    p.flat()[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Largest relative error over entries whose magnitude exceeds floor.
inline double max_rel_err(std::span<const double> got, std::span<const double> want,
                          double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    if (std::abs(want[i]) > floor || std::abs(got[i]) > floor)
      worst = std::max(worst, rel_err(got[i], want[i]));
  return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("wgeo_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline GeoState state_with_fields(std::size_t dim, const MlpParams& f, const MlpParams& g) {
  GeoState s;
  s.dim = dim;
  s.f_net = f;
  s.g_net = g;
  s.phi_f = MlpParams::zeros({dim + 1, 1, 4, 1});
  s.phi_g = MlpParams::zeros({dim + 1, 1, 4, 1});
  s.precond = Preconditioner::identity(dim);
  return s;
}

}  // namespace wgeo::test
