#include "wgeo/cost.hpp"

#include <cmath>

#include "wgeo/errors.hpp"

namespace wgeo {

namespace {
double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}
}  // namespace

CostModel::CostModel(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha > 1.0) || !std::isfinite(alpha))
    throw ArgumentError("cost.alpha must be a finite value > 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("cost.beta must be > 0");
  q_ = alpha / (alpha - 1.0);
}

double CostModel::lagrangian(std::span<const double> v) const {
  const double r2 = squared_norm(v);
  if (r2 == 0.0) return 0.0;
  if (alpha_ == 2.0) return 0.5 * beta_ * r2;
  const double r = std::sqrt(r2);
  return beta_ * std::pow(r, alpha_) / alpha_;
}

double CostModel::hamiltonian(std::span<const double> m) const {
  const double r2 = squared_norm(m);
  if (r2 == 0.0) return 0.0;
  if (alpha_ == 2.0) return 0.5 * r2 / beta_;
  const double r = std::sqrt(r2);
  return std::pow(beta_, 1.0 - q_) * std::pow(r, q_) / q_;
}

void CostModel::grad_lagrangian(std::span<const double> v, std::span<double> out) const {
  if (out.size() != v.size()) throw ShapeError("grad_lagrangian: output length differs");
  const double r = std::sqrt(squared_norm(v));
  const double scale = r == 0.0 ? 0.0 : beta_ * std::pow(r, alpha_ - 2.0);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i];
}

std::vector<double> CostModel::grad_lagrangian(std::span<const double> v) const {
  std::vector<double> out(v.size());
  grad_lagrangian(v, out);
  return out;
}

void CostModel::grad_l_inverse(std::span<const double> m, std::span<double> out) const {
  if (out.size() != m.size()) throw ShapeError("grad_l_inverse: output length differs");
  const double r = std::sqrt(squared_norm(m));
  double scale = 0.0;
  if (r > 0.0) scale = alpha_ == 2.0 ? 1.0 / beta_ : std::pow(beta_, 1.0 - q_) * std::pow(r, q_ - 2.0);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = scale * m[i];
}

std::vector<double> CostModel::grad_l_inverse(std::span<const double> m) const {
  std::vector<double> out(m.size());
  grad_l_inverse(m, out);
  return out;
}

double CostModel::mean_lagrangian(const Matrix& velocities) const {
  if (velocities.rows() == 0) throw ArgumentError("mean_lagrangian: no rows");
  double s = 0.0;
  for (std::size_t r = 0; r < velocities.rows(); ++r) s += lagrangian(velocities.row(r));
  return s / static_cast<double>(velocities.rows());
}

}  // namespace wgeo
