#pragma once

#include <span>
#include <vector>

#include "wgeo/linalg.hpp"

namespace wgeo {

/// Radial power Lagrangian L(v) = beta |v|^alpha / alpha and its Legendre
/// conjugate H(m) = beta^(1-q) |m|^q / q with q = alpha / (alpha - 1).
/// alpha = 2, beta = 1 is the quadratic cost |v|^2 / 2.
class CostModel {
 public:
  CostModel() = default;
  /// Throws ArgumentError unless alpha > 1 and beta > 0.
  CostModel(double alpha, double beta);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double conjugate_exponent() const noexcept { return q_; }

  double lagrangian(std::span<const double> v) const;
  double hamiltonian(std::span<const double> m) const;

  /// grad L(v) = beta |v|^(alpha-2) v.
  void grad_lagrangian(std::span<const double> v, std::span<double> out) const;
  std::vector<double> grad_lagrangian(std::span<const double> v) const;

  /// (grad L)^-1(m) = grad H(m) = beta^(1-q) |m|^(q-2) m; exactly 0 at m = 0.
  void grad_l_inverse(std::span<const double> m, std::span<double> out) const;
  std::vector<double> grad_l_inverse(std::span<const double> m) const;

  /// Mean of L over the rows of a matrix of velocities.
  double mean_lagrangian(const Matrix& velocities) const;

  friend bool operator==(const CostModel&, const CostModel&) = default;

 private:
  double alpha_ = 2.0;
  double beta_ = 1.0;
  double q_ = 2.0;
};

}  // namespace wgeo
