#pragma once

// Exact transport references at desk scale: closed-form Gaussian transport,
// exact assignment between equal-size clouds, and displacement interpolation.

#include <cstddef>
#include <vector>

#include "wgeo/cost.hpp"
#include "wgeo/linalg.hpp"
#include "wgeo/point_cloud.hpp"

namespace wgeo {

struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;  // columns are eigenvectors
};

/// Cyclic Jacobi rotations; stops when the off-diagonal norm falls below tol.
SymmetricEigen jacobi_eigen(const Matrix& sym, double tol = 1e-12, int max_sweeps = 100);

/// Square root of a symmetric positive semi-definite matrix.
Matrix sqrtm_psd(const Matrix& sym);

struct GaussianOtSolution {
  double squared_w2 = 0.0;    // |m_a - m_b|^2 + Bures term
  double dynamic_cost = 0.0;  // squared_w2 / 2, the cost under L(v) = |v|^2 / 2
  Matrix map_linear;          // A in T(x) = A x + b
  std::vector<double> map_offset;

  std::vector<double> apply(std::span<const double> x) const;
};

/// Throws ArgumentError unless both covariances are symmetric positive definite.
GaussianOtSolution gaussian_w2(const std::vector<double>& mean_a, const Matrix& cov_a,
                               const std::vector<double>& mean_b, const Matrix& cov_b);

struct Assignment {
  std::vector<std::size_t> perm;  // row i of the source goes to row perm[i] of the target
  double total_cost = 0.0;        // (1/n) sum_i c(x_i, y_perm[i])
};

/// Minimum-cost perfect matching on a square cost matrix; O(n^3) shortest
/// augmenting paths with potentials.
std::vector<std::size_t> solve_assignment(const Matrix& cost);

/// Cost matrix c(x_i, y_j) = L(y_j - x_i).
Matrix transport_cost_matrix(const Matrix& a, const Matrix& b, const CostModel& cost);

constexpr std::size_t kMaxDiscreteOtPoints = 4096;

/// Exact Monge solution between equal-weight clouds of equal size (n <= 4096).
Assignment exact_discrete_ot(const Matrix& a, const Matrix& b, const CostModel& cost);

/// Row i -> (1 - t) a_i + t b_perm[i]; t in [0, 1].
PointCloud mccann_interpolate(const Matrix& a, const Matrix& b, const Assignment& assignment,
                              double t);

/// Mean over the rows of `from` of the distance to the nearest row of `to`.
double mean_nearest_neighbor_distance(const Matrix& from, const Matrix& to);

/// (1/n) sum_i |b_perm[i] - a_i|.
double mean_displacement_norm(const Matrix& a, const Matrix& b, const Assignment& assignment);

}  // namespace wgeo
