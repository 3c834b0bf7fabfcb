#include "wgeo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wgeo/errors.hpp"

namespace wgeo {

SymmetricEigen jacobi_eigen(const Matrix& sym, double tol, int max_sweeps) {
  const std::size_t n = sym.rows();
  if (sym.cols() != n) throw ShapeError("jacobi_eigen: matrix must be square");
  Matrix a = sym;
  Matrix v = Matrix::identity(n);
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  SymmetricEigen out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  return out;
}

namespace {

Matrix spectral_function(const SymmetricEigen& eig, double (*f)(double)) {
  const std::size_t n = eig.values.size();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(i, j) += eig.vectors(i, k) * fk * eig.vectors(j, k);
  }
  return out;
}

Matrix symmetrized(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
  return out;
}

void require_spd(const Matrix& cov, const char* name) {
  if (cov.rows() != cov.cols()) throw ArgumentError(std::string(name) + " must be square");
  double scale = 0.0;
  for (double v : cov.flat()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < cov.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-12 * std::max(1.0, scale))
        throw ArgumentError(std::string(name) + " is not symmetric");
  const auto eig = jacobi_eigen(cov);
  for (double ev : eig.values)
    if (!(ev > 1e-14 * std::max(1.0, scale)))
      throw ArgumentError(std::string(name) + " is not positive definite");
}

}  // namespace

Matrix sqrtm_psd(const Matrix& sym) {
  return spectral_function(jacobi_eigen(symmetrized(sym)),
                           [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

std::vector<double> GaussianOtSolution::apply(std::span<const double> x) const {
  std::vector<double> y(map_offset);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += map_linear(i, j) * x[j];
  return y;
}

GaussianOtSolution gaussian_w2(const std::vector<double>& mean_a, const Matrix& cov_a,
                               const std::vector<double>& mean_b, const Matrix& cov_b) {
  const std::size_t d = mean_a.size();
  if (mean_b.size() != d || cov_a.rows() != d || cov_b.rows() != d)
    throw ArgumentError("gaussian_w2: dimensions differ");
  require_spd(cov_a, "cov_a");
  require_spd(cov_b, "cov_b");

  const auto eig_a = jacobi_eigen(symmetrized(cov_a));
  const Matrix root_a = spectral_function(eig_a, [](double x) { return std::sqrt(x); });
  const Matrix inv_root_a = spectral_function(eig_a, [](double x) { return 1.0 / std::sqrt(x); });
  const Matrix cross = sqrtm_psd(matmul(matmul(root_a, cov_b), root_a));

  GaussianOtSolution out;
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (mean_a[i] - mean_b[i]) * (mean_a[i] - mean_b[i]);
  const double bures = trace(cov_a) + trace(cov_b) - 2.0 * trace(cross);
  out.squared_w2 = std::max(0.0, mean_term + bures);
  out.dynamic_cost = 0.5 * out.squared_w2;
  out.map_linear = symmetrized(matmul(matmul(inv_root_a, cross), inv_root_a));
  out.map_offset.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double v = mean_b[i];
    for (std::size_t j = 0; j < d; ++j) v -= out.map_linear(i, j) * mean_a[j];
    out.map_offset[i] = v;
  }
  return out;
}

std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw ArgumentError("assignment needs a square cost matrix");
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based rows/columns; column 0 is the virtual start of each augmenting path.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 1; j <= n; ++j) perm[match[j] - 1] = j - 1;
  return perm;
}

Matrix transport_cost_matrix(const Matrix& a, const Matrix& b, const CostModel& cost) {
  if (a.cols() != b.cols()) throw ArgumentError("cost matrix: dimensions differ");
  Matrix c(a.rows(), b.rows());
  std::vector<double> diff(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      for (std::size_t k = 0; k < a.cols(); ++k) diff[k] = b(j, k) - a(i, k);
      c(i, j) = cost.lagrangian(diff);
    }
  return c;
}

Assignment exact_discrete_ot(const Matrix& a, const Matrix& b, const CostModel& cost) {
  if (a.rows() != b.rows()) throw ArgumentError("exact_discrete_ot: clouds differ in size");
  if (a.cols() != b.cols()) throw ArgumentError("exact_discrete_ot: dimensions differ");
  if (a.rows() == 0) throw ArgumentError("exact_discrete_ot: empty clouds");
  if (a.rows() > kMaxDiscreteOtPoints)
    throw ArgumentError("exact_discrete_ot: at most 4096 points per cloud");
  const Matrix c = transport_cost_matrix(a, b, cost);
  Assignment out;
  out.perm = solve_assignment(c);
  double total = 0.0;
  for (std::size_t i = 0; i < out.perm.size(); ++i) total += c(i, out.perm[i]);
  out.total_cost = total / static_cast<double>(a.rows());
  return out;
}

PointCloud mccann_interpolate(const Matrix& a, const Matrix& b, const Assignment& assignment,
                              double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("mccann_interpolate: t must lie in [0, 1]");
  if (a.rows() != b.rows() || a.cols() != b.cols() || assignment.perm.size() != a.rows())
    throw ArgumentError("mccann_interpolate: clouds and assignment do not match");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const std::size_t j = assignment.perm[i];
    for (std::size_t k = 0; k < a.cols(); ++k) out(i, k) = (1.0 - t) * a(i, k) + t * b(j, k);
  }
  return PointCloud(std::move(out));
}

double mean_nearest_neighbor_distance(const Matrix& from, const Matrix& to) {
  if (from.rows() == 0 || to.rows() == 0 || from.cols() != to.cols())
    throw ArgumentError("mean_nearest_neighbor_distance: clouds must be non-empty and of equal dimension");
  double total = 0.0;
  for (std::size_t i = 0; i < from.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < to.rows(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < from.cols(); ++k) {
        const double diff = from(i, k) - to(j, k);
        d2 += diff * diff;
      }
      best = std::min(best, d2);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.rows());
}

double mean_displacement_norm(const Matrix& a, const Matrix& b, const Assignment& assignment) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || assignment.perm.size() != a.rows())
    throw ArgumentError("mean_displacement_norm: clouds and assignment do not match");
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double diff = b(assignment.perm[i], k) - a(i, k);
      d2 += diff * diff;
    }
    total += std::sqrt(d2);
  }
  return total / static_cast<double>(a.rows());
}

}  // namespace wgeo
