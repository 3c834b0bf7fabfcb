#pragma once

#include <span>
#include <vector>

#include "wgeo/cost.hpp"
#include "wgeo/diffcore/mlp.hpp"
#include "wgeo/point_cloud.hpp"

namespace wgeo {

/// P(x) = sigma x + mu with sigma > 0.
class Preconditioner {
 public:
  Preconditioner() = default;
  Preconditioner(double sigma, std::vector<double> mu);
  static Preconditioner identity(std::size_t dim);

  double sigma() const noexcept { return sigma_; }
  const std::vector<double>& mu() const noexcept { return mu_; }
  std::size_t dim() const noexcept { return mu_.size(); }
  bool is_identity() const noexcept;

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& y) const;

  friend bool operator==(const Preconditioner&, const Preconditioner&) = default;

 private:
  double sigma_ = 1.0;
  std::vector<double> mu_;
};

/// A transport field assembled from a trained network and a preconditioner.
///   source side: F*(x) = F(P x) + P x - x                 (field trained on P#rho_a -> rho_b)
///   target side: G*(y) = P^-1(y + G(y)) - y               (field trained on rho_b -> P#rho_a)
/// With P = Id both reduce to the raw network.
class ComposedField {
 public:
  enum class Side { source, target };

  ComposedField(MlpParams net, Preconditioner precond, Side side);

  Matrix operator()(const Matrix& x) const;
  const MlpParams& network() const noexcept { return net_; }
  const Preconditioner& preconditioner() const noexcept { return precond_; }

 private:
  MlpParams net_;
  Preconditioner precond_;
  Side side_;
};

ComposedField compose_preconditioner(const MlpParams& f_hat, const Preconditioner& p);
ComposedField compose_preconditioner_inverse(const MlpParams& g_hat, const Preconditioner& p);

/// Architecture used for the transport fields and the dual potentials.
struct NetworkShape {
  std::size_t width = 48;
  std::size_t field_hidden = 5;
  std::size_t potential_hidden = 6;

  MlpArchitecture field(std::size_t dim) const { return {dim, dim, width, field_hidden}; }
  MlpArchitecture potential(std::size_t dim) const {
    return {dim + 1, 1, width, potential_hidden};
  }
};

/// Both transport fields, both potentials, the preconditioner and the cost.
/// f_net/g_net are the raw networks; forward_field()/backward_field() return
/// the preconditioner-composed maps that act on rho_a / rho_b.
struct GeoState {
  std::size_t dim = 0;
  CostModel cost;
  MlpParams f_net;
  MlpParams g_net;
  MlpParams phi_f;
  MlpParams phi_g;
  Preconditioner precond;

  static GeoState initialize(std::size_t dim, const CostModel& cost, const NetworkShape& shape,
                             Rng& rng);
  /// Throws ShapeError when network dimensions disagree with dim.
  void validate() const;

  ComposedField forward_field() const;
  ComposedField backward_field() const;

  friend bool operator==(const GeoState&, const GeoState&) = default;
};

struct GeodesicSnapshot {
  double t = 0.0;
  PointCloud points;
};

/// F(x) row by row.
Matrix velocity(const MlpParams& net, const Matrix& x);
std::vector<double> velocity(const MlpParams& net, std::span<const double> x);

/// Row i -> x_i + t F(x_i); t must lie in [0, 1].
GeodesicSnapshot push_samples(const MlpParams& net, const PointCloud& cloud, double t);
GeodesicSnapshot push_samples(const ComposedField& field, const PointCloud& cloud, double t);
/// Same, with the field values already computed.
GeodesicSnapshot push_with_velocity(const PointCloud& cloud, const Matrix& field_values, double t);

/// phi(x, t) with t fed as the last input coordinate.
double phi_eval(const MlpParams& phi, std::span<const double> x, double t);
Matrix append_time(const Matrix& x, double t);
Matrix append_time(const Matrix& x, std::span<const double> t);

}  // namespace wgeo
