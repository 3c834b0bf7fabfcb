#include "wgeo/geoflow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wgeo/errors.hpp"

namespace wgeo {

PointCloud::PointCloud(Matrix points) : points_(std::move(points)) {
  if (points_.rows() == 0 || points_.cols() == 0) throw ArgumentError("point cloud is empty");
  if (!points_.all_finite()) throw ArgumentError("point cloud has non-finite entries");
}

Preconditioner::Preconditioner(double sigma, std::vector<double> mu)
    : sigma_(sigma), mu_(std::move(mu)) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ArgumentError("preconditioner sigma must be finite and > 0");
  for (double m : mu_)
    if (!std::isfinite(m)) throw ArgumentError("preconditioner mu must be finite");
}

Preconditioner Preconditioner::identity(std::size_t dim) {
  return Preconditioner(1.0, std::vector<double>(dim, 0.0));
}

bool Preconditioner::is_identity() const noexcept {
  return sigma_ == 1.0 && std::all_of(mu_.begin(), mu_.end(), [](double m) { return m == 0.0; });
}

Matrix Preconditioner::apply(const Matrix& x) const {
  if (x.cols() != mu_.size()) throw ShapeError("preconditioner: dimension mismatch");
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = sigma_ * x(r, c) + mu_[c];
  return y;
}

Matrix Preconditioner::invert(const Matrix& y) const {
  if (y.cols() != mu_.size()) throw ShapeError("preconditioner: dimension mismatch");
  Matrix x(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) x(r, c) = (y(r, c) - mu_[c]) / sigma_;
  return x;
}

ComposedField::ComposedField(MlpParams net, Preconditioner precond, Side side)
    : net_(std::move(net)), precond_(std::move(precond)), side_(side) {
  if (net_.in_dim() != net_.out_dim() || net_.in_dim() != precond_.dim())
    throw ShapeError("composed field: network and preconditioner dimensions differ");
}

Matrix ComposedField::operator()(const Matrix& x) const {
  if (precond_.is_identity()) return mlp_forward(net_, x);
  if (side_ == Side::source) {
    const Matrix px = precond_.apply(x);
    Matrix out = mlp_forward(net_, px);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.flat()[i] += px.flat()[i] - x.flat()[i];
    return out;
  }
  Matrix moved = mlp_forward(net_, x);
  for (std::size_t i = 0; i < moved.size(); ++i) moved.flat()[i] += x.flat()[i];
  Matrix out = precond_.invert(moved);
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] -= x.flat()[i];
  return out;
}

ComposedField compose_preconditioner(const MlpParams& f_hat, const Preconditioner& p) {
  return ComposedField(f_hat, p, ComposedField::Side::source);
}

ComposedField compose_preconditioner_inverse(const MlpParams& g_hat, const Preconditioner& p) {
  return ComposedField(g_hat, p, ComposedField::Side::target);
}

GeoState GeoState::initialize(std::size_t dim, const CostModel& cost, const NetworkShape& shape,
                              Rng& rng) {
  GeoState s;
  s.dim = dim;
  s.cost = cost;
  s.f_net = MlpParams::glorot_uniform(shape.field(dim), rng);
  s.g_net = MlpParams::glorot_uniform(shape.field(dim), rng);
  s.phi_f = MlpParams::glorot_uniform(shape.potential(dim), rng);
  s.phi_g = MlpParams::glorot_uniform(shape.potential(dim), rng);
  s.precond = Preconditioner::identity(dim);
  return s;
}

void GeoState::validate() const {
  auto check = [&](const MlpParams& p, std::size_t in, std::size_t out, const char* name) {
    if (p.in_dim() != in || p.out_dim() != out)
      throw ShapeError(std::string(name) + ": expected " + std::to_string(in) + " -> " +
                       std::to_string(out) + " network");
  };
  if (dim == 0) throw ShapeError("state dimension must be positive");
  check(f_net, dim, dim, "f_net");
  check(g_net, dim, dim, "g_net");
  check(phi_f, dim + 1, 1, "phi_f");
  check(phi_g, dim + 1, 1, "phi_g");
  if (precond.dim() != dim) throw ShapeError("preconditioner dimension differs from state");
}

ComposedField GeoState::forward_field() const { return compose_preconditioner(f_net, precond); }
ComposedField GeoState::backward_field() const {
  return compose_preconditioner_inverse(g_net, precond);
}

Matrix velocity(const MlpParams& net, const Matrix& x) {
  if (net.in_dim() != net.out_dim()) throw ShapeError("velocity: field must map R^d to R^d");
  return mlp_forward(net, x);
}

std::vector<double> velocity(const MlpParams& net, std::span<const double> x) {
  if (net.in_dim() != net.out_dim()) throw ShapeError("velocity: field must map R^d to R^d");
  return mlp_forward(net, x);
}

GeodesicSnapshot push_with_velocity(const PointCloud& cloud, const Matrix& field_values, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("push_samples: t must lie in [0, 1]");
  const Matrix& x = cloud.points();
  if (field_values.rows() != x.rows() || field_values.cols() != x.cols())
    throw ShapeError("push_samples: field values do not match the cloud");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.flat()[i] = x.flat()[i] + t * field_values.flat()[i];
  return {t, PointCloud(std::move(out))};
}

GeodesicSnapshot push_samples(const MlpParams& net, const PointCloud& cloud, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("push_samples: t must lie in [0, 1]");
  return push_with_velocity(cloud, velocity(net, cloud.points()), t);
}

GeodesicSnapshot push_samples(const ComposedField& field, const PointCloud& cloud, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("push_samples: t must lie in [0, 1]");
  return push_with_velocity(cloud, field(cloud.points()), t);
}

Matrix append_time(const Matrix& x, double t) {
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin());
    out(r, x.cols()) = t;
  }
  return out;
}

Matrix append_time(const Matrix& x, std::span<const double> t) {
  if (t.size() != x.rows()) throw ShapeError("append_time: one time per row required");
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin());
    out(r, x.cols()) = t[r];
  }
  return out;
}

double phi_eval(const MlpParams& phi, std::span<const double> x, double t) {
  if (phi.out_dim() != 1 || phi.in_dim() != x.size() + 1)
    throw ShapeError("phi_eval: potential must map R^(d+1) to R");
  std::vector<double> xt(x.begin(), x.end());
  xt.push_back(t);
  return mlp_forward(phi, std::span<const double>(xt)).front();
}

}  // namespace wgeo
