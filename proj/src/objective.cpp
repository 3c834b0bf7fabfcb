#include "wgeo/objective.hpp"

#include <cmath>
#include <string>

#include "wgeo/errors.hpp"

namespace wgeo {

namespace {

struct InteriorPartial {
  double residual_sum = 0.0;
  double abs_residual_sum = 0.0;
  MlpParams param_grad;
  Matrix x_grad;  // seed-scaled d s / d x, x block only
};

// Residual r = d_t phi + H(grad_x phi) on rows (x, t), plus the gradients of
// seed * r through the frozen-tangent directional derivative.
InteriorPartial eval_interior(const MlpParams& phi, const Matrix& points_time, double seed,
                              const CostModel& cost, bool want_param, bool want_x) {
  const std::size_t rows = points_time.rows();
  const std::size_t dim = points_time.cols() - 1;
  Tape tape = mlp_record(phi, points_time);
  const Matrix grad = mlp_scalar_input_grad(phi, tape);

  InteriorPartial out;
  Matrix tangent(rows, dim + 1);
  std::vector<double> momentum(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto g = grad.row(r);
    const std::span<const double> gx = g.first(dim);
    const double residual = g[dim] + cost.hamiltonian(gx);
    out.residual_sum += residual;
    out.abs_residual_sum += std::abs(residual);
    cost.grad_l_inverse(gx, momentum);
    auto u = tangent.row(r);
    std::copy(momentum.begin(), momentum.end(), u.begin());
    u[dim] = 1.0;
  }
  if (!want_param && !want_x) return out;

  const std::vector<double> seeds(rows, seed);
  DirectionalGrad dg = mlp_directional_grad(phi, tape, tangent, seeds, want_param);
  if (want_param) out.param_grad = std::move(dg.param_grad);
  if (want_x) {
    out.x_grad = Matrix(rows, dim);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(dg.input_grad.row(r).begin(), dim, out.x_grad.row(r).begin());
  }
  return out;
}

struct BoundaryPartial {
  double sum = 0.0;
  MlpParams param_grad;
};

// sum_k sign * phi(w_k, t) and its parameter gradient scaled by weight.
BoundaryPartial eval_boundary(const MlpParams& phi, const Matrix& w, double t, double weight) {
  const Matrix input = append_time(w, t);
  const Tape tape = mlp_record(phi, input);
  BoundaryPartial out;
  for (double v : tape.output().flat()) out.sum += v;
  const Matrix cot(input.rows(), 1, weight);
  out.param_grad = mlp_reverse(phi, tape, cot, true).param_grad;
  return out;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingError(std::string(what) + ": non-finite value");
}

void require_finite(const MlpParams& p, const char* what) {
  if (!p.all_finite()) throw TrainingError(std::string(what) + ": non-finite gradient");
}

template <class Partials>
MlpParams sum_grads(const MlpParams& like, const Partials& partials) {
  MlpParams total = like.zeros_like();
  for (const auto& part : partials) total += part.param_grad;
  return total;
}

void check_phi(const MlpParams& phi, std::size_t dim) {
  if (phi.out_dim() != 1 || phi.in_dim() != dim + 1)
    throw ShapeError("potential must map R^(d+1) to R");
}

void check_field(const MlpParams& field, std::size_t dim) {
  if (field.in_dim() != dim || field.out_dim() != dim)
    throw ShapeError("field must map R^d to R^d");
}

}  // namespace

void InteriorBatch::validate() const {
  if (z.rows() == 0) throw ArgumentError("interior batch is empty");
  if (t.size() != z.rows()) throw ShapeError("interior batch needs one time per sample");
  for (double tk : t)
    if (!(tk >= 0.0 && tk <= 1.0)) throw ArgumentError("interior times must lie in [0, 1]");
}

void BoundaryBatch::validate() const {
  if (source.rows() == 0 || target.rows() == 0) throw ArgumentError("boundary batch is empty");
  if (source.rows() != target.rows())
    throw ArgumentError("boundary source and target sizes differ");
  if (source.cols() != target.cols()) throw ShapeError("boundary dimensions differ");
}

PushedInterior push_interior(const MlpParams& field, const InteriorBatch& interior) {
  interior.validate();
  check_field(field, interior.z.cols());
  const Matrix v = mlp_forward(field, interior.z);
  PushedInterior out;
  out.t = interior.t;
  out.points_time = Matrix(interior.z.rows(), interior.z.cols() + 1);
  for (std::size_t r = 0; r < interior.z.rows(); ++r) {
    const double t = interior.t[r];
    for (std::size_t c = 0; c < interior.z.cols(); ++c)
      out.points_time(r, c) = interior.z(r, c) + t * v(r, c);
    out.points_time(r, interior.z.cols()) = t;
  }
  return out;
}

PhiLoss loss_phi(const MlpParams& phi, const PushedInterior& pushed, const BoundaryBatch& boundary,
                 const CostModel& cost, const ExecutionPolicy& policy) {
  boundary.validate();
  const std::size_t n = pushed.points_time.rows();
  if (n == 0) throw ArgumentError("interior batch is empty");
  const std::size_t dim = pushed.points_time.cols() - 1;
  if (boundary.source.cols() != dim) throw ShapeError("boundary and interior dimensions differ");
  check_phi(phi, dim);

  const double inv_n = 1.0 / static_cast<double>(n);
  const auto interior = map_chunks(n, policy, [&](std::size_t b, std::size_t e) {
    return eval_interior(phi, pushed.points_time.slice_rows(b, e), -inv_n, cost, true, false);
  });

  const std::size_t m = boundary.source.rows();
  const double inv_m = 1.0 / static_cast<double>(m);
  const auto at_target = map_chunks(m, policy, [&](std::size_t b, std::size_t e) {
    return eval_boundary(phi, boundary.target.slice_rows(b, e), 1.0, inv_m);
  });
  const auto at_source = map_chunks(m, policy, [&](std::size_t b, std::size_t e) {
    return eval_boundary(phi, boundary.source.slice_rows(b, e), 0.0, -inv_m);
  });

  PhiLoss out;
  double residual_sum = 0.0;
  double abs_sum = 0.0;
  for (const auto& part : interior) {
    residual_sum += part.residual_sum;
    abs_sum += part.abs_residual_sum;
  }
  double target_sum = 0.0;
  double source_sum = 0.0;
  for (const auto& part : at_target) target_sum += part.sum;
  for (const auto& part : at_source) source_sum += part.sum;

  out.interior_term = -residual_sum * inv_n;
  out.boundary_term = (target_sum - source_sum) * inv_m;
  out.value = out.interior_term + out.boundary_term;
  out.hjb_residual_mean = abs_sum * inv_n;
  out.grad = sum_grads(phi, interior);
  out.grad += sum_grads(phi, at_target);
  out.grad += sum_grads(phi, at_source);
  require_finite(out.value, "loss_phi");
  require_finite(out.grad, "loss_phi");
  return out;
}

PhiLoss loss_phi(const MlpParams& phi, const MlpParams& field, const InteriorBatch& interior,
                 const BoundaryBatch& boundary, const CostModel& cost,
                 const ExecutionPolicy& policy) {
  return loss_phi(phi, push_interior(field, interior), boundary, cost, policy);
}

MlpParams grad_field_from_phi_term(const MlpParams& phi, const MlpParams& field,
                                   const InteriorBatch& interior, const CostModel& cost,
                                   const ExecutionPolicy& policy) {
  interior.validate();
  const std::size_t dim = interior.z.cols();
  check_field(field, dim);
  check_phi(phi, dim);
  const std::size_t n = interior.z.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  struct Partial {
    MlpParams param_grad;
  };
  const auto partials = map_chunks(n, policy, [&](std::size_t b, std::size_t e) {
    InteriorBatch chunk{interior.z.slice_rows(b, e),
                        std::vector<double>(interior.t.begin() + static_cast<std::ptrdiff_t>(b),
                                            interior.t.begin() + static_cast<std::ptrdiff_t>(e))};
    const Tape field_tape = mlp_record(field, chunk.z);
    Matrix points_time(chunk.z.rows(), dim + 1);
    for (std::size_t r = 0; r < chunk.z.rows(); ++r) {
      for (std::size_t c = 0; c < dim; ++c)
        points_time(r, c) = chunk.z(r, c) + chunk.t[r] * field_tape.output()(r, c);
      points_time(r, dim) = chunk.t[r];
    }
    InteriorPartial ip = eval_interior(phi, points_time, -inv_n, cost, false, true);
    // dx_k / dF(z_k) = t_k I
    for (std::size_t r = 0; r < ip.x_grad.rows(); ++r)
      for (double& v : ip.x_grad.row(r)) v *= chunk.t[r];
    return Partial{mlp_reverse(field, field_tape, ip.x_grad, true).param_grad};
  });
  MlpParams grad = sum_grads(field, partials);
  require_finite(grad, "grad_field_from_phi_term");
  return grad;
}

namespace {

struct CyclePartial {
  double sum_sq = 0.0;
  MlpParams grad_first;
  MlpParams grad_second;
};

// sum |second(x + first(x)) + first(x)|^2 over the chunk, gradients scaled by `scale`.
CyclePartial eval_cycle(const MlpParams& first, const MlpParams& second, const Matrix& x,
                        double scale) {
  const Tape first_tape = mlp_record(first, x);
  const Matrix& fx = first_tape.output();
  const Matrix moved = x + fx;
  const Tape second_tape = mlp_record(second, moved);
  Matrix residual = second_tape.output() + fx;

  CyclePartial out;
  for (double v : residual.flat()) out.sum_sq += v * v;
  for (double& v : residual.flat()) v *= 2.0 * scale;
  ReverseResult rs = mlp_reverse(second, second_tape, residual, true);
  out.grad_second = std::move(rs.param_grad);
  Matrix first_cot = residual + rs.input_grad;
  out.grad_first = mlp_reverse(first, first_tape, first_cot, true).param_grad;
  return out;
}

}  // namespace

CycleLoss loss_cycle(const MlpParams& f_net, const MlpParams& g_net, const Matrix& samples_a,
                     const Matrix& samples_b, double lambda, const ExecutionPolicy& policy) {
  if (samples_a.rows() == 0 || samples_b.rows() == 0)
    throw ArgumentError("loss_cycle: empty sample set");
  if (samples_a.rows() != samples_b.rows())
    throw ArgumentError("loss_cycle: both sides need the same sample count");
  const std::size_t dim = samples_a.cols();
  if (samples_b.cols() != dim) throw ShapeError("loss_cycle: sample dimensions differ");
  check_field(f_net, dim);
  check_field(g_net, dim);

  CycleLoss out;
  out.grad_f = f_net.zeros_like();
  out.grad_g = g_net.zeros_like();
  const double scale = lambda / static_cast<double>(samples_a.rows());
  if (lambda == 0.0) return out;

  const auto side_a = map_chunks(samples_a.rows(), policy, [&](std::size_t b, std::size_t e) {
    return eval_cycle(f_net, g_net, samples_a.slice_rows(b, e), scale);
  });
  const auto side_b = map_chunks(samples_b.rows(), policy, [&](std::size_t b, std::size_t e) {
    return eval_cycle(g_net, f_net, samples_b.slice_rows(b, e), scale);
  });
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& p : side_a) {
    sum_a += p.sum_sq;
    out.grad_f += p.grad_first;
    out.grad_g += p.grad_second;
  }
  for (const auto& p : side_b) {
    sum_b += p.sum_sq;
    out.grad_g += p.grad_first;
    out.grad_f += p.grad_second;
  }
  out.value = scale * (sum_a + sum_b);
  require_finite(out.value, "loss_cycle");
  require_finite(out.grad_f, "loss_cycle");
  require_finite(out.grad_g, "loss_cycle");
  return out;
}

double wass_estimate(const MlpParams& field, const Matrix& samples, const CostModel& cost) {
  if (samples.rows() == 0) throw ArgumentError("wass_estimate: no samples");
  return cost.mean_lagrangian(velocity(field, samples));
}

double wass_estimate(const ComposedField& field, const Matrix& samples, const CostModel& cost) {
  if (samples.rows() == 0) throw ArgumentError("wass_estimate: no samples");
  return cost.mean_lagrangian(field(samples));
}

}  // namespace wgeo
