#pragma once

// Discrete saddle-point losses and their exact parameter gradients.
//
// For a potential phi(x, t) and a field F, with pushed points
// x_k = z_k + t_k F(z_k):
//
//   L(phi) = -(1/N) sum_k [d_t phi + H(grad_x phi)](x_k, t_k)
//            + (1/M) sum_k [phi(w_target_k, 1) - phi(w_source_k, 0)]
//
// Differentiating the residual r = d_t phi + H(grad_x phi) uses the
// directional derivative s = D_u phi with u = (grad H(grad_x phi), 1) held
// fixed at its current value. By the chain rule
//   d r / d omega = d s / d omega   and   d r / d x = d s / d x  (x block),
// so one forward-over-reverse pass gives both gradients exactly.

#include <vector>

#include "wgeo/cost.hpp"
#include "wgeo/diffcore/mlp.hpp"
#include "wgeo/geoflow.hpp"
#include "wgeo/parallel.hpp"

namespace wgeo {

/// Interior samples (z_k, t_k) with t_k in [0, 1].
struct InteriorBatch {
  Matrix z;
  std::vector<double> t;

  void validate() const;
};

/// Boundary samples: the potential is evaluated at (target, 1) and (source, 0).
struct BoundaryBatch {
  Matrix source;
  Matrix target;

  void validate() const;
};

/// Interior batch after pushing through a frozen field: rows are (x_k, t_k).
struct PushedInterior {
  Matrix points_time;
  std::vector<double> t;
};

PushedInterior push_interior(const MlpParams& field, const InteriorBatch& interior);

struct PhiLoss {
  double value = 0.0;
  double interior_term = 0.0;  // -(1/N) sum r_k
  double boundary_term = 0.0;
  double hjb_residual_mean = 0.0;  // (1/N) sum |r_k|
  MlpParams grad;                  // d value / d phi parameters
};

PhiLoss loss_phi(const MlpParams& phi, const PushedInterior& pushed, const BoundaryBatch& boundary,
                 const CostModel& cost, const ExecutionPolicy& policy = {});
PhiLoss loss_phi(const MlpParams& phi, const MlpParams& field, const InteriorBatch& interior,
                 const BoundaryBatch& boundary, const CostModel& cost,
                 const ExecutionPolicy& policy = {});

/// Gradient of L(phi) with respect to the field parameters, flowing through
/// x_k = z_k + t_k F(z_k). The boundary term does not depend on F.
MlpParams grad_field_from_phi_term(const MlpParams& phi, const MlpParams& field,
                                   const InteriorBatch& interior, const CostModel& cost,
                                   const ExecutionPolicy& policy = {});

struct CycleLoss {
  double value = 0.0;
  MlpParams grad_f;
  MlpParams grad_g;
};

/// lambda/K sum |G(a + F(a)) + F(a)|^2 + lambda/K sum |F(b + G(b)) + G(b)|^2.
CycleLoss loss_cycle(const MlpParams& f_net, const MlpParams& g_net, const Matrix& samples_a,
                     const Matrix& samples_b, double lambda, const ExecutionPolicy& policy = {});

/// Monte-Carlo estimate of the transport cost: mean of L(F(w)) over the samples.
double wass_estimate(const MlpParams& field, const Matrix& samples, const CostModel& cost);
double wass_estimate(const ComposedField& field, const Matrix& samples, const CostModel& cost);

}  // namespace wgeo
