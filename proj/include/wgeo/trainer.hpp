#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wgeo/cost.hpp"
#include "wgeo/diffcore/adam.hpp"
#include "wgeo/geoflow.hpp"
#include "wgeo/measures.hpp"
#include "wgeo/objective.hpp"

namespace wgeo {

struct TrainConfig {
  std::size_t dim = 2;
  CostModel cost;
  NetworkShape network;
  double lr = 1e-4;
  std::size_t interior_batch = 2000;  // N
  std::size_t boundary_batch = 0;     // M; 0 means N
  std::size_t cycle_batch = 0;        // K; 0 means N
  std::size_t inner_phi_steps = 5;
  std::size_t outer_iters = 20000;
  std::size_t min_iters = 500;
  double lambda = 1.0;
  /// Absolute stopping threshold. Unset: relative_epsilon * max(w_ab, w_ba, 1e-6).
  std::optional<double> epsilon;
  double relative_epsilon = 0.01;
  std::uint64_t seed = 0;
  bool precondition = false;
  std::size_t precondition_samples = 10000;
  bool deterministic = true;
  std::size_t workers = 1;
  std::size_t chunk_rows = 256;
  double sample_noise_std = 0.0;
  std::size_t checkpoint_every = 1000;
  double max_seconds = 0.0;  // wall-clock cap on the loop; 0 means none
  AdamConfig adam;

  std::size_t boundary_size() const { return boundary_batch ? boundary_batch : interior_batch; }
  std::size_t cycle_size() const { return cycle_batch ? cycle_batch : interior_batch; }
  ExecutionPolicy policy() const { return {workers, chunk_rows}; }
  /// Throws ArgumentError on counts < 1, lr <= 0, epsilon <= 0 and similar.
  void validate() const;
};

struct LossReport {
  std::size_t iteration = 0;
  double l_ab = 0.0;
  double l_ba = 0.0;
  double k_reg = 0.0;
  double w_ab = 0.0;
  double w_ba = 0.0;
  double hjb_residual_mean = 0.0;
};

struct TrainHistory {
  std::vector<LossReport> reports;  // one per completed outer iteration
  std::vector<double> gap;          // |w_ab - w_ba| per iteration
  double wall_seconds = 0.0;

  std::string to_csv() const;
};

using Sampler = std::function<Matrix(std::size_t n, Rng& rng)>;
Sampler make_sampler(const MeasureSpec& spec);

struct TrainCallbacks {
  std::function<void(const LossReport&)> on_iteration;
  /// Receives the preconditioner-composed state every checkpoint_every iterations.
  std::function<void(const GeoState&, std::size_t iteration)> on_checkpoint;
};

struct TrainResult {
  GeoState state;  // precond set; forward_field()/backward_field() give the composed maps
  TrainHistory history;
  std::size_t iterations = 0;
  bool stopped_early = false;
  bool gap_reached = false;  // the stopping rule fired
  bool timed_out = false;
  bool aborted = false;
  std::string abort_reason;
  double final_w_ab = 0.0;  // with composed fields on fresh samples of rho_a / rho_b
  double final_w_ba = 0.0;
};

/// sigma = sqrt(tr Cov_b / tr Cov_a), mu = mean_b - sigma mean_a; sigma falls
/// back to 1 when the source has no spread.
Preconditioner fit_preconditioner(const Matrix& samples_a, const Matrix& samples_b);

/// True iff iteration >= min_iters and |w_ab - w_ba| < epsilon.
bool should_stop(double w_ab, double w_ba, double epsilon, std::size_t iteration,
                 std::size_t min_iters);

/// Alternating bidirectional saddle-point training. Non-finite losses abort
/// the run; the result then carries the last good state.
TrainResult train(const TrainConfig& config, const Sampler& sampler_a, const Sampler& sampler_b,
                  const TrainCallbacks& callbacks = {});

}  // namespace wgeo
