#pragma once

#include <cstdint>

#include "wgeo/diffcore/mlp.hpp"

namespace wgeo {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class StepDirection { ascend, descend };

/// Moment accumulators shaped like the parameters they update.
struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step = 0;
  AdamConfig config;

  AdamState() = default;
  explicit AdamState(const MlpParams& like, AdamConfig cfg = {})
      : first_moment(like.zeros_like()), second_moment(like.zeros_like()), config(cfg) {}
};

/// One bias-corrected Adam update. Throws TrainingError, leaving params and
/// state untouched, when a gradient entry is not finite.
void adam_step(MlpParams& params, AdamState& state, const MlpParams& grads, double lr,
               StepDirection direction);

}  // namespace wgeo
