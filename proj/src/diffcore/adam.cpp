#include "wgeo/diffcore/adam.hpp"

#include <cmath>
#include <string>

#include "wgeo/errors.hpp"

namespace wgeo {

void adam_step(MlpParams& params, AdamState& state, const MlpParams& grads, double lr,
               StepDirection direction) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment))
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  const auto g = grads.flat();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i]))
      throw TrainingError("adam_step: non-finite gradient entry " + std::to_string(i) + " (" +
                          std::to_string(g[i]) + ")");

  const auto& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const double sign = direction == StepDirection::ascend ? 1.0 : -1.0;

  auto p = params.flat();
  auto m = state.first_moment.flat();
  auto v = state.second_moment.flat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] += sign * lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace wgeo
