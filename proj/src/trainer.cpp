#include "wgeo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "wgeo/errors.hpp"
#include "wgeo/log.hpp"

namespace wgeo {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kPreconditionStream = 2;
constexpr std::uint64_t kFinalEstimateStream = 3;

Matrix draw(const Sampler& sampler, std::size_t n, std::size_t dim, double noise_std, Rng& rng) {
  Matrix m = sampler(n, rng);
  if (m.rows() != n || m.cols() != dim)
    throw ArgumentError("sampler returned " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                        std::to_string(dim));
  if (noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std);
    for (double& v : m.flat()) v += noise(rng);
  }
  return m;
}

std::vector<double> uniform_times(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(n);
  for (double& v : t) v = u(rng);
  return t;
}

}  // namespace

void TrainConfig::validate() const {
  if (dim == 0) throw ArgumentError("train.dim must be >= 1");
  if (interior_batch == 0) throw ArgumentError("train.batch must be >= 1");
  if (inner_phi_steps == 0) throw ArgumentError("train.inner_phi_steps must be >= 1");
  if (outer_iters == 0) throw ArgumentError("train.outer_iters must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("train.lr must be > 0");
  if (epsilon && !(*epsilon > 0.0)) throw ArgumentError("train.epsilon must be > 0");
  if (!(relative_epsilon > 0.0)) throw ArgumentError("train.relative_epsilon must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("train.lambda must be >= 0");
  if (!(sample_noise_std >= 0.0)) throw ArgumentError("train.sample_noise_std must be >= 0");
  if (!(max_seconds >= 0.0)) throw ArgumentError("train.max_seconds must be >= 0");
  if (workers == 0) throw ArgumentError("train.workers must be >= 1");
  if (chunk_rows == 0) throw ArgumentError("train.chunk_rows must be >= 1");
  if (precondition && precondition_samples < 2)
    throw ArgumentError("train.precondition_samples must be >= 2");
  if (network.width == 0) throw ArgumentError("net.width must be >= 1");
}

std::string TrainHistory::to_csv() const {
  std::string out = "iteration,l_ab,l_ba,k_reg,w_ab,w_ba,hjb_residual_mean\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iteration,
                  r.l_ab, r.l_ba, r.k_reg, r.w_ab, r.w_ba, r.hjb_residual_mean);
    out += buf;
  }
  return out;
}

Sampler make_sampler(const MeasureSpec& spec) {
  auto prepared = std::make_shared<MeasureSampler>(spec);
  return [prepared](std::size_t n, Rng& rng) { return prepared->sample(n, rng); };
}

Preconditioner fit_preconditioner(const Matrix& samples_a, const Matrix& samples_b) {
  if (samples_a.rows() < 2 || samples_b.rows() < 2)
    throw ArgumentError("fit_preconditioner: need at least two samples per side");
  if (samples_a.cols() != samples_b.cols())
    throw ArgumentError("fit_preconditioner: dimensions differ");
  const double spread_a = trace(sample_covariance(samples_a));
  const double spread_b = trace(sample_covariance(samples_b));
  double sigma = 1.0;
  if (spread_a > 0.0 && spread_b > 0.0) sigma = std::sqrt(spread_b / spread_a);
  const auto mean_a = column_means(samples_a);
  const auto mean_b = column_means(samples_b);
  std::vector<double> mu(mean_a.size());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = mean_b[i] - sigma * mean_a[i];
  return Preconditioner(sigma, std::move(mu));
}

bool should_stop(double w_ab, double w_ba, double epsilon, std::size_t iteration,
                 std::size_t min_iters) {
  return iteration >= min_iters && std::abs(w_ab - w_ba) < epsilon;
}

TrainResult train(const TrainConfig& config, const Sampler& sampler_a, const Sampler& sampler_b,
                  const TrainCallbacks& callbacks) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::size_t d = config.dim;
  const std::size_t n = config.interior_batch;
  const std::size_t m = config.boundary_size();
  const std::size_t k = config.cycle_size();
  const ExecutionPolicy policy = config.policy();
  const double noise = config.sample_noise_std;

  Rng init_rng = make_rng(config.seed, kInitStream);
  Rng rng = make_rng(config.seed, kSampleStream);

  GeoState state = GeoState::initialize(d, config.cost, config.network, init_rng);
  Preconditioner precond = Preconditioner::identity(d);
  if (config.precondition) {
    if (config.cost.alpha() != 2.0)
      log::warn("preconditioning is exact only for the quadratic cost (alpha = 2)");
    Rng fit_rng = make_rng(config.seed, kPreconditionStream);
    const Matrix fa = draw(sampler_a, config.precondition_samples, d, 0.0, fit_rng);
    const Matrix fb = draw(sampler_b, config.precondition_samples, d, 0.0, fit_rng);
    precond = fit_preconditioner(fa, fb);
    log::info("preconditioner sigma={:.6g}", precond.sigma());
  }
  // Training runs on P#rho_a -> rho_b with identity composition; the fitted
  // P is attached to the returned state.
  auto source = [&](std::size_t count) {
    return precond.apply(draw(sampler_a, count, d, noise, rng));
  };
  auto target = [&](std::size_t count) { return draw(sampler_b, count, d, noise, rng); };

  AdamState adam_phi_f(state.phi_f, config.adam), adam_phi_g(state.phi_g, config.adam);
  AdamState adam_f(state.f_net, config.adam), adam_g(state.g_net, config.adam);

  TrainResult result;
  GeoState last_good = state;
  auto attach = [&](GeoState s) {
    s.precond = precond;
    return s;
  };

  try {
    for (std::size_t iter = 1; iter <= config.outer_iters; ++iter) {
      InteriorBatch interior_a{source(n), uniform_times(n, rng)};
      InteriorBatch interior_b{target(n), uniform_times(n, rng)};
      const PushedInterior pushed_a = push_interior(state.f_net, interior_a);
      const PushedInterior pushed_b = push_interior(state.g_net, interior_b);
      const Matrix wa = source(m);
      const Matrix wb = target(m);
      const BoundaryBatch boundary_ab{wa, wb};
      const BoundaryBatch boundary_ba{wb, wa};

      PhiLoss loss_ab, loss_ba;
      for (std::size_t s = 0; s < config.inner_phi_steps; ++s) {
        loss_ab = loss_phi(state.phi_f, pushed_a, boundary_ab, config.cost, policy);
        loss_ba = loss_phi(state.phi_g, pushed_b, boundary_ba, config.cost, policy);
        adam_step(state.phi_f, adam_phi_f, loss_ab.grad, config.lr, StepDirection::ascend);
        adam_step(state.phi_g, adam_phi_g, loss_ba.grad, config.lr, StepDirection::ascend);
      }

      const Matrix xi_a = source(k);
      const Matrix xi_b = target(k);
      MlpParams grad_f =
          grad_field_from_phi_term(state.phi_f, state.f_net, interior_a, config.cost, policy);
      MlpParams grad_g =
          grad_field_from_phi_term(state.phi_g, state.g_net, interior_b, config.cost, policy);
      const CycleLoss cycle = loss_cycle(state.f_net, state.g_net, xi_a, xi_b, config.lambda, policy);
      grad_f += cycle.grad_f;
      grad_g += cycle.grad_g;
      adam_step(state.f_net, adam_f, grad_f, config.lr, StepDirection::descend);
      adam_step(state.g_net, adam_g, grad_g, config.lr, StepDirection::descend);

      LossReport report;
      report.iteration = iter;
      report.l_ab = loss_ab.value;
      report.l_ba = loss_ba.value;
      report.k_reg = cycle.value;
      report.w_ab = wass_estimate(state.f_net, wa, config.cost);
      report.w_ba = wass_estimate(state.g_net, wb, config.cost);
      report.hjb_residual_mean = 0.5 * (loss_ab.hjb_residual_mean + loss_ba.hjb_residual_mean);
      if (!std::isfinite(report.w_ab) || !std::isfinite(report.w_ba))
        throw TrainingError("non-finite transport estimate at iteration " + std::to_string(iter));

      result.history.reports.push_back(report);
      result.history.gap.push_back(std::abs(report.w_ab - report.w_ba));
      result.iterations = iter;
      last_good = state;
      if (callbacks.on_iteration) callbacks.on_iteration(report);
      if (callbacks.on_checkpoint && config.checkpoint_every &&
          iter % config.checkpoint_every == 0)
        callbacks.on_checkpoint(attach(state), iter);

      const double eps = config.epsilon.value_or(
          config.relative_epsilon * std::max({report.w_ab, report.w_ba, 1e-6}));
      if (should_stop(report.w_ab, report.w_ba, eps, iter, config.min_iters)) {
        result.stopped_early = iter < config.outer_iters;
        result.gap_reached = true;
        break;
      }
      if (config.max_seconds > 0.0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >=
              config.max_seconds) {
        result.timed_out = true;
        log::warn("wall-clock cap reached after {} iterations", iter);
        break;
      }
    }
  } catch (const TrainingError& e) {
    result.aborted = true;
    result.abort_reason = e.what();
    log::error("training aborted after {} iterations: {}", result.iterations, e.what());
  }

  result.state = attach(result.aborted ? last_good : state);
  Rng final_rng = make_rng(config.seed, kFinalEstimateStream);
  const Matrix fa = draw(sampler_a, m, d, 0.0, final_rng);
  const Matrix fb = draw(sampler_b, m, d, 0.0, final_rng);
  result.final_w_ab = wass_estimate(result.state.forward_field(), fa, config.cost);
  result.final_w_ba = wass_estimate(result.state.backward_field(), fb, config.cost);
  result.history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace wgeo
