#pragma once

#include <filesystem>
#include <string>

#include "wgeo/measures.hpp"
#include "wgeo/trainer.hpp"

namespace wgeo {

/// A training run as read from a config file:
///
///   [cost]    alpha, beta
///   [net]     width, field_hidden, potential_hidden
///   [train]   dim, lr, batch, boundary_batch, cycle_batch, inner_phi_steps,
///             outer_iters, min_iters, lambda, epsilon, relative_epsilon, seed,
///             precondition, precondition_samples, deterministic, workers,
///             chunk_rows, sample_noise_std, checkpoint_every, max_seconds,
///             adam_beta1, adam_beta2, adam_epsilon
///   [source], [target]
///             kind = "gaussian"  with mean, cov
///             kind = "mixture"   with weights, means, covs
///             kind = "empirical" | "image"  with path
///
/// Values are numbers (inf allowed), quoted strings, booleans or bracketed
/// arrays, which may span lines. '#' starts a comment.
struct RunConfig {
  TrainConfig train;
  MeasureSpec source;
  MeasureSpec target;
};

/// Relative file paths in measure blocks are resolved against base_dir.
/// Throws ParseError naming the offending key or line.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace wgeo
