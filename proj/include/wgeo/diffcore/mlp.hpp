#pragma once

// Dense tanh networks with batched first-order reverse mode, forward-mode
// tangents, and the mixed second-order pass used by the Hamilton-Jacobi
// residual. Rows of every input matrix are independent samples.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wgeo/linalg.hpp"
#include "wgeo/random.hpp"

namespace wgeo {

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// in -> [hidden_width x n_hidden, tanh] -> out (identity). n_hidden = 0 is a single affine map.
struct MlpArchitecture {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  std::size_t hidden_width = 48;
  std::size_t n_hidden = 1;

  std::vector<LayerShape> layer_shapes() const;
};

/// Weights and biases of every layer in one flat buffer. Layer k stores its
/// out x in weight matrix row-major followed by its bias. Gradients and Adam
/// moments reuse this type.
class MlpParams {
 public:
  MlpParams() = default;
  /// Zero parameters for the given layer chain; throws ShapeError if shapes do not chain.
  explicit MlpParams(std::vector<LayerShape> shapes);
  MlpParams(const MlpParams& other);
  MlpParams& operator=(const MlpParams& other);
  MlpParams(MlpParams&&) noexcept = default;
  MlpParams& operator=(MlpParams&&) noexcept = default;

  static MlpParams zeros(const MlpArchitecture& arch);
  /// Glorot-uniform weights, zero biases.
  static MlpParams glorot_uniform(const MlpArchitecture& arch, Rng& rng);

  std::size_t num_layers() const noexcept { return shapes_.size(); }
  const std::vector<LayerShape>& shapes() const noexcept { return shapes_; }
  std::size_t in_dim() const noexcept { return shapes_.empty() ? 0 : shapes_.front().in; }
  std::size_t out_dim() const noexcept { return shapes_.empty() ? 0 : shapes_.back().out; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;
  std::span<const double> flat() const noexcept { return data_; }

  // Mutable views invalidate any Tape recorded against these parameters.
  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);
  std::span<double> flat() noexcept;

  MlpParams zeros_like() const;
  bool same_shape(const MlpParams& other) const noexcept { return shapes_ == other.shapes_; }
  bool all_finite() const noexcept;

  MlpParams& operator+=(const MlpParams& other);
  MlpParams& operator*=(double s);

  /// Changes whenever the values may have changed; tapes compare against it.
  std::uint64_t revision() const noexcept { return revision_; }

  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    return a.shapes_ == b.shapes_ && a.data_ == b.data_;
  }

 private:
  void touch() noexcept;

  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
  std::uint64_t revision_ = 0;
};

/// Cached activations of one batched forward pass, plus tangent and
/// first-order adjoint caches once those passes have run.
class Tape {
 public:
  std::size_t batch() const noexcept { return act_.empty() ? 0 : act_.front().rows(); }
  std::size_t depth() const noexcept { return act_.empty() ? 0 : act_.size() - 1; }
  const Matrix& input() const { return act_.front(); }
  const Matrix& output() const { return act_.back(); }
  bool has_tangent() const noexcept { return !act_dot_.empty(); }
  /// Jacobian-vector product of the last tangent pass.
  const Matrix& output_tangent() const;

 private:
  friend struct TapeAccess;

  std::uint64_t revision_ = 0;
  std::vector<LayerShape> shapes_;
  std::vector<Matrix> act_;      // act_[k] feeds layer k; act_.back() is the output
  std::vector<Matrix> act_dot_;  // tangents of act_
  std::vector<Matrix> pre_dot_;  // tangents of the pre-activations
  std::vector<Matrix> adjoint_;  // d output / d pre-activation of layer k (scalar output, seed 1)
  std::vector<Matrix> act_adjoint_;  // d output / d act_[k]
};

/// y = network(x) for every row of x.
Matrix mlp_forward(const MlpParams& params, const Matrix& input);
std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input);

/// Forward pass that keeps what the backward passes need.
Tape mlp_record(const MlpParams& params, const Matrix& input);

struct ReverseResult {
  Matrix input_grad;     // row i: d<cot_i, y_i>/dx_i
  MlpParams param_grad;  // sum over rows; empty when not requested
};

/// Reverse mode for sum_i <cotangent_i, y_i>. Throws UsageError when the tape
/// was recorded against different or since-modified parameters.
ReverseResult mlp_reverse(const MlpParams& params, const Tape& tape, const Matrix& output_cotangent,
                          bool want_param_grad = true);
ReverseResult mlp_reverse(const MlpParams& params, std::span<const double> input,
                          std::span<const double> output_cotangent);

struct JvpResult {
  Matrix output;
  Matrix output_tangent;
};

/// Forward-mode directional derivative J(x) u, row by row.
JvpResult mlp_jvp(const MlpParams& params, const Matrix& input, const Matrix& tangent);

/// Runs the tangent pass on a recorded tape; returns the output tangent.
const Matrix& mlp_tangent(const MlpParams& params, Tape& tape, const Matrix& tangent);

/// Gradient of a scalar-output network with respect to its input (seed 1 per
/// row). Leaves first-order adjoints on the tape for mlp_directional_grad.
Matrix mlp_scalar_input_grad(const MlpParams& params, Tape& tape);

struct DirectionalGrad {
  std::vector<double> directional;  // s_i = D_{u_i} phi(x_i)
  Matrix input_grad;                // row i: seed_i * d s_i / d x_i, u held fixed
  MlpParams param_grad;             // sum_i seed_i * d s_i / d params; empty when not requested
};

/// Forward-over-reverse pass for s_i = D_{u_i} phi(x_i) on a scalar network.
/// The tangent rows u_i are frozen coefficients: no gradient flows into them.
/// Requires mlp_scalar_input_grad to have run on the tape (runs it if not).
DirectionalGrad mlp_directional_grad(const MlpParams& params, Tape& tape, const Matrix& tangent,
                                     std::span<const double> seed, bool want_param_grad = true);

/// Convenience form: records the tape, seeds every row with 1.
DirectionalGrad mlp_grad_of_jvp(const MlpParams& params, const Matrix& input, const Matrix& tangent);

}  // namespace wgeo
