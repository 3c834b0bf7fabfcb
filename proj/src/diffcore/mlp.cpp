#include "wgeo/diffcore/mlp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "wgeo/errors.hpp"
#include "wgeo/simd/dispatch.hpp"

namespace wgeo {

namespace {

std::uint64_t next_revision() noexcept {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

// C = (acc ? C : 0) + A * B through the active kernel table.
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  simd::active_kernels().gemm(a.rows(), b.cols(), a.cols(), a.data(), a.cols(), b.data(),
                              b.cols(), c.data(), c.cols(), accumulate);
}

// Weight block of a layer viewed as a matrix (out x in).
Matrix weight_matrix(const MlpParams& p, std::size_t k) {
  const auto& s = p.shapes()[k];
  Matrix w(s.out, s.in);
  std::copy(p.weights(k).begin(), p.weights(k).end(), w.data());
  return w;
}

Matrix weight_transposed(const MlpParams& p, std::size_t k) {
  const auto& s = p.shapes()[k];
  Matrix wt(s.in, s.out);
  const auto w = p.weights(k);
  for (std::size_t o = 0; o < s.out; ++o)
    for (std::size_t i = 0; i < s.in; ++i) wt(i, o) = w[o * s.in + i];
  return wt;
}

// grad_W += lhs^T * rhs; lhs is batch x out, rhs batch x in.
void accumulate_outer(const Matrix& lhs, const Matrix& rhs, std::span<double> grad_w) {
  simd::active_kernels().gemm_tn(lhs.cols(), rhs.cols(), lhs.rows(), lhs.data(), lhs.cols(),
                                 rhs.data(), rhs.cols(), grad_w.data(), rhs.cols(), true);
}

void accumulate_column_sums(const Matrix& m, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c);
}

void check_input(const MlpParams& params, const Matrix& input, const char* what) {
  if (params.num_layers() == 0) throw ShapeError(std::string(what) + ": empty network");
  if (input.cols() != params.in_dim())
    throw ShapeError(std::string(what) + ": input has " + std::to_string(input.cols()) +
                     " columns, network expects " + std::to_string(params.in_dim()));
}

Matrix row_matrix(std::span<const double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

}  // namespace

struct TapeAccess {
  static void check_fresh(const MlpParams& params, const Tape& tape) {
    if (tape.act_.empty()) throw UsageError("tape has not been recorded");
    if (tape.revision_ != params.revision() || tape.shapes_ != params.shapes())
      throw UsageError("tape is stale: parameters changed since it was recorded");
  }
  static Tape& self(Tape& t) { return t; }
  static std::vector<Matrix>& act(Tape& t) { return t.act_; }
  static const std::vector<Matrix>& act(const Tape& t) { return t.act_; }
  static std::vector<Matrix>& act_dot(Tape& t) { return t.act_dot_; }
  static std::vector<Matrix>& pre_dot(Tape& t) { return t.pre_dot_; }
  static std::vector<Matrix>& adjoint(Tape& t) { return t.adjoint_; }
  static std::vector<Matrix>& act_adjoint(Tape& t) { return t.act_adjoint_; }
  static void stamp(Tape& t, const MlpParams& p) {
    t.revision_ = p.revision();
    t.shapes_ = p.shapes();
  }
};

// ----------------------------------------------------------------------------
// MlpArchitecture / MlpParams

std::vector<LayerShape> MlpArchitecture::layer_shapes() const {
  if (in_dim == 0 || out_dim == 0) throw ShapeError("network dimensions must be positive");
  if (n_hidden > 0 && hidden_width == 0) throw ShapeError("hidden width must be positive");
  std::vector<LayerShape> shapes;
  std::size_t prev = in_dim;
  for (std::size_t k = 0; k < n_hidden; ++k) {
    shapes.push_back({prev, hidden_width});
    prev = hidden_width;
  }
  shapes.push_back({prev, out_dim});
  return shapes;
}

MlpParams::MlpParams(std::vector<LayerShape> shapes) : shapes_(std::move(shapes)) {
  std::size_t offset = 0;
  for (std::size_t k = 0; k < shapes_.size(); ++k) {
    const auto& s = shapes_[k];
    if (s.in == 0 || s.out == 0) throw ShapeError("layer dimensions must be positive");
    if (k > 0 && s.in != shapes_[k - 1].out)
      throw ShapeError("layer " + std::to_string(k) + " input does not match previous output");
    offsets_.push_back(offset);
    offset += s.out * s.in + s.out;
  }
  data_.assign(offset, 0.0);
  revision_ = next_revision();
}

MlpParams::MlpParams(const MlpParams& other)
    : shapes_(other.shapes_), offsets_(other.offsets_), data_(other.data_),
      revision_(next_revision()) {}

MlpParams& MlpParams::operator=(const MlpParams& other) {
  if (this != &other) {
    shapes_ = other.shapes_;
    offsets_ = other.offsets_;
    data_ = other.data_;
    touch();
  }
  return *this;
}

MlpParams MlpParams::zeros(const MlpArchitecture& arch) { return MlpParams(arch.layer_shapes()); }

MlpParams MlpParams::glorot_uniform(const MlpArchitecture& arch, Rng& rng) {
  MlpParams p(arch.layer_shapes());
  for (std::size_t k = 0; k < p.num_layers(); ++k) {
    const auto& s = p.shapes_[k];
    const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : p.weights(k)) w = dist(rng);
  }
  return p;
}

std::span<const double> MlpParams::weights(std::size_t layer) const {
  const auto& s = shapes_.at(layer);
  return {data_.data() + offsets_[layer], s.out * s.in};
}

std::span<const double> MlpParams::bias(std::size_t layer) const {
  const auto& s = shapes_.at(layer);
  return {data_.data() + offsets_[layer] + s.out * s.in, s.out};
}

std::span<double> MlpParams::weights(std::size_t layer) {
  touch();
  const auto& s = shapes_.at(layer);
  return {data_.data() + offsets_[layer], s.out * s.in};
}

std::span<double> MlpParams::bias(std::size_t layer) {
  touch();
  const auto& s = shapes_.at(layer);
  return {data_.data() + offsets_[layer] + s.out * s.in, s.out};
}

std::span<double> MlpParams::flat() noexcept {
  touch();
  return data_;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  z.shapes_ = shapes_;
  z.offsets_ = offsets_;
  z.data_.assign(data_.size(), 0.0);
  z.revision_ = next_revision();
  return z;
}

bool MlpParams::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

MlpParams& MlpParams::operator+=(const MlpParams& other) {
  if (!same_shape(other)) throw ShapeError("parameter sum: shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  touch();
  return *this;
}

MlpParams& MlpParams::operator*=(double s) {
  for (double& v : data_) v *= s;
  touch();
  return *this;
}

void MlpParams::touch() noexcept { revision_ = next_revision(); }

const Matrix& Tape::output_tangent() const {
  if (act_dot_.empty()) throw UsageError("no tangent pass has run on this tape");
  return act_dot_.back();
}

// ----------------------------------------------------------------------------
// Passes

Tape mlp_record(const MlpParams& params, const Matrix& input) {
  check_input(params, input, "mlp_record");
  Tape tape;
  TapeAccess::stamp(tape, params);
  auto& act = TapeAccess::act(tape);
  act.reserve(params.num_layers() + 1);
  act.push_back(input);
  const std::size_t batch = input.rows();
  const std::size_t last = params.num_layers() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const auto& s = params.shapes()[k];
    Matrix pre(batch, s.out);
    const auto b = params.bias(k);
    for (std::size_t r = 0; r < batch; ++r) std::copy(b.begin(), b.end(), pre.row(r).begin());
    gemm(act.back(), weight_transposed(params, k), pre, true);
    if (k < last) simd::active_kernels().tanh(pre.size(), pre.data(), pre.data());
    act.push_back(std::move(pre));
  }
  return tape;
}

Matrix mlp_forward(const MlpParams& params, const Matrix& input) {
  Tape tape = mlp_record(params, input);
  return std::move(TapeAccess::act(tape).back());
}

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input) {
  const Matrix out = mlp_forward(params, row_matrix(input));
  return {out.flat().begin(), out.flat().end()};
}

ReverseResult mlp_reverse(const MlpParams& params, const Tape& tape, const Matrix& cotangent,
                          bool want_param_grad) {
  TapeAccess::check_fresh(params, tape);
  const auto& act = TapeAccess::act(tape);
  if (cotangent.rows() != tape.batch() || cotangent.cols() != params.out_dim())
    throw ShapeError("mlp_reverse: cotangent shape does not match the network output");

  ReverseResult result;
  if (want_param_grad) result.param_grad = params.zeros_like();
  Matrix adj = cotangent;  // d/d pre-activation of layer k
  for (std::size_t k = params.num_layers(); k-- > 0;) {
    if (want_param_grad) {
      accumulate_outer(adj, act[k], result.param_grad.weights(k));
      accumulate_column_sums(adj, result.param_grad.bias(k));
    }
    Matrix upstream(adj.rows(), params.shapes()[k].in);
    gemm(adj, weight_matrix(params, k), upstream, false);
    if (k > 0) {
      const Matrix& z = act[k];
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        const double zi = z.flat()[i];
        upstream.flat()[i] *= 1.0 - zi * zi;
      }
    }
    adj = std::move(upstream);
  }
  result.input_grad = std::move(adj);
  return result;
}

ReverseResult mlp_reverse(const MlpParams& params, std::span<const double> input,
                          std::span<const double> output_cotangent) {
  const Tape tape = mlp_record(params, row_matrix(input));
  return mlp_reverse(params, tape, row_matrix(output_cotangent));
}

const Matrix& mlp_tangent(const MlpParams& params, Tape& tape, const Matrix& tangent) {
  TapeAccess::check_fresh(params, tape);
  if (tangent.rows() != tape.batch() || tangent.cols() != params.in_dim())
    throw ShapeError("mlp_tangent: tangent shape does not match the input");
  const auto& act = TapeAccess::act(tape);
  auto& act_dot = TapeAccess::act_dot(tape);
  auto& pre_dot = TapeAccess::pre_dot(tape);
  act_dot.clear();
  pre_dot.clear();
  act_dot.push_back(tangent);
  const std::size_t last = params.num_layers() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    Matrix ad(tangent.rows(), params.shapes()[k].out);
    gemm(act_dot.back(), weight_transposed(params, k), ad, false);
    if (k < last) {
      const Matrix& z = act[k + 1];
      Matrix zd(ad.rows(), ad.cols());
      for (std::size_t i = 0; i < zd.size(); ++i) {
        const double zi = z.flat()[i];
        zd.flat()[i] = (1.0 - zi * zi) * ad.flat()[i];
      }
      pre_dot.push_back(std::move(ad));
      act_dot.push_back(std::move(zd));
    } else {
      pre_dot.push_back(ad);
      act_dot.push_back(std::move(ad));
    }
  }
  return act_dot.back();
}

JvpResult mlp_jvp(const MlpParams& params, const Matrix& input, const Matrix& tangent) {
  Tape tape = mlp_record(params, input);
  mlp_tangent(params, tape, tangent);
  return {tape.output(), tape.output_tangent()};
}

Matrix mlp_scalar_input_grad(const MlpParams& params, Tape& tape) {
  TapeAccess::check_fresh(params, tape);
  if (params.out_dim() != 1) throw UsageError("scalar input gradient needs a scalar-output network");
  const auto& act = TapeAccess::act(tape);
  auto& adjoint = TapeAccess::adjoint(tape);
  auto& act_adjoint = TapeAccess::act_adjoint(tape);
  const std::size_t layers = params.num_layers();
  adjoint.assign(layers, Matrix());
  act_adjoint.assign(layers + 1, Matrix());
  act_adjoint[layers] = Matrix(tape.batch(), 1, 1.0);
  Matrix adj(tape.batch(), 1, 1.0);
  for (std::size_t k = layers; k-- > 0;) {
    Matrix upstream(adj.rows(), params.shapes()[k].in);
    gemm(adj, weight_matrix(params, k), upstream, false);
    adjoint[k] = std::move(adj);
    act_adjoint[k] = upstream;
    if (k > 0) {
      const Matrix& z = act[k];
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        const double zi = z.flat()[i];
        upstream.flat()[i] *= 1.0 - zi * zi;
      }
    }
    adj = std::move(upstream);
  }
  return act_adjoint[0];
}

// Second reverse sweep over the tangent-augmented forward pass. For layer k
// (act[k] -> act[k+1]) with s the output tangent:
//   ds/d(pre_dot_k) = seed * adjoint_k
//   ds/d(pre_k)     = tanh'(pre_k) * ds/d(act[k+1]) + tanh''(pre_k) * pre_dot_k * seed * act_adjoint[k+1]
// The output layer is affine, so ds/d(pre) vanishes there.
DirectionalGrad mlp_directional_grad(const MlpParams& params, Tape& tape, const Matrix& tangent,
                                     std::span<const double> seed, bool want_param_grad) {
  if (params.out_dim() != 1)
    throw UsageError("directional gradient needs a scalar-output network");
  if (seed.size() != tape.batch()) throw ShapeError("seed length must equal the batch size");
  if (TapeAccess::adjoint(tape).size() != params.num_layers()) mlp_scalar_input_grad(params, tape);
  mlp_tangent(params, tape, tangent);

  const auto& act = TapeAccess::act(tape);
  const auto& act_dot = TapeAccess::act_dot(tape);
  const auto& pre_dot = TapeAccess::pre_dot(tape);
  const auto& adjoint = TapeAccess::adjoint(tape);
  const auto& act_adjoint = TapeAccess::act_adjoint(tape);
  const std::size_t batch = tape.batch();
  const std::size_t layers = params.num_layers();

  DirectionalGrad out;
  out.directional.assign(act_dot.back().flat().begin(), act_dot.back().flat().end());
  if (want_param_grad) out.param_grad = params.zeros_like();

  Matrix act_bar;  // ds/d act[k+1]; empty means zero
  for (std::size_t k = layers; k-- > 0;) {
    const std::size_t width = params.shapes()[k].out;
    Matrix tangent_bar = adjoint[k];
    for (std::size_t r = 0; r < batch; ++r)
      for (double& v : tangent_bar.row(r)) v *= seed[r];

    Matrix pre_bar(batch, width);
    const bool hidden = k + 1 < layers;
    if (hidden) {
      const Matrix& z = act[k + 1];
      const Matrix& zbar_dot = act_adjoint[k + 1];
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          const double zi = z(r, c);
          const double d1 = 1.0 - zi * zi;
          const double d2 = -2.0 * zi * d1;
          double v = d2 * pre_dot[k](r, c) * seed[r] * zbar_dot(r, c);
          if (!act_bar.empty()) v += d1 * act_bar(r, c);
          pre_bar(r, c) = v;
        }
      }
    }

    if (want_param_grad) {
      auto gw = out.param_grad.weights(k);
      if (hidden) {
        accumulate_outer(pre_bar, act[k], gw);
        accumulate_column_sums(pre_bar, out.param_grad.bias(k));
      }
      accumulate_outer(tangent_bar, act_dot[k], gw);
    }

    if (hidden || k == 0) {
      Matrix upstream(batch, params.shapes()[k].in);
      if (hidden) gemm(pre_bar, weight_matrix(params, k), upstream, false);
      act_bar = std::move(upstream);
    }
  }
  out.input_grad = std::move(act_bar);
  return out;
}

DirectionalGrad mlp_grad_of_jvp(const MlpParams& params, const Matrix& input,
                                const Matrix& tangent) {
  if (params.out_dim() != 1) throw UsageError("mlp_grad_of_jvp needs a scalar-output network");
  Tape tape = mlp_record(params, input);
  const std::vector<double> seed(input.rows(), 1.0);
  return mlp_directional_grad(params, tape, tangent, seed);
}

}  // namespace wgeo
