#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wgeo/diffcore/mlp.hpp"
#include "wgeo/errors.hpp"

using namespace wgeo;

namespace {

double naive_scalar(const MlpParams& p, const std::vector<double>& x) { return test::naive_forward(p, x)[0]; }

// Directional derivative of a scalar network by central differences in x.
double fd_directional(const MlpParams& p, std::vector<double> x, const std::vector<double>& u,
                      double h = 1e-5) {
  std::vector<double> up = x, down = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    up[i] += h * u[i];
    down[i] -= h * u[i];
  }
  return (naive_scalar(p, up) - naive_scalar(p, down)) / (2.0 * h);
}

}  // namespace

TEST_SUITE("mlp") {
  TEST_CASE("architecture layer chain") {
    const auto shapes = MlpArchitecture{3, 1, 48, 6}.layer_shapes();
    REQUIRE(shapes.size() == 7);
    CHECK(shapes.front() == LayerShape{3, 48});
    CHECK(shapes.back() == LayerShape{48, 1});
    CHECK(MlpArchitecture{2, 2, 8, 0}.layer_shapes().size() == 1);
    CHECK_THROWS_AS(MlpParams({LayerShape{2, 3}, LayerShape{4, 1}}), ShapeError);
  }

  TEST_CASE("forward matches the scalar-loop oracle") {
    Rng rng = make_rng(1);
    const MlpParams p = test::random_params({3, 2, 7, 3}, rng);
    const Matrix x = test::random_matrix(37, 3, rng);
    const Matrix y = mlp_forward(p, x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto want = test::naive_forward(p, {x.row(r).begin(), x.row(r).end()});
      CHECK(y(r, 0) == doctest::Approx(want[0]).epsilon(1e-12));
      CHECK(y(r, 1) == doctest::Approx(want[1]).epsilon(1e-12));
    }
    const auto single = mlp_forward(p, x.row(5));
    CHECK(single[0] == y(5, 0));
  }

  TEST_CASE("zero output layer gives zero everywhere") {
    Rng rng = make_rng(2);
    MlpParams p = MlpParams::glorot_uniform({2, 2, 16, 3}, rng);
    const std::size_t last = p.num_layers() - 1;
    for (double& v : p.weights(last)) v = 0.0;
    for (double& v : p.bias(last)) v = 0.0;
    const Matrix y = mlp_forward(p, test::random_matrix(10, 2, rng, 5.0));
    CHECK(test::all_zero(y.flat()));
  }

  TEST_CASE("glorot init is deterministic and bounded") {
    Rng a = make_rng(9), b = make_rng(9);
    const MlpParams pa = MlpParams::glorot_uniform({3, 1, 48, 6}, a);
    const MlpParams pb = MlpParams::glorot_uniform({3, 1, 48, 6}, b);
    CHECK(pa == pb);
    const double limit = std::sqrt(6.0 / (48 + 48));
    for (double w : pa.weights(2)) CHECK(std::abs(w) <= limit);
    for (double v : pa.bias(2)) CHECK(v == 0.0);
  }

  TEST_CASE("reverse mode matches finite differences") {
    Rng rng = make_rng(3);
    const MlpParams p = test::random_params({2, 3, 5, 2}, rng);
    const Matrix x = test::random_matrix(4, 2, rng);
    const Matrix cot = test::random_matrix(4, 3, rng);
    const Tape tape = mlp_record(p, x);
    const ReverseResult r = mlp_reverse(p, tape, cot);
    auto objective = [&](const MlpParams& q) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto y = test::naive_forward(q, {x.row(i).begin(), x.row(i).end()});
        for (std::size_t j = 0; j < 3; ++j) s += cot(i, j) * y[j];
      }
      return s;
    };
    CHECK(test::max_rel_err(r.param_grad.flat(), test::fd_gradient(p, objective)) < 1e-7);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t d = 0; d < 2; ++d) {
        std::vector<double> u(2, 0.0);
        u[d] = 1.0;
        std::vector<double> xi(x.row(i).begin(), x.row(i).end());
        double fd = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
          auto up = xi, down = xi;
          up[d] += 1e-5;
          down[d] -= 1e-5;
          fd += cot(i, j) * (test::naive_forward(p, up)[j] - test::naive_forward(p, down)[j]) / 2e-5;
        }
        CHECK(r.input_grad(i, d) == doctest::Approx(fd).epsilon(1e-7));
      }
  }

  TEST_CASE("jvp matches finite differences") {
    Rng rng = make_rng(4);
    const MlpParams p = test::random_params({3, 2, 6, 2}, rng);
    const Matrix x = test::random_matrix(5, 3, rng);
    const Matrix u = test::random_matrix(5, 3, rng);
    const JvpResult j = mlp_jvp(p, x, u);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::vector<double> up(x.row(i).begin(), x.row(i).end()), down = up;
      for (std::size_t d = 0; d < 3; ++d) {
        up[d] += 1e-5 * u(i, d);
        down[d] -= 1e-5 * u(i, d);
      }
      const auto yu = test::naive_forward(p, up), yd = test::naive_forward(p, down);
      for (std::size_t o = 0; o < 2; ++o)
        CHECK(j.output_tangent(i, o) == doctest::Approx((yu[o] - yd[o]) / 2e-5).epsilon(1e-7));
    }
  }

  TEST_CASE("grad of jvp: directional value, input gradient and parameter gradient") {
    Rng rng = make_rng(5);
    const MlpParams p = test::random_params({3, 1, 5, 3}, rng);
    const Matrix x = test::random_matrix(6, 3, rng);
    const Matrix u = test::random_matrix(6, 3, rng);
    const DirectionalGrad g = mlp_grad_of_jvp(p, x, u);

    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const std::vector<double> xi(x.row(i).begin(), x.row(i).end());
      const std::vector<double> ui(u.row(i).begin(), u.row(i).end());
      CHECK(g.directional[i] == doctest::Approx(fd_directional(p, xi, ui)).epsilon(1e-7));
      total += g.directional[i];
      // d s / d x with u frozen, by differencing the analytic directional derivative.
      for (std::size_t d = 0; d < 3; ++d) {
        auto up = x, down = x;
        up(i, d) += 1e-5;
        down(i, d) -= 1e-5;
        const double fd = (mlp_grad_of_jvp(p, up, u).directional[i] -
                           mlp_grad_of_jvp(p, down, u).directional[i]) / 2e-5;
        CHECK(g.input_grad(i, d) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
    auto summed = [&](const MlpParams& q) {
      double s = 0.0;
      for (double v : mlp_grad_of_jvp(q, x, u).directional) s += v;
      return s;
    };
    CHECK(test::max_rel_err(g.param_grad.flat(), test::fd_gradient(p, summed)) < 1e-6);
    (void)total;
  }

  TEST_CASE("directional seeds weight each row") {
    Rng rng = make_rng(6);
    const MlpParams p = test::random_params({2, 1, 4, 2}, rng);
    const Matrix x = test::random_matrix(3, 2, rng);
    const Matrix u = test::random_matrix(3, 2, rng);
    Tape tape = mlp_record(p, x);
    const std::vector<double> seed{2.0, 0.0, -1.0};
    const DirectionalGrad g = mlp_directional_grad(p, tape, u, seed);
    MlpParams want = p.zeros_like();
    for (std::size_t i = 0; i < 3; ++i) {
      MlpParams gi = mlp_grad_of_jvp(p, x.slice_rows(i, i + 1), u.slice_rows(i, i + 1)).param_grad;
      gi *= seed[i];
      want += gi;
    }
    CHECK(test::max_rel_err(g.param_grad.flat(), want.flat(), 1e-12) < 1e-12);
    const Matrix plain = mlp_grad_of_jvp(p, x, u).input_grad;
    for (std::size_t d = 0; d < 2; ++d) {
      CHECK(g.input_grad(0, d) == doctest::Approx(2.0 * plain(0, d)));
      CHECK(g.input_grad(1, d) == 0.0);
    }
  }

  TEST_CASE("scalar input gradient matches finite differences") {
    Rng rng = make_rng(7);
    const MlpParams p = test::random_params({4, 1, 6, 2}, rng);
    const Matrix x = test::random_matrix(3, 4, rng);
    Tape tape = mlp_record(p, x);
    const Matrix g = mlp_scalar_input_grad(p, tape);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t d = 0; d < 4; ++d) {
        std::vector<double> e(4, 0.0);
        e[d] = 1.0;
        CHECK(g(i, d) == doctest::Approx(fd_directional(p, {x.row(i).begin(), x.row(i).end()}, e))
                             .epsilon(1e-7));
      }
  }

  TEST_CASE("stale tapes and bad shapes are rejected") {
    Rng rng = make_rng(8);
    MlpParams p = test::random_params({2, 1, 3, 1}, rng);
    const Matrix x = test::random_matrix(2, 2, rng);
    Tape tape = mlp_record(p, x);
    p.flat()[0] += 1.0;
    CHECK_THROWS_AS(mlp_reverse(p, tape, Matrix(2, 1, 1.0)), UsageError);
    CHECK_THROWS_AS(mlp_forward(p, Matrix(2, 3)), ShapeError);
    const MlpParams q = test::random_params({2, 2, 3, 1}, rng);
    CHECK_THROWS_AS(mlp_grad_of_jvp(q, x, x), UsageError);
  }

  TEST_CASE("parameter arithmetic") {
    MlpParams a = MlpParams::zeros({2, 1, 3, 1});
    for (double& v : a.flat()) v = 1.0;
    MlpParams b = a;
    b *= 3.0;
    a += b;
    for (double v : a.flat()) CHECK(v == 4.0);
    CHECK(a.all_finite());
    a.flat()[2] = std::nan("");
    CHECK_FALSE(a.all_finite());
  }
}

TEST_SUITE("mlp") {
  // Phi(x) = tanh(x): one hidden unit with w = 1, b = 0 and output weight 1.
  MlpParams tanh_net() {
    MlpParams p({LayerShape{1, 1}, LayerShape{1, 1}});
    p.weights(0)[0] = 1.0;
    p.weights(1)[0] = 1.0;
    return p;
  }

  TEST_CASE("single tanh unit") {
    const MlpParams p = tanh_net();
    CHECK(mlp_forward(p, std::vector<double>{0.0})[0] == 0.0);
    const double big = mlp_forward(p, std::vector<double>{1e3})[0];
    CHECK(big == doctest::Approx(1.0));
    CHECK(std::isfinite(big));
    const auto r = mlp_reverse(p, std::vector<double>{0.0}, std::vector<double>{1.0});
    CHECK(r.input_grad(0, 0) == 1.0);
    const auto j = mlp_jvp(p, Matrix{{0.0}}, Matrix{{1.0}});
    CHECK(j.output_tangent(0, 0) == 1.0);
    const auto g = mlp_grad_of_jvp(p, Matrix{{0.0}}, Matrix{{1.0}});
    CHECK(g.directional[0] == 1.0);
    CHECK(g.input_grad(0, 0) == 0.0);
  }

  TEST_CASE("linear network gradients") {
    const Matrix w{{1, 2, 3}, {4, 5, 6}};
    const MlpParams p = test::affine_params(w, {0.5, -0.5});
    const std::vector<double> x{1, -1, 2}, c{2, 3};
    const auto r = mlp_reverse(p, x, c);
    CHECK(r.input_grad == Matrix{{14, 19, 24}});  // W^T c
    const auto gw = r.param_grad.weights(0);
    for (std::size_t o = 0; o < 2; ++o)
      for (std::size_t i = 0; i < 3; ++i) CHECK(gw[o * 3 + i] == c[o] * x[i]);

    const MlpParams phi = test::affine_params(Matrix{{1, 2, 3}}, {0.0});
    const Matrix u{{0.5, 0.25, -1}};
    const auto g = mlp_grad_of_jvp(phi, Matrix{{1, 1, 1}}, u);
    CHECK(g.directional[0] == doctest::Approx(0.5 + 0.5 - 3.0));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(g.param_grad.weights(0)[i] == u(0, i));
      CHECK(g.input_grad(0, i) == 0.0);
    }
  }

  TEST_CASE("jvp is linear in the tangent") {
    Rng rng = make_rng(10);
    const MlpParams p = test::random_params({3, 2, 8, 3}, rng);
    const Matrix x = test::random_matrix(4, 3, rng);
    const Matrix u = test::random_matrix(4, 3, rng), v = test::random_matrix(4, 3, rng);
    const Matrix ju = mlp_jvp(p, x, u).output_tangent, jv = mlp_jvp(p, x, v).output_tangent;
    CHECK(max_abs_diff(mlp_jvp(p, x, u + v).output_tangent, ju + jv) < 1e-12);
    CHECK(max_abs_diff(mlp_jvp(p, x, 2.5 * u).output_tangent, 2.5 * ju) < 1e-12);
    const Matrix zero(4, 3);
    CHECK(test::all_zero(mlp_jvp(p, x, zero).output_tangent.flat()));
  }

  TEST_CASE("reverse mode at h = 1e-4 meets the 1e-5 relative gate") {
    Rng rng = make_rng(11);
    const MlpParams p = test::random_params({2, 2, 48, 5}, rng, 0.2);
    const Matrix x = test::random_matrix(1, 2, rng);
    const Matrix cot{{0.7, -1.3}};
    const ReverseResult r = mlp_reverse(p, mlp_record(p, x), cot);
    auto objective = [&](const MlpParams& q) {
      const Matrix y = mlp_forward(q, x);
      return cot(0, 0) * y(0, 0) + cot(0, 1) * y(0, 1);
    };
    CHECK(test::max_rel_err(r.param_grad.flat(), test::fd_gradient(p, objective, 1e-4)) < 1e-5);
  }
}
