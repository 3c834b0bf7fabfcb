#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wgeo/diffcore/adam.hpp"
#include "wgeo/errors.hpp"

using namespace wgeo;

TEST_SUITE("adam") {
  TEST_CASE("first step moves every parameter by lr in the gradient's direction") {
    // With bias correction the first update is lr * g / (|g| + eps).
    MlpParams p = MlpParams::zeros({1, 1, 2, 1});
    MlpParams g = p.zeros_like();
    for (std::size_t i = 0; i < g.size(); ++i) g.flat()[i] = (i % 2 ? -1.0 : 1.0) * (1.0 + i);
    AdamState s(p);
    adam_step(p, s, g, 1e-3, StepDirection::descend);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.flat()[i];
      CHECK(p.flat()[i] == doctest::Approx(-1e-3 * gi / (std::abs(gi) + 1e-8)).epsilon(1e-12));
    }
    MlpParams q = MlpParams::zeros({1, 1, 2, 1});
    AdamState sq(q);
    adam_step(q, sq, g, 1e-3, StepDirection::ascend);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(q.flat()[i] == -p.flat()[i]);
  }

  TEST_CASE("matches a hand-rolled recurrence over several steps") {
    MlpParams p = MlpParams::zeros({1, 1, 1, 0});  // one weight, one bias
    AdamState s(p);
    double m = 0.0, v = 0.0, x = 0.0;
    const double grads[] = {0.5, -0.25, 2.0, 0.0, 1.0};
    for (int t = 1; t <= 5; ++t) {
      MlpParams g = p.zeros_like();
      g.flat()[0] = grads[t - 1];
      adam_step(p, s, g, 0.1, StepDirection::descend);
      m = 0.9 * m + 0.1 * grads[t - 1];
      v = 0.999 * v + 0.001 * grads[t - 1] * grads[t - 1];
      x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
      CHECK(p.flat()[0] == doctest::Approx(x).epsilon(1e-14));
      CHECK(p.flat()[1] == 0.0);
    }
    CHECK(s.step == 5);
  }

  TEST_CASE("non-finite gradient leaves parameters and state untouched") {
    MlpParams p = MlpParams::zeros({1, 1, 2, 1});
    AdamState s(p);
    MlpParams g = p.zeros_like();
    g.flat()[0] = 1.0;
    adam_step(p, s, g, 0.01, StepDirection::descend);
    const MlpParams before = p;
    const AdamState state_before = s;
    g.flat()[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(adam_step(p, s, g, 0.01, StepDirection::descend), TrainingError);
    CHECK(p == before);
    CHECK(s.step == state_before.step);
    CHECK(s.first_moment == state_before.first_moment);
  }

  TEST_CASE("shape mismatch is rejected") {
    MlpParams p = MlpParams::zeros({1, 1, 2, 1});
    AdamState s(p);
    CHECK_THROWS_AS(adam_step(p, s, MlpParams::zeros({2, 1, 2, 1}), 0.01, StepDirection::descend),
                    ShapeError);
  }
}
