#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "support.hpp"
#include "wgeo/errors.hpp"
#include "wgeo/trainer.hpp"

using namespace wgeo;

namespace {

Sampler gaussian(std::vector<double> mean, double scale = 1.0) {
  return [mean, scale](std::size_t n, Rng& rng) {
    Matrix m = test::random_matrix(n, mean.size(), rng, scale);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < mean.size(); ++c) m(r, c) += mean[c];
    return m;
  };
}

TrainConfig small_config() {
  TrainConfig c;
  c.dim = 2;
  c.network = {8, 2, 2};
  c.interior_batch = 64;
  c.inner_phi_steps = 2;
  c.outer_iters = 20;
  c.min_iters = 1000;
  c.seed = 11;
  c.chunk_rows = 16;
  return c;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("should_stop") {
    CHECK(should_stop(1.0, 1.0, 0.1, 100, 10));
    CHECK_FALSE(should_stop(1.0, 2.0, 0.1, 100, 10));
    CHECK_FALSE(should_stop(1.0, 1.0, 0.1, 5, 10));
    CHECK(should_stop(1.0, 1.05, 0.1, 10, 10));
    CHECK(should_stop(0.0, 5.0, std::numeric_limits<double>::infinity(), 1, 1));
  }

  TEST_CASE("fit_preconditioner") {
    Rng rng = make_rng(1);
    const Matrix a = gaussian({0, 0})(10000, rng);
    const Matrix b = gaussian({5, 5}, 2.0)(10000, rng);
    const Preconditioner p = fit_preconditioner(a, b);
    // Moment rule on the true moments: sigma = sqrt(8 / 2) = 2, mu = (5, 5).
    CHECK(p.sigma() == doctest::Approx(2.0).epsilon(0.05));
    CHECK(p.mu()[0] == doctest::Approx(5.0).epsilon(0.05));
    CHECK(p.mu()[1] == doctest::Approx(5.0).epsilon(0.05));

    const Preconditioner same = fit_preconditioner(a, a);
    CHECK(same.sigma() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(same.mu()[0]) < 1e-12);

    const Matrix flat(5, 2, 1.0);
    CHECK(fit_preconditioner(flat, b).sigma() == 1.0);
    CHECK_THROWS_AS(fit_preconditioner(Matrix(1, 2), b), ArgumentError);
  }

  TEST_CASE("infinite epsilon stops after the first iteration") {
    TrainConfig c = small_config();
    c.epsilon = std::numeric_limits<double>::infinity();
    c.min_iters = 1;
    const TrainResult r = train(c, gaussian({0, 0}), gaussian({3, 0}));
    CHECK(r.iterations == 1);
    CHECK(r.stopped_early);
    CHECK(r.gap_reached);
    CHECK_FALSE(r.timed_out);
    CHECK(r.history.reports.size() == 1);
  }

  TEST_CASE("wall-clock cap ends the loop") {
    TrainConfig c = small_config();
    c.max_seconds = 1e-9;
    const TrainResult r = train(c, gaussian({0, 0}), gaussian({3, 0}));
    CHECK(r.iterations == 1);
    CHECK(r.timed_out);
    CHECK_FALSE(r.gap_reached);
    c.max_seconds = -1;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
  }

  TEST_CASE("history and callbacks") {
    TrainConfig c = small_config();
    c.checkpoint_every = 7;
    std::size_t seen = 0;
    std::vector<std::size_t> checkpoints;
    TrainCallbacks cb;
    cb.on_iteration = [&](const LossReport& r) { CHECK(r.iteration == ++seen); };
    cb.on_checkpoint = [&](const GeoState&, std::size_t it) { checkpoints.push_back(it); };
    const TrainResult r = train(c, gaussian({0, 0}), gaussian({3, 0}), cb);
    CHECK(r.iterations == 20);
    CHECK_FALSE(r.stopped_early);
    CHECK(seen == 20);
    CHECK(checkpoints == std::vector<std::size_t>{7, 14});
    REQUIRE(r.history.reports.size() == 20);
    CHECK(r.history.gap.size() == 20);
    for (const auto& rep : r.history.reports) {
      CHECK(rep.k_reg >= 0.0);
      CHECK(rep.w_ab >= 0.0);
      CHECK(rep.w_ba >= 0.0);
    }
    const std::string csv = r.history.to_csv();
    CHECK(csv.rfind("iteration,l_ab,l_ba,k_reg,w_ab,w_ba,hjb_residual_mean\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
  }

  TEST_CASE("deterministic runs are bit-identical across worker counts") {
    TrainConfig c = small_config();
    const TrainResult a = train(c, gaussian({0, 0}), gaussian({3, 0}));
    const TrainResult b = train(c, gaussian({0, 0}), gaussian({3, 0}));
    c.workers = 3;
    const TrainResult t = train(c, gaussian({0, 0}), gaussian({3, 0}));
    CHECK(a.state == b.state);
    CHECK(a.state == t.state);
    CHECK(a.final_w_ab == t.final_w_ab);
    c.seed = 12;
    CHECK_FALSE(train(c, gaussian({0, 0}), gaussian({3, 0})).state == a.state);
  }

  TEST_CASE("preconditioned state carries the fitted map") {
    TrainConfig c = small_config();
    c.precondition = true;
    c.precondition_samples = 2000;
    c.outer_iters = 3;
    const TrainResult r = train(c, gaussian({0, 0}), gaussian({5, 5}, 2.0));
    CHECK(r.state.precond.sigma() == doctest::Approx(2.0).epsilon(0.1));
    CHECK(r.state.precond.mu()[0] == doctest::Approx(5.0).epsilon(0.1));
    // The composed forward field differs from the raw network by P x - x.
    const Matrix x{{0.5, -0.25}};
    const Matrix raw = velocity(r.state.f_net, r.state.precond.apply(x));
    const Matrix composed = r.state.forward_field()(x);
    const Matrix px = r.state.precond.apply(x);
    CHECK(composed(0, 0) == doctest::Approx(raw(0, 0) + px(0, 0) - x(0, 0)).epsilon(1e-13));
  }

  TEST_CASE("identical measures train towards zero distance") {
    TrainConfig c = small_config();
    c.lr = 2e-3;
    c.outer_iters = 600;
    c.interior_batch = 128;
    const TrainResult r = train(c, gaussian({1, -1}), gaussian({1, -1}));
    CHECK(r.final_w_ab <= 0.05);
    CHECK(r.final_w_ba <= 0.05);
  }

  TEST_CASE("failures") {
    TrainConfig c = small_config();
    const Sampler wrong_dim = [](std::size_t n, Rng&) { return Matrix(n, 3); };
    CHECK_THROWS_AS(train(c, wrong_dim, gaussian({0, 0})), ArgumentError);

    std::size_t calls = 0;
    const Sampler poisoned = [&](std::size_t n, Rng& rng) {
      Matrix m = gaussian({0, 0})(n, rng);
      if (++calls > 12) m(0, 0) = std::numeric_limits<double>::quiet_NaN();
      return m;
    };
    c.outer_iters = 10;
    const TrainResult r = train(c, poisoned, gaussian({3, 0}));
    CHECK(r.aborted);
    CHECK_FALSE(r.abort_reason.empty());
    CHECK(r.iterations < 10);
    CHECK(r.state.f_net.all_finite());
    CHECK(r.state.phi_f.all_finite());

    c.lr = 0.0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = small_config();
    c.epsilon = -1.0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
  }
}
