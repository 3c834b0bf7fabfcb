#include "wgeo/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wgeo/cli/plot.hpp"
#include "wgeo/errors.hpp"
#include "wgeo/io/checkpoint.hpp"
#include "wgeo/io/run_config.hpp"
#include "wgeo/log.hpp"
#include "wgeo/measures.hpp"
#include "wgeo/objective.hpp"
#include "wgeo/oracle.hpp"
#include "wgeo/trainer.hpp"

namespace wgeo::cli {

namespace {

// Carries an exit code out of a command body.
struct Failure : std::runtime_error {
  Failure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

template <typename Fn>
int guarded(Io io, Fn&& body) {
  try {
    return body();
  } catch (const Failure& e) {
    io.err << "error: " << e.what() << "\n";
    return e.code;
  } catch (const TrainingError& e) {
    io.err << "error: " << e.what() << "\n";
    return kTrainingAborted;
  } catch (const std::invalid_argument& e) {  // ArgumentError, ShapeError
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ParseError& e) {
    io.err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const FormatError& e) {
    io.err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

Checkpoint open_checkpoint(const fs::path& path) {
  try {
    return load_checkpoint(path);
  } catch (const IoError& e) {
    throw Failure(kBadCheckpoint, e.what());
  } catch (const FormatError& e) {
    throw Failure(kBadCheckpoint, path.string() + ": " + e.what());
  }
}

const MeasureSpec& recorded_measure(const Checkpoint& ckpt, Direction d) {
  const auto& spec = d == Direction::ab ? ckpt.source : ckpt.target;
  if (!spec)
    throw Failure(kBadCheckpoint, "checkpoint does not record its source and target measures");
  return *spec;
}

Matrix read_points(const fs::path& path) {
  try {
    return load_csv(path).points();
  } catch (const ParseError& e) {
    throw Failure(kDataError, path.string() + ": " + e.what());
  }
}

ComposedField field_for(const GeoState& s, Direction d) {
  return d == Direction::ab ? s.forward_field() : s.backward_field();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::uint64_t seed_of(const GlobalOptions& opts, const Checkpoint& ckpt) {
  return opts.seed.value_or(ckpt.meta.seed);
}

}  // namespace

Direction parse_direction(const std::string& s) {
  if (s == "ab") return Direction::ab;
  if (s == "ba") return Direction::ba;
  throw ArgumentError("direction must be 'ab' or 'ba', got '" + s + "'");
}

Io default_io() { return Io{std::cout, std::cerr}; }

int cmd_train(const fs::path& config_path, const fs::path& out_path, const GlobalOptions& opts,
              Io io) {
  return guarded(io, [&] {
    RunConfig cfg;
    try {
      cfg = load_run_config(config_path);
    } catch (const ParseError& e) {
      throw Failure(kUsage, config_path.string() + ": " + e.what());
    }
    TrainConfig& tc = cfg.train;
    if (opts.seed) tc.seed = *opts.seed;
    if (opts.workers) tc.workers = *opts.workers;
    if (opts.deterministic) tc.deterministic = *opts.deterministic;
    if (opts.max_seconds) tc.max_seconds = *opts.max_seconds;
    tc.validate();

    auto make_checkpoint = [&](const GeoState& state, std::size_t iters) {
      Checkpoint c;
      c.state = state;
      c.meta.iterations = iters;
      c.meta.seed = tc.seed;
      c.source = cfg.source;
      c.target = cfg.target;
      return c;
    };
    TrainCallbacks callbacks;
    callbacks.on_iteration = [](const LossReport& r) {
      if (r.iteration % 100 == 0)
        log::debug("iter {} w_ab={:.6g} w_ba={:.6g} k={:.3g} hjb={:.3g}", r.iteration, r.w_ab,
                   r.w_ba, r.k_reg, r.hjb_residual_mean);
    };
    callbacks.on_checkpoint = [&](const GeoState& state, std::size_t iter) {
      save_checkpoint(out_path, make_checkpoint(state, iter));
    };

    const TrainResult result =
        train(tc, make_sampler(cfg.source), make_sampler(cfg.target), callbacks);

    Checkpoint ckpt = make_checkpoint(result.state, result.iterations);
    ckpt.meta.final_w_ab = result.final_w_ab;
    ckpt.meta.final_w_ba = result.final_w_ba;
    ckpt.meta.aborted = result.aborted;
    save_checkpoint(out_path, ckpt);
    write_file_atomic(fs::path(out_path.string() + ".history.csv"), result.history.to_csv());

    if (result.aborted) {
      io.err << "error: training aborted: " << result.abort_reason
             << " (last good state saved to " << out_path.string() << ")\n";
      return static_cast<int>(kTrainingAborted);
    }
    const char* stop = result.timed_out ? "time_limit" : result.gap_reached ? "gap" : "max_iters";
    io.out << "iterations " << result.iterations << "\n"
           << "stop " << stop << "\n"
           << "w_ab " << fmt(result.final_w_ab) << "\n"
           << "w_ba " << fmt(result.final_w_ba) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_distance(const fs::path& ckpt_path, std::size_t n_samples, const GlobalOptions& opts,
                 Io io) {
  return guarded(io, [&] {
    if (n_samples == 0) throw ArgumentError("--samples must be >= 1");
    const Checkpoint ckpt = open_checkpoint(ckpt_path);
    Rng rng = make_rng(seed_of(opts, ckpt), 0);
    const Matrix a = MeasureSampler(recorded_measure(ckpt, Direction::ab)).sample(n_samples, rng);
    const Matrix b = MeasureSampler(recorded_measure(ckpt, Direction::ba)).sample(n_samples, rng);
    const double w_ab = wass_estimate(ckpt.state.forward_field(), a, ckpt.state.cost);
    const double w_ba = wass_estimate(ckpt.state.backward_field(), b, ckpt.state.cost);
    io.out << "w_ab " << fmt(w_ab) << "\n"
           << "w_ba " << fmt(w_ba) << "\n"
           << "gap " << fmt(std::abs(w_ab - w_ba)) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_geodesic(const fs::path& ckpt_path, std::size_t n_samples, std::size_t n_steps,
                 Direction direction, const fs::path& out_dir, const GlobalOptions& opts,
                 const std::optional<fs::path>& input, Io io) {
  return guarded(io, [&] {
    if (n_steps < 2) throw ArgumentError("--steps must be >= 2");
    const Checkpoint ckpt = open_checkpoint(ckpt_path);
    Matrix start;
    if (input) {
      start = read_points(*input);
    } else {
      if (n_samples == 0) throw ArgumentError("--samples must be >= 1");
      Rng rng = make_rng(seed_of(opts, ckpt), kGeodesicStream);
      start = MeasureSampler(recorded_measure(ckpt, direction)).sample(n_samples, rng);
    }
    if (start.cols() != ckpt.state.dim)
      throw ArgumentError("points have dimension " + std::to_string(start.cols()) +
                          ", checkpoint has " + std::to_string(ckpt.state.dim));
    const PointCloud cloud(start);
    const Matrix v = field_for(ckpt.state, direction)(cloud.points());
    std::vector<std::string> files;
    for (std::size_t k = 0; k < n_steps; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n_steps - 1);
      files.push_back(format_csv(push_with_velocity(cloud, v, t).points.points()));
    }
    fs::create_directories(out_dir);
    const char* tag = direction == Direction::ab ? "ab" : "ba";
    for (std::size_t k = 0; k < n_steps; ++k)
      write_file_atomic(out_dir / ("geo_" + std::string(tag) + "_t" + std::to_string(k) + ".csv"),
                        files[k]);
    io.out << "wrote " << n_steps << " snapshots to " << out_dir.string() << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_map(const fs::path& ckpt_path, const fs::path& input_csv, Direction direction,
            const fs::path& out_csv, Io io) {
  return guarded(io, [&] {
    const Checkpoint ckpt = open_checkpoint(ckpt_path);
    const Matrix x = read_points(input_csv);
    if (x.cols() != ckpt.state.dim)
      throw ArgumentError("input has dimension " + std::to_string(x.cols()) +
                          ", checkpoint has " + std::to_string(ckpt.state.dim));
    const PointCloud cloud(x);
    const auto moved = push_samples(field_for(ckpt.state, direction), cloud, 1.0);
    write_csv(out_csv, moved.points.points());
    return static_cast<int>(kOk);
  });
}

int cmd_transfer(const fs::path& ckpt_path, const fs::path& image, Direction direction,
                 const fs::path& out_ppm, Io io) {
  return guarded(io, [&] {
    const Checkpoint ckpt = open_checkpoint(ckpt_path);
    if (ckpt.state.dim != 3) throw ArgumentError("colour transfer needs a 3-dimensional checkpoint");
    Image img;
    try {
      img = load_ppm_palette(image);
    } catch (const FormatError& e) {
      throw Failure(kDataError, image.string() + ": " + e.what());
    }
    const PointCloud cloud(img.pixels);
    const auto moved = push_samples(field_for(ckpt.state, direction), cloud, 1.0);
    write_ppm(out_ppm, moved.points.points(), img.width, img.height);
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const fs::path& ckpt_path, const EvalOptions& eval, const GlobalOptions& opts,
             Io io) {
  return guarded(io, [&] {
    const Checkpoint ckpt = open_checkpoint(ckpt_path);
    const GeoState& s = ckpt.state;
    const MeasureSpec& src = recorded_measure(ckpt, Direction::ab);
    const MeasureSpec& dst = recorded_measure(ckpt, Direction::ba);
    Rng rng = make_rng(seed_of(opts, ckpt), 11);

    if (eval.oracle == EvalOptions::Oracle::gaussian) {
      const auto* ga = std::get_if<GaussianSpec>(&src);
      const auto* gb = std::get_if<GaussianSpec>(&dst);
      if (!ga || !gb) throw ArgumentError("gaussian oracle needs Gaussian source and target");
      if (eval.n_samples == 0) throw ArgumentError("--samples must be >= 1");
      const GaussianOtSolution sol = gaussian_w2(ga->mean, ga->cov, gb->mean, gb->cov);
      double oracle_w = 0.0;
      if (s.cost.alpha() == 2.0) {
        oracle_w = s.cost.beta() * sol.dynamic_cost;
      } else if (max_abs_diff(ga->cov, gb->cov) == 0.0) {
        // Equal covariances: the optimal map is the translation for any strictly convex cost.
        std::vector<double> m(ga->mean.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = gb->mean[i] - ga->mean[i];
        oracle_w = s.cost.lagrangian(m);
      } else {
        throw ArgumentError("gaussian oracle needs alpha = 2 unless the covariances are equal");
      }
      const Matrix a = MeasureSampler(src).sample(eval.n_samples, rng);
      const Matrix b = MeasureSampler(dst).sample(eval.n_samples, rng);
      const Matrix fa = s.forward_field()(a);
      double err2 = 0.0, ref2 = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto target = sol.apply(a.row(i));
        for (std::size_t k = 0; k < a.cols(); ++k) {
          const double disp = target[k] - a(i, k);
          err2 += (fa(i, k) - disp) * (fa(i, k) - disp);
          ref2 += disp * disp;
        }
      }
      const double n = static_cast<double>(a.rows());
      const double w_ab = s.cost.mean_lagrangian(fa);
      const double w_ba = wass_estimate(s.backward_field(), b, s.cost);
      io.out << "oracle_w " << fmt(oracle_w) << "\n"
             << "w_ab " << fmt(w_ab) << "\n"
             << "w_ba " << fmt(w_ba) << "\n"
             << "rel_error_w_ab " << fmt(std::abs(w_ab - oracle_w) / std::max(oracle_w, 1e-300)) << "\n"
             << "rel_error_w_ba " << fmt(std::abs(w_ba - oracle_w) / std::max(oracle_w, 1e-300)) << "\n"
             << "field_l2_sq_error " << fmt(err2 / n) << "\n"
             << "field_l2_rel_error " << fmt(ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2 / n))
             << "\n";
      return static_cast<int>(kOk);
    }

    if (eval.n_points < 1 || eval.n_points > kMaxDiscreteOtPoints)
      throw ArgumentError("--points must be between 1 and 4096");
    const Matrix a = MeasureSampler(src).sample(eval.n_points, rng);
    const Matrix b = MeasureSampler(dst).sample(eval.n_points, rng);
    const Assignment plan = exact_discrete_ot(a, b, s.cost);
    const Matrix oracle_mid = mccann_interpolate(a, b, plan, 0.5).points();
    const Matrix trained_mid = push_samples(s.forward_field(), PointCloud(a), 0.5).points.points();
    const double nn = mean_nearest_neighbor_distance(trained_mid, oracle_mid);
    const double disp = mean_displacement_norm(a, b, plan);
    const double w_ab = wass_estimate(s.forward_field(), a, s.cost);
    io.out << "oracle_cost " << fmt(plan.total_cost) << "\n"
           << "w_ab " << fmt(w_ab) << "\n"
           << "rel_error_w_ab " << fmt(std::abs(w_ab - plan.total_cost) / std::max(plan.total_cost, 1e-300))
           << "\n"
           << "midpoint_nn_distance " << fmt(nn) << "\n"
           << "oracle_displacement " << fmt(disp) << "\n"
           << "midpoint_rel_discrepancy " << fmt(disp > 0.0 ? nn / disp : nn) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_oracle_ot(const fs::path& a_csv, const fs::path& b_csv, double alpha, double beta,
                  const fs::path& out_csv, Io io) {
  return guarded(io, [&] {
    const CostModel cost(alpha, beta);
    const Matrix a = read_points(a_csv);
    const Matrix b = read_points(b_csv);
    const Assignment plan = exact_discrete_ot(a, b, cost);
    std::string rows;
    for (std::size_t i = 0; i < plan.perm.size(); ++i)
      rows += std::to_string(i) + "," + std::to_string(plan.perm[i]) + "\n";
    write_file_atomic(out_csv, rows);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", plan.total_cost);
    io.out << "cost " << buf << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_plot_scatter(const fs::path& csv, const fs::path& out_ppm, Io io) {
  return guarded(io, [&] {
    const Matrix points = read_points(csv);
    write_ppm(out_ppm, rasterize_scatter(points), kScatterCanvas, kScatterCanvas);
    return static_cast<int>(kOk);
  });
}

int run(int argc, char** argv) {
  log::init_from_env();
  CLI::App app{"Wasserstein geodesics by bidirectional saddle-point training"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions opts;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides config/checkpoint)");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* det_opt = app.add_flag("--deterministic,!--nondeterministic", "fixed-order reductions");

  fs::path ckpt, out, input, out_dir;
  std::string direction = "ab";
  std::size_t samples = 1000, steps = 11;

  auto* train = app.add_subcommand("train", "train a model from a config file");
  fs::path config;
  train->add_option("config", config, "run config")->required();
  train->add_option("-o,--out", out, "checkpoint path")->required();
  double max_seconds = 0.0;
  auto* max_seconds_opt =
      train->add_option("--max-seconds", max_seconds, "wall-clock cap on the training loop")
          ->check(CLI::NonNegativeNumber);

  auto* distance = app.add_subcommand("distance", "print transport cost estimates");
  distance->add_option("checkpoint", ckpt)->required();
  distance->add_option("-n,--samples", samples);

  auto* geodesic = app.add_subcommand("geodesic", "write pushed clouds along the geodesic");
  geodesic->add_option("checkpoint", ckpt)->required();
  geodesic->add_option("-n,--samples", samples);
  geodesic->add_option("--steps", steps);
  geodesic->add_option("-d,--direction", direction);
  geodesic->add_option("-o,--out-dir", out_dir)->required();
  auto* geo_input = geodesic->add_option("-i,--input", input, "start from these points instead of sampling");

  auto* map = app.add_subcommand("map", "apply the learned map to CSV rows");
  map->add_option("checkpoint", ckpt)->required();
  map->add_option("input", input)->required();
  map->add_option("-d,--direction", direction);
  map->add_option("-o,--out", out)->required();

  auto* transfer = app.add_subcommand("transfer", "recolour a PPM image with a 3-d checkpoint");
  transfer->add_option("checkpoint", ckpt)->required();
  transfer->add_option("image", input)->required();
  transfer->add_option("-d,--direction", direction);
  transfer->add_option("-o,--out", out)->required();

  auto* eval_cmd = app.add_subcommand("eval", "compare against an exact oracle");
  EvalOptions eval;
  std::string oracle = "gaussian";
  eval_cmd->add_option("checkpoint", ckpt)->required();
  eval_cmd->add_option("--oracle", oracle)->check(CLI::IsMember({"gaussian", "discrete"}));
  eval_cmd->add_option("-n,--samples", eval.n_samples);
  eval_cmd->add_option("--points", eval.n_points);

  auto* oracle_ot = app.add_subcommand("oracle-ot", "exact assignment between two CSV clouds");
  fs::path a_csv, b_csv;
  double alpha = 2.0, beta = 1.0;
  oracle_ot->add_option("a", a_csv)->required();
  oracle_ot->add_option("b", b_csv)->required();
  oracle_ot->add_option("--alpha", alpha);
  oracle_ot->add_option("--beta", beta);
  oracle_ot->add_option("-o,--out", out)->required();

  auto* plot = app.add_subcommand("plot-scatter", "rasterize a 2-d CSV cloud to a PPM");
  plot->add_option("csv", input)->required();
  plot->add_option("-o,--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(kUsage);
  }
  if (seed_opt->count()) opts.seed = seed;
  if (workers_opt->count()) opts.workers = workers;
  if (det_opt->count()) opts.deterministic = det_opt->as<bool>();
  if (max_seconds_opt->count()) opts.max_seconds = max_seconds;

  Direction dir;
  try {
    dir = parse_direction(direction);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  if (*train) return cmd_train(config, out, opts);
  if (*distance) return cmd_distance(ckpt, samples, opts);
  if (*geodesic)
    return cmd_geodesic(ckpt, samples, steps, dir, out_dir, opts,
                        geo_input->count() ? std::optional<fs::path>(input) : std::nullopt);
  if (*map) return cmd_map(ckpt, input, dir, out);
  if (*transfer) return cmd_transfer(ckpt, input, dir, out);
  if (*eval_cmd) {
    eval.oracle = oracle == "discrete" ? EvalOptions::Oracle::discrete : EvalOptions::Oracle::gaussian;
    return cmd_eval(ckpt, eval, opts);
  }
  if (*oracle_ot) return cmd_oracle_ot(a_csv, b_csv, alpha, beta, out);
  if (*plot) return cmd_plot_scatter(input, out);
  return kUsage;
}

}  // namespace wgeo::cli
