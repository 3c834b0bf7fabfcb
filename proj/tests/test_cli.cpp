#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "wgeo/cli/commands.hpp"
#include "wgeo/cli/plot.hpp"
#include "wgeo/io/checkpoint.hpp"
#include "wgeo/measures.hpp"

using namespace wgeo;
using namespace wgeo::cli;
namespace fs = std::filesystem;

namespace {

struct Capture {
  std::ostringstream out, err;
  Io io() { return Io{out, err}; }
};

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

// Checkpoint whose fields are the constants f and g.
fs::path constant_checkpoint(const fs::path& dir, const std::string& name, std::vector<double> f,
                             std::vector<double> g, MeasureSpec source, MeasureSpec target) {
  const std::size_t d = f.size();
  Checkpoint c;
  c.state = test::state_with_fields(d, test::constant_params({d, d, 4, 1}, f),
                                    test::constant_params({d, d, 4, 1}, g));
  c.meta.seed = 5;
  c.source = std::move(source);
  c.target = std::move(target);
  const fs::path p = dir / (name + ".json");
  save_checkpoint(p, c);
  return p;
}

GaussianSpec gaussian2(double mx, double my) { return {{mx, my}, Matrix::identity(2)}; }

const char* kTinyConfig = R"([net]
width = 8
field_hidden = 1
potential_hidden = 2

[train]
batch = 32
inner_phi_steps = 1
outer_iters = 4
checkpoint_every = 2
seed = 3

[source]
kind = "gaussian"
mean = [0, 0]
cov = [[1, 0], [0, 1]]

[target]
kind = "gaussian"
mean = [3, 0]
cov = [[1, 0], [0, 1]]
)";

int run_args(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("train writes a reloadable checkpoint and history") {
    const auto dir = test::temp_dir("cli_train");
    write_text(dir / "run.toml", kTinyConfig);
    Capture cap;
    CHECK(cmd_train(dir / "run.toml", dir / "model.json", {}, cap.io()) == kOk);
    CHECK(cap.out.str().find("iterations 4") != std::string::npos);
    const std::string text = read_file(dir / "model.json");
    const Checkpoint c = parse_checkpoint(text);
    CHECK(c.meta.iterations == 4);
    CHECK(c.meta.seed == 3);
    CHECK(serialize_checkpoint(c) == text);
    CHECK(parse_csv(read_file(dir / "model.json.history.csv").substr(
                        read_file(dir / "model.json.history.csv").find('\n') + 1))
              .size() == 4);

    Capture again;
    GlobalOptions opts;
    opts.seed = 3;
    CHECK(cmd_train(dir / "run.toml", dir / "model2.json", opts, again.io()) == kOk);
    CHECK(read_file(dir / "model2.json") == text);
  }

  TEST_CASE("train rejects unknown keys") {
    const auto dir = test::temp_dir("cli_badkey");
    std::string cfg = kTinyConfig;
    cfg.insert(cfg.find("[train]\n") + 8, "foo = 1\n");
    write_text(dir / "run.toml", cfg);
    Capture cap;
    CHECK(cmd_train(dir / "run.toml", dir / "model.json", {}, cap.io()) == kUsage);
    CHECK(cap.err.str().find("train.foo") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "model.json"));
    CHECK(cmd_train(dir / "missing.toml", dir / "model.json", {}, cap.io()) != kOk);
  }

  TEST_CASE("infinite epsilon stops at min_iters") {
    const auto dir = test::temp_dir("cli_eps");
    std::string cfg = kTinyConfig;
    cfg.replace(cfg.find("outer_iters = 4"), 15, "outer_iters = 50\nepsilon = inf\nmin_iters = 3");
    write_text(dir / "run.toml", cfg);
    Capture cap;
    CHECK(cmd_train(dir / "run.toml", dir / "m.json", {}, cap.io()) == kOk);
    CHECK(load_checkpoint(dir / "m.json").meta.iterations == 3);
    CHECK(cap.out.str().find("stop gap\n") != std::string::npos);

    Capture capped;
    GlobalOptions opts;
    opts.max_seconds = 1e-9;
    CHECK(cmd_train(dir / "run.toml", dir / "c.json", opts, capped.io()) == kOk);
    CHECK(load_checkpoint(dir / "c.json").meta.iterations == 1);
    CHECK(capped.out.str().find("stop time_limit\n") != std::string::npos);
  }

  TEST_CASE("geodesic snapshots") {
    const auto dir = test::temp_dir("cli_geo");
    const auto ckpt = constant_checkpoint(dir, "c1", {3, 0}, {-3, 0}, gaussian2(0, 0), gaussian2(3, 0));
    Capture cap;
    CHECK(cmd_geodesic(ckpt, 400, 2, Direction::ab, dir / "two", {}, std::nullopt, cap.io()) == kOk);
    CHECK(fs::exists(dir / "two" / "geo_ab_t0.csv"));
    CHECK(fs::exists(dir / "two" / "geo_ab_t1.csv"));
    CHECK_FALSE(fs::exists(dir / "two" / "geo_ab_t2.csv"));
    Rng rng = make_rng(5, kGeodesicStream);
    const Matrix source = MeasureSampler(gaussian2(0, 0)).sample(400, rng);
    CHECK(load_csv(dir / "two" / "geo_ab_t0.csv").points() == source);

    CHECK(cmd_geodesic(ckpt, 4000, 11, Direction::ab, dir / "eleven", {}, std::nullopt, cap.io()) == kOk);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "eleven")) files += e.is_regular_file();
    CHECK(files == 11);
    const auto mid = column_means(load_csv(dir / "eleven" / "geo_ab_t5.csv").points());
    CHECK(std::abs(mid[0] - 1.5) < 3.0 * 3.0 / std::sqrt(4000.0));
    CHECK(std::abs(mid[1]) < 3.0 * 3.0 / std::sqrt(4000.0));

    CHECK(cmd_geodesic(ckpt, 10, 3, Direction::ba, dir / "ba", {}, std::nullopt, cap.io()) == kOk);
    CHECK(fs::exists(dir / "ba" / "geo_ba_t2.csv"));

    write_text(dir / "broken.json", "{\"format\": 1");
    CHECK(cmd_geodesic(dir / "broken.json", 10, 3, Direction::ab, dir / "x", {}, std::nullopt,
                       cap.io()) == kBadCheckpoint);
    CHECK(cmd_geodesic(dir / "nope.json", 10, 3, Direction::ab, dir / "x", {}, std::nullopt,
                       cap.io()) == kBadCheckpoint);
    CHECK_FALSE(fs::exists(dir / "x"));
  }

  TEST_CASE("map") {
    const auto dir = test::temp_dir("cli_map");
    write_text(dir / "in.csv", "1,2\n-3.5,0.25\n");
    const auto zero = constant_checkpoint(dir, "c2", {0, 0}, {0, 0}, gaussian2(0, 0), gaussian2(0, 0));
    Capture cap;
    CHECK(cmd_map(zero, dir / "in.csv", Direction::ab, dir / "out.csv", cap.io()) == kOk);
    CHECK(load_csv(dir / "out.csv").points() == Matrix{{1, 2}, {-3.5, 0.25}});
    const auto shift = constant_checkpoint(dir, "c3", {3, -1}, {-3, 1}, gaussian2(0, 0), gaussian2(3, -1));
    CHECK(cmd_map(shift, dir / "in.csv", Direction::ab, dir / "out.csv", cap.io()) == kOk);
    CHECK(load_csv(dir / "out.csv").points() == Matrix{{4, 1}, {-0.5, -0.75}});
    CHECK(cmd_map(shift, dir / "in.csv", Direction::ba, dir / "back.csv", cap.io()) == kOk);
    CHECK(load_csv(dir / "back.csv").points() == Matrix{{-2, 3}, {-6.5, 1.25}});

    write_text(dir / "bad.csv", "1,2\n3\n");
    CHECK(cmd_map(shift, dir / "bad.csv", Direction::ab, dir / "bad_out.csv", cap.io()) == kDataError);
    CHECK_FALSE(fs::exists(dir / "bad_out.csv"));
    write_text(dir / "three.csv", "1,2,3\n");
    CHECK(cmd_map(shift, dir / "three.csv", Direction::ab, dir / "bad_out.csv", cap.io()) == kUsage);
  }

  TEST_CASE("transfer") {
    const auto dir = test::temp_dir("cli_transfer");
    const GaussianSpec g3{{0, 0, 0}, Matrix::identity(3)};
    Rng rng = make_rng(2);
    std::uniform_int_distribution<int> byte(0, 255);
    std::string img = "P6\n4 3\n255\n";
    for (int i = 0; i < 36; ++i) img += static_cast<char>(byte(rng));
    write_text(dir / "in.ppm", img);

    const auto zero = constant_checkpoint(dir, "c4", {0, 0, 0}, {0, 0, 0}, g3, g3);
    Capture cap;
    CHECK(cmd_transfer(zero, dir / "in.ppm", Direction::ab, dir / "out.ppm", cap.io()) == kOk);
    CHECK(read_file(dir / "out.ppm") == img);

    write_text(dir / "black.ppm", "P6\n2 2\n255\n" + std::string(12, '\0'));
    const auto red = constant_checkpoint(dir, "c5", {0.2, 0, 0}, {-0.2, 0, 0}, g3, g3);
    CHECK(cmd_transfer(red, dir / "black.ppm", Direction::ab, dir / "red.ppm", cap.io()) == kOk);
    const Image out = load_ppm_palette(dir / "red.ppm");
    CHECK(encode_ppm(out.pixels.points(), 2, 2).substr(11) == std::string("\x33\0\0\x33\0\0\x33\0\0\x33\0\0", 12));

    const auto flat = constant_checkpoint(dir, "c6", {0, 0}, {0, 0}, gaussian2(0, 0), gaussian2(0, 0));
    CHECK(cmd_transfer(flat, dir / "black.ppm", Direction::ab, dir / "x.ppm", cap.io()) == kUsage);
    write_text(dir / "p3.ppm", "P3\n1 1\n255\n0 0 0\n");
    CHECK(cmd_transfer(red, dir / "p3.ppm", Direction::ab, dir / "x.ppm", cap.io()) == kDataError);
    CHECK_FALSE(fs::exists(dir / "x.ppm"));
  }

  TEST_CASE("distance and eval on an exact translation") {
    const auto dir = test::temp_dir("cli_eval");
    const auto ckpt = constant_checkpoint(dir, "c7", {3, 0}, {-3, 0}, gaussian2(0, 0), gaussian2(3, 0));
    Capture d;
    CHECK(cmd_distance(ckpt, 100, {}, d.io()) == kOk);
    CHECK(d.out.str() == "w_ab 4.5\nw_ba 4.5\ngap 0\n");

    Capture g;
    CHECK(cmd_eval(ckpt, {}, {}, g.io()) == kOk);
    CHECK(g.out.str().find("oracle_w 4.5\n") != std::string::npos);
    CHECK(g.out.str().find("rel_error_w_ab 0\n") != std::string::npos);
    const std::string text = g.out.str();
    const auto at = text.find("field_l2_sq_error ");
    REQUIRE(at != std::string::npos);
    CHECK(std::stod(text.substr(at + 18)) < 1e-20);

    Capture disc;
    EvalOptions opts;
    opts.oracle = EvalOptions::Oracle::discrete;
    opts.n_points = 32;
    CHECK(cmd_eval(ckpt, opts, {}, disc.io()) == kOk);
    CHECK(disc.out.str().find("midpoint_rel_discrepancy") != std::string::npos);

    const auto mixed = constant_checkpoint(
        dir, "c9", {0, 0}, {0, 0}, gaussian2(0, 0),
        MixtureSpec{{1.0}, {gaussian2(1, 1)}});
    Capture bad;
    CHECK(cmd_eval(mixed, {}, {}, bad.io()) == kUsage);
  }

  TEST_CASE("oracle-ot") {
    const auto dir = test::temp_dir("cli_oracle");
    write_text(dir / "a.csv", "0,0\n1,0\n");
    write_text(dir / "b.csv", "0,1\n1,1\n");
    Capture cap;
    CHECK(cmd_oracle_ot(dir / "a.csv", dir / "b.csv", 2.0, 1.0, dir / "plan.csv", cap.io()) == kOk);
    CHECK(cap.out.str() == "cost 0.5\n");
    CHECK(read_file(dir / "plan.csv") == "0,0\n1,1\n");

    write_text(dir / "c.csv", "2,0\n0,0\n");
    write_text(dir / "d.csv", "0,0\n2,0\n");
    Capture cross;
    CHECK(cmd_oracle_ot(dir / "c.csv", dir / "d.csv", 2.0, 1.0, dir / "plan2.csv", cross.io()) == kOk);
    CHECK(cross.out.str() == "cost 0\n");
    CHECK(read_file(dir / "plan2.csv") == "0,1\n1,0\n");

    write_text(dir / "e.csv", "0,0\n");
    CHECK(cmd_oracle_ot(dir / "a.csv", dir / "e.csv", 2.0, 1.0, dir / "plan3.csv", cap.io()) == kUsage);
    CHECK_FALSE(fs::exists(dir / "plan3.csv"));
  }

  TEST_CASE("plot-scatter") {
    const Matrix pts{{0, 0}, {1, 1}, {0.5, 0.25}};
    const Matrix px = rasterize_scatter(pts);
    REQUIRE(px.rows() == kScatterCanvas * kScatterCanvas);
    std::size_t black = 0;
    for (std::size_t i = 0; i < px.rows(); ++i) black += px(i, 0) == 0.0;
    CHECK(black == 3);
    // The corner points land symmetrically inside the margin.
    const std::size_t s = kScatterCanvas;
    auto at = [&](std::size_t row, std::size_t col) { return px(row * s + col, 0); };
    const std::size_t inset = static_cast<std::size_t>(std::lround((0.5 - 0.5 / 1.05) * (s - 1)));
    CHECK(at(s - 1 - inset, inset) == 0.0);
    CHECK(at(inset, s - 1 - inset) == 0.0);

    const auto dir = test::temp_dir("cli_plot");
    write_text(dir / "c.csv", "0,0\n1,1\n0.5,0.25\n");
    Capture cap;
    CHECK(cmd_plot_scatter(dir / "c.csv", dir / "c.ppm", cap.io()) == kOk);
    const Image img = load_ppm_palette(dir / "c.ppm");
    CHECK(img.width == 512);
    CHECK(img.pixels.points() == px);
  }

  TEST_CASE("command line") {
    const auto dir = test::temp_dir("cli_run");
    CHECK(run_args({"wgeo"}) == kUsage);
    CHECK(run_args({"wgeo", "frobnicate"}) == kUsage);
    CHECK(run_args({"wgeo", "map", "x.json"}) == kUsage);
    CHECK(run_args({"wgeo", "--workers", "0", "distance", "x.json"}) == kUsage);
    const auto ckpt = constant_checkpoint(dir, "c8", {1, 0}, {-1, 0}, gaussian2(0, 0), gaussian2(1, 0));
    CHECK(run_args({"wgeo", "--seed", "9", "geodesic", ckpt.string(), "-n", "5", "--steps", "3",
                    "-o", (dir / "g").string()}) == kOk);
    Rng rng = make_rng(9, kGeodesicStream);
    CHECK(load_csv(dir / "g" / "geo_ab_t0.csv").points() ==
          MeasureSampler(gaussian2(0, 0)).sample(5, rng));
    CHECK(run_args({"wgeo", "geodesic", ckpt.string(), "-d", "sideways", "-o", (dir / "h").string()}) ==
          kUsage);
  }
}
