#include <chrono>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "criteria.hpp"
#include "wgeo/log.hpp"

using namespace wgeo::acceptance;

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  Context ctx;
  ctx.work_dir = "acceptance_runs";
  ctx.config_dir = fs::path(WGEO_SOURCE_DIR) / "configs";
  app.add_option("--criterion", only, "run one criterion (default: all)")->check(CLI::Range(0, 10));
  app.add_option("--work-dir", ctx.work_dir, "checkpoints and logs go here");
  app.add_option("--config-dir", ctx.config_dir);
  CLI11_PARSE(app, argc, argv);

  wgeo::log::init_from_env();
  fs::create_directories(ctx.work_dir);

  bool all_pass = true;
  for (const Criterion& c : all_criteria()) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = out.pass;
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      pass = false;
      out.detail += "; over the time budget";
    }
    all_pass = all_pass && pass;
    std::printf("%s criterion %d (%s) [%.1fs]: %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                out.detail.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
