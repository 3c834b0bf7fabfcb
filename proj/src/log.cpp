#include "wgeo/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace wgeo::log {

void init_from_env() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("wgeo");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("WGEO_LOG")) {
    const std::string_view v(env);
    if (v == "error") level = spdlog::level::err;
    else if (v == "debug") level = spdlog::level::debug;
    else if (v == "info") level = spdlog::level::info;
  }
  spdlog::set_level(level);
}

}  // namespace wgeo::log
