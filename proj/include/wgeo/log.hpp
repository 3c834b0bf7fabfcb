#pragma once

#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace wgeo::log {

/// Reads WGEO_LOG (error|info|debug) once; unset means info.
void init_from_env();

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  if (spdlog::should_log(spdlog::level::debug))
    spdlog::debug("{}", fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  if (spdlog::should_log(spdlog::level::info))
    spdlog::info("{}", fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  if (spdlog::should_log(spdlog::level::warn))
    spdlog::warn("{}", fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  if (spdlog::should_log(spdlog::level::err))
    spdlog::error("{}", fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace wgeo::log
