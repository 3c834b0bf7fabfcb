#include "wgeo/simd/dispatch.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "wgeo/errors.hpp"

namespace wgeo::simd {

namespace detail {
#ifndef WGEO_BUILD_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#ifndef WGEO_BUILD_AVX512
const KernelTable* avx512_kernels() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_supports(SimdLevel level) {
#if defined(__x86_64__) || defined(__i386__)
  switch (level) {
    case SimdLevel::scalar:
      return true;
    case SimdLevel::avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case SimdLevel::avx512:
      return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
  }
  return false;
#else
  return level == SimdLevel::scalar;
#endif
}

const KernelTable* compiled_table(SimdLevel level) {
  switch (level) {
    case SimdLevel::scalar:
      return detail::scalar_kernels();
    case SimdLevel::avx2:
      return detail::avx2_kernels();
    case SimdLevel::avx512:
      return detail::avx512_kernels();
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("WGEO_SIMD")) {
    auto level = parse_level(env);
    if (!level) throw ArgumentError(std::string("WGEO_SIMD: unknown level '") + env + "'");
    if (const auto* table = kernels_for(*level)) return table;
    throw ArgumentError(std::string("WGEO_SIMD: level '") + env + "' unavailable on this CPU");
  }
  return kernels_for(best_available_level());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable* kernels_for(SimdLevel level) {
  if (!cpu_supports(level)) return nullptr;
  return compiled_table(level);
}

std::vector<SimdLevel> available_levels() {
  std::vector<SimdLevel> out;
  for (auto level : {SimdLevel::scalar, SimdLevel::avx2, SimdLevel::avx512})
    if (kernels_for(level)) out.push_back(level);
  return out;
}

SimdLevel best_available_level() { return available_levels().back(); }

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

void select_kernels(SimdLevel level) {
  const auto* table = kernels_for(level);
  if (!table) throw ArgumentError("SIMD level " + std::string(to_string(level)) + " unavailable");
  active_slot().store(table, std::memory_order_release);
}

std::string_view to_string(SimdLevel level) {
  switch (level) {
    case SimdLevel::scalar:
      return "scalar";
    case SimdLevel::avx2:
      return "avx2";
    case SimdLevel::avx512:
      return "avx512";
  }
  return "unknown";
}

std::optional<SimdLevel> parse_level(std::string_view name) {
  if (name == "scalar") return SimdLevel::scalar;
  if (name == "avx2") return SimdLevel::avx2;
  if (name == "avx512") return SimdLevel::avx512;
  return std::nullopt;
}

}  // namespace wgeo::simd
