#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "wgeo/simd/kernels.hpp"

namespace wgeo::simd {

/// Highest level both compiled in and supported by the running CPU.
SimdLevel best_available_level();

/// Levels usable on this machine, scalar first.
std::vector<SimdLevel> available_levels();

/// Kernel table for a level, or nullptr when the level is unavailable.
const KernelTable* kernels_for(SimdLevel level);

/// The process-wide active table. On first use it honors WGEO_SIMD
/// (scalar|avx2|avx512) and otherwise picks best_available_level().
const KernelTable& active_kernels();

/// Override the active table; throws ArgumentError when unavailable.
void select_kernels(SimdLevel level);

std::string_view to_string(SimdLevel level);
std::optional<SimdLevel> parse_level(std::string_view name);

}  // namespace wgeo::simd
