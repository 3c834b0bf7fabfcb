#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "wgeo/geoflow.hpp"
#include "wgeo/measures.hpp"

namespace wgeo {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMetadata {
  std::size_t iterations = 0;
  double final_w_ab = 0.0;
  double final_w_ba = 0.0;
  std::uint64_t seed = 0;
  bool aborted = false;

  friend bool operator==(const CheckpointMetadata&, const CheckpointMetadata&) = default;
};

struct Checkpoint {
  GeoState state;
  CheckpointMetadata meta;
  // The measures the state was trained between, when known.
  std::optional<MeasureSpec> source;
  std::optional<MeasureSpec> target;
};

nlohmann::json measure_to_json(const MeasureSpec& spec);
/// Throws FormatError on unknown kinds or malformed fields.
MeasureSpec measure_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const MlpParams& params);
MlpParams params_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
/// Throws FormatError on version mismatch, missing fields or length mismatch.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

/// Atomic write (temp file, then rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// IoError when unreadable, FormatError when malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wgeo
