#pragma once

#include <string>

#include <json.hpp>

namespace wgeo {

/// Deterministic JSON text: object keys sorted, floats as %.17g, numeric
/// arrays on one line, nested objects indented by two spaces. Non-finite
/// floats are written as the strings "inf", "-inf", "nan".
std::string to_canonical_json(const nlohmann::json& value);

/// Reads a number that may have been written as "inf"/"-inf"/"nan".
double json_to_double(const nlohmann::json& value);

}  // namespace wgeo
