#include "wgeo/io/canonical_json.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "wgeo/errors.hpp"

namespace wgeo {

namespace {

void write_double(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "\"nan\"";
    return;
  }
  if (std::isinf(v)) {
    out += v > 0 ? "\"inf\"" : "\"-inf\"";
    return;
  }
  if (v == 0.0 && std::signbit(v)) {
    out += "-0.0";  // "-0" would read back as the integer 0
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

bool is_flat(const nlohmann::json& array) {
  for (const auto& e : array)
    if (e.is_object() || e.is_array()) return false;
  return true;
}

void write(std::string& out, const nlohmann::json& v, int indent) {
  using value_t = nlohmann::json::value_t;
  switch (v.type()) {
    case value_t::null: out += "null"; return;
    case value_t::boolean: out += v.get<bool>() ? "true" : "false"; return;
    case value_t::number_integer: out += std::to_string(v.get<std::int64_t>()); return;
    case value_t::number_unsigned: out += std::to_string(v.get<std::uint64_t>()); return;
    case value_t::number_float: write_double(out, v.get<double>()); return;
    case value_t::string: out += nlohmann::json(v.get<std::string>()).dump(); return;
    case value_t::array: {
      out += '[';
      if (is_flat(v)) {
        bool first = true;
        for (const auto& e : v) {
          if (!first) out += ',';
          first = false;
          write(out, e, indent);
        }
      } else {
        bool first = true;
        for (const auto& e : v) {
          out += first ? "\n" : ",\n";
          first = false;
          out.append(indent + 2, ' ');
          write(out, e, indent + 2);
        }
        if (!v.empty()) {
          out += '\n';
          out.append(indent, ' ');
        }
      }
      out += ']';
      return;
    }
    case value_t::object: {
      out += '{';
      bool first = true;
      // nlohmann's default object type is a std::map, so iteration is sorted.
      for (const auto& [key, e] : v.items()) {
        out += first ? "\n" : ",\n";
        first = false;
        out.append(indent + 2, ' ');
        out += nlohmann::json(key).dump();
        out += ": ";
        write(out, e, indent + 2);
      }
      if (!v.empty()) {
        out += '\n';
        out.append(indent, ' ');
      }
      out += '}';
      return;
    }
    default: throw FormatError("cannot serialize JSON value of this type");
  }
}

}  // namespace

std::string to_canonical_json(const nlohmann::json& value) {
  std::string out;
  write(out, value, 0);
  out += '\n';
  return out;
}

double json_to_double(const nlohmann::json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw FormatError("expected a number, got " + value.dump());
}

}  // namespace wgeo
