#pragma once

#include <algorithm>
#include <string>
#include <string_view>

#include <json.hpp>

#include "craft/error.hpp"
#include "craft/geometry.hpp"

namespace craft::detail {

using nlohmann::json;

/// Parses text, reporting syntax errors as ErrorCode::parse with a line number.
inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorCode::parse, std::string(what) + ": syntax error at line " +
                                      std::to_string(line));
  }
}

[[noreturn]] inline void field_error(std::string_view path, std::string_view problem) {
  throw Error(ErrorCode::parse, std::string(path) + ": " + std::string(problem));
}

inline const json& member(const json& obj, const char* key, std::string_view path) {
  if (!obj.is_object()) field_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error(std::string(path) + "." + key, "missing");
  return *it;
}

inline double number(const json& v, std::string_view path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

inline std::string text(const json& v, std::string_view path) {
  if (!v.is_string()) field_error(path, "expected a string");
  return v.get<std::string>();
}

inline Vec3 vec3(const json& v, std::string_view path) {
  if (!v.is_array() || v.size() != 3) field_error(path, "expected [x, y, z]");
  const std::string p(path);
  return {number(v[0], p + "[0]"), number(v[1], p + "[1]"), number(v[2], p + "[2]")};
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace craft::detail
