#pragma once

// Internal helpers for reading required fields out of JSON documents.

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ctkg/error.hpp"

namespace ctkg::detail {

using nlohmann::json;

inline const json& field(const json& j, std::string_view key,
                         Errc code = Errc::MalformedDocument) {
  if (!j.is_object()) throw Error(code, "expected an object with key '" + std::string(key) + "'");
  auto it = j.find(key);
  if (it == j.end()) throw Error(code, "missing key '" + std::string(key) + "'");
  return *it;
}

inline std::string string_field(const json& j, std::string_view key,
                                Errc code = Errc::MalformedDocument) {
  const json& v = field(j, key, code);
  if (!v.is_string()) throw Error(code, "key '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline double number_field(const json& j, std::string_view key,
                           Errc code = Errc::MalformedDocument) {
  const json& v = field(j, key, code);
  if (!v.is_number()) throw Error(code, "key '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

inline long long integer_field(const json& j, std::string_view key,
                               Errc code = Errc::MalformedDocument) {
  const json& v = field(j, key, code);
  if (!v.is_number_integer()) throw Error(code, "key '" + std::string(key) + "' must be an integer");
  return v.get<long long>();
}

inline const json& array_field(const json& j, std::string_view key,
                               Errc code = Errc::MalformedDocument) {
  const json& v = field(j, key, code);
  if (!v.is_array()) throw Error(code, "key '" + std::string(key) + "' must be an array");
  return v;
}

inline const json* optional_field(const json& j, std::string_view key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

}  // namespace ctkg::detail
