#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace ctkg {

enum class ValueKind { Text, Integer, Decimal, Boolean, Timestamp, Tag };

std::string_view to_string(ValueKind kind) noexcept;
std::optional<ValueKind> parse_value_kind(std::string_view text) noexcept;

/// Scalar attribute value. Text, timestamp and tag kinds share the string
/// alternative; the declared ValueKind decides which lexical form is legal.
using Value = std::variant<bool, std::int64_t, double, std::string>;
using AttrMap = std::map<std::string, Value>;

/// True if `value` is admissible for `kind`. Integers are admissible for
/// decimal attributes (they are widened by coerce()).
bool conforms(const Value& value, ValueKind kind);
Value coerce(const Value& value, ValueKind kind);

nlohmann::json to_json(const Value& value);
/// Throws SCHEMA_VIOLATION for non-scalar JSON.
Value value_from_json(const nlohmann::json& j);

nlohmann::json attrs_to_json(const AttrMap& attrs);
AttrMap attrs_from_json(const nlohmann::json& j);

/// The closed seven-element IoT aspect vocabulary. Enumerators are declared in
/// lexicographic order of their wire names so std::set iteration is sorted.
enum class AspectTag {
  BusinessModel,
  EnablingTechnology,
  Management,
  SecurityPrivacy,
  ServicesApplication,
  SocialImpact,
  SoftwareArchitecture,
};

using AspectSet = std::set<AspectTag>;

std::string_view to_string(AspectTag tag) noexcept;
std::optional<AspectTag> parse_aspect(std::string_view text) noexcept;

nlohmann::json aspects_to_json(const AspectSet& tags);
/// Throws SCHEMA_VIOLATION on a tag outside the vocabulary.
AspectSet aspects_from_json(const nlohmann::json& j);

}  // namespace ctkg
