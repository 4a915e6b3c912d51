#include "ctkg/value.hpp"

#include <array>
#include <utility>

#include "ctkg/error.hpp"
#include "ctkg/lexical.hpp"

namespace ctkg {

namespace {

constexpr std::array<std::pair<ValueKind, std::string_view>, 6> kKinds{{
    {ValueKind::Text, "text"},
    {ValueKind::Integer, "integer"},
    {ValueKind::Decimal, "decimal"},
    {ValueKind::Boolean, "boolean"},
    {ValueKind::Timestamp, "timestamp"},
    {ValueKind::Tag, "tag"},
}};

constexpr std::array<std::pair<AspectTag, std::string_view>, 7> kAspects{{
    {AspectTag::BusinessModel, "business_model"},
    {AspectTag::EnablingTechnology, "enabling_technology"},
    {AspectTag::Management, "management"},
    {AspectTag::SecurityPrivacy, "security_privacy"},
    {AspectTag::ServicesApplication, "services_application"},
    {AspectTag::SocialImpact, "social_impact"},
    {AspectTag::SoftwareArchitecture, "software_architecture"},
}};

}  // namespace

std::string_view to_string(ValueKind kind) noexcept {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return {};
}

std::optional<ValueKind> parse_value_kind(std::string_view text) noexcept {
  for (const auto& [k, name] : kKinds)
    if (name == text) return k;
  return std::nullopt;
}

bool conforms(const Value& value, ValueKind kind) {
  switch (kind) {
    case ValueKind::Text:
      return std::holds_alternative<std::string>(value);
    case ValueKind::Integer:
      return std::holds_alternative<std::int64_t>(value);
    case ValueKind::Decimal:
      return std::holds_alternative<double>(value) || std::holds_alternative<std::int64_t>(value);
    case ValueKind::Boolean:
      return std::holds_alternative<bool>(value);
    case ValueKind::Timestamp: {
      auto* s = std::get_if<std::string>(&value);
      return s && is_timestamp(*s);
    }
    case ValueKind::Tag: {
      auto* s = std::get_if<std::string>(&value);
      return s && is_identifier(*s);
    }
  }
  return false;
}

Value coerce(const Value& value, ValueKind kind) {
  if (kind == ValueKind::Decimal) {
    if (auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  }
  return value;
}

nlohmann::json to_json(const Value& value) {
  return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(Errc::SchemaViolation, "attribute values must be scalars, got " + j.dump());
}

nlohmann::json attrs_to_json(const AttrMap& attrs) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, value] : attrs) out[name] = to_json(value);
  return out;
}

AttrMap attrs_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (!j.is_object()) throw Error(Errc::SchemaViolation, "attrs must be an object");
  AttrMap out;
  for (const auto& [name, value] : j.items()) out.emplace(name, value_from_json(value));
  return out;
}

std::string_view to_string(AspectTag tag) noexcept {
  for (const auto& [t, name] : kAspects)
    if (t == tag) return name;
  return {};
}

std::optional<AspectTag> parse_aspect(std::string_view text) noexcept {
  for (const auto& [t, name] : kAspects)
    if (name == text) return t;
  return std::nullopt;
}

nlohmann::json aspects_to_json(const AspectSet& tags) {
  nlohmann::json out = nlohmann::json::array();
  for (auto tag : tags) out.push_back(std::string(to_string(tag)));
  return out;
}

AspectSet aspects_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (!j.is_array()) throw Error(Errc::SchemaViolation, "aspect_tags must be an array");
  AspectSet out;
  for (const auto& item : j) {
    auto tag = item.is_string() ? parse_aspect(item.get<std::string>()) : std::nullopt;
    if (!tag) throw Error(Errc::SchemaViolation, "unknown aspect tag " + item.dump());
    out.insert(*tag);
  }
  return out;
}

}  // namespace ctkg
