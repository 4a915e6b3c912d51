#include "ctkg/uri.hpp"

#include <array>
#include <utility>

#include "ctkg/error.hpp"

namespace ctkg {

namespace {

constexpr std::string_view kPrefix = "urn:ct:";

constexpr std::array<std::pair<ResourceKind, std::string_view>, 6> kTokens{{
    {ResourceKind::PhysicalEntity, "pe"},
    {ResourceKind::Model, "model"},
    {ResourceKind::Flow, "flow"},
    {ResourceKind::Twin, "twin"},
    {ResourceKind::Entity, "entity"},
    {ResourceKind::Process, "proc"},
}};

}  // namespace

std::string_view kind_token(ResourceKind kind) noexcept {
  for (const auto& [k, token] : kTokens)
    if (k == kind) return token;
  return {};
}

std::optional<ResourceKind> parse_kind_token(std::string_view token) noexcept {
  for (const auto& [k, t] : kTokens)
    if (t == token) return k;
  return std::nullopt;
}

bool is_local_id(std::string_view text) noexcept {
  if (text.empty()) return false;
  for (char c : text) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
  }
  return true;
}

ResourceUri::ResourceUri(ResourceKind kind, std::string local_id)
    : kind_(kind), local_id_(std::move(local_id)) {
  if (!is_local_id(local_id_)) throw Error(Errc::BadUri, "invalid local id '" + local_id_ + "'");
}

std::optional<ResourceUri> ResourceUri::try_parse(std::string_view text) {
  if (!text.starts_with(kPrefix)) return std::nullopt;
  text.remove_prefix(kPrefix.size());
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto kind = parse_kind_token(text.substr(0, slash));
  auto local = text.substr(slash + 1);
  if (!kind || !is_local_id(local)) return std::nullopt;
  return ResourceUri(*kind, std::string(local));
}

ResourceUri ResourceUri::parse(std::string_view text) {
  auto uri = try_parse(text);
  if (!uri) throw Error(Errc::BadUri, "not a resource URI: '" + std::string(text) + "'");
  return *uri;
}

std::string ResourceUri::str() const {
  std::string out(kPrefix);
  out += kind_token(kind_);
  out += '/';
  out += local_id_;
  return out;
}

void require_uri(std::string_view id, ResourceKind kind) {
  auto uri = ResourceUri::try_parse(id);
  if (!uri || uri->kind() != kind) {
    throw Error(Errc::BadUri, "expected a urn:ct:" + std::string(kind_token(kind)) +
                                  "/... URI, got '" + std::string(id) + "'");
  }
}

void require_uri(std::string_view id) { (void)ResourceUri::parse(id); }

}  // namespace ctkg
