#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ctkg {

enum class ResourceKind { PhysicalEntity, Model, Flow, Twin, Entity, Process };

/// "pe", "model", "flow", "twin", "entity", "proc"
std::string_view kind_token(ResourceKind kind) noexcept;
std::optional<ResourceKind> parse_kind_token(std::string_view token) noexcept;

/// urn:ct:{kind}/{local-id}, local-id matching [a-z0-9-]+
class ResourceUri {
 public:
  ResourceUri(ResourceKind kind, std::string local_id);

  static std::optional<ResourceUri> try_parse(std::string_view text);
  /// Throws Error(BAD_URI).
  static ResourceUri parse(std::string_view text);

  ResourceKind kind() const noexcept { return kind_; }
  const std::string& local_id() const noexcept { return local_id_; }
  std::string str() const;

  friend bool operator==(const ResourceUri&, const ResourceUri&) = default;

 private:
  ResourceKind kind_;
  std::string local_id_;
};

bool is_local_id(std::string_view text) noexcept;

/// Throws BAD_URI unless `id` is a resource URI of the given kind.
void require_uri(std::string_view id, ResourceKind kind);
/// Throws BAD_URI unless `id` is a resource URI of any kind.
void require_uri(std::string_view id);

}  // namespace ctkg
