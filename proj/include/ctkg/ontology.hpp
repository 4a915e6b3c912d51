#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctkg/value.hpp"

namespace ctkg {

// Bootstrap root concepts.
inline constexpr std::string_view kIoTDomain = "IoTDomain";
inline constexpr std::string_view kModelObject = "ModelObject";
inline constexpr std::string_view kOrganization = "Organization";
inline constexpr std::string_view kKGObject = "KGObject";

// Bootstrap relation kinds.
inline constexpr std::string_view kDependsOn = "depends_on";
inline constexpr std::string_view kRepresents = "represents";
inline constexpr std::string_view kSuppliedBy = "supplied_by";
inline constexpr std::string_view kDocumentedBy = "documented_by";

/// Endpoint wildcard for relation kinds: any concept is accepted.
inline constexpr std::string_view kAnyConcept = "*";

struct AttributeDef {
  std::string name;
  ValueKind kind = ValueKind::Text;
  friend bool operator==(const AttributeDef&, const AttributeDef&) = default;
};

struct ConceptDef {
  std::string name;
  std::optional<std::string> parent;
  std::vector<AttributeDef> attributes;  // own attributes, kept sorted by name
  friend bool operator==(const ConceptDef&, const ConceptDef&) = default;
};

struct RelationKind {
  std::string name;
  std::string source_concept;
  std::string target_concept;
  bool transitive_closure_eligible = false;
  friend bool operator==(const RelationKind&, const RelationKind&) = default;
};

struct Entity {
  std::string id;  // resource URI
  std::string concept_name;
  AttrMap attrs;
  AspectSet aspect_tags;
  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Relationship {
  std::string id;
  std::string kind;
  std::string source;
  std::string target;
  AttrMap attrs;
  friend bool operator==(const Relationship&, const Relationship&) = default;
};

struct Violation {
  std::string code;
  std::string id;
  std::string detail;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Deterministic: sorted by (id, code, detail).
using ValidationReport = std::vector<Violation>;

enum class Direction { Out, In, Both };

struct Neighbor {
  Relationship relationship;
  Entity entity;
};

/// Typed property graph validated against a two-level schema (single
/// inheritance concepts + relation kinds with typed endpoints).
///
/// Every mutating member either succeeds or throws ctkg::Error leaving the
/// graph untouched. A default-constructed graph holds the bootstrap ontology.
class KnowledgeGraph {
 public:
  KnowledgeGraph();

  const ConceptDef& define_concept(ConceptDef def);
  const RelationKind& define_relation_kind(RelationKind def);
  const Entity& add_entity(std::string_view concept_name, std::string_view id, AttrMap attrs = {},
                           AspectSet aspect_tags = {});
  /// When `id` is empty a fresh "rel-NNNNNNNN" id is assigned.
  const Relationship& add_relationship(std::string_view kind, std::string_view source,
                                       std::string_view target, AttrMap attrs = {},
                                       std::string_view id = {});
  /// Throws IN_USE while any relationship references the entity.
  void remove_entity(std::string_view id);
  void remove_relationship(std::string_view id);

  std::string next_relationship_id() const;

  const ConceptDef* find_concept(std::string_view name) const;
  const RelationKind* find_kind(std::string_view name) const;
  const Entity* find_entity(std::string_view id) const;
  const Relationship* find_relationship(std::string_view id) const;
  /// Throws NOT_FOUND.
  const Entity& entity(std::string_view id) const;

  const std::map<std::string, ConceptDef, std::less<>>& concepts() const { return concepts_; }
  const std::map<std::string, RelationKind, std::less<>>& relation_kinds() const { return kinds_; }
  const std::map<std::string, Entity, std::less<>>& entities() const { return entities_; }
  const std::map<std::string, Relationship, std::less<>>& relationships() const {
    return relationships_;
  }

  /// Relationship ids leaving / entering an entity (empty set if none).
  const std::set<std::string>& outgoing(std::string_view id) const;
  const std::set<std::string>& incoming(std::string_view id) const;

  /// `concept_name` equals `ancestor` or descends from it. kAnyConcept matches all.
  bool is_a(std::string_view concept_name, std::string_view ancestor) const;
  /// Own plus inherited attributes, sorted by name.
  std::vector<AttributeDef> effective_attributes(std::string_view concept_name) const;

  static bool is_builtin_concept(std::string_view name);
  static bool is_builtin_kind(std::string_view name);

  /// Sorted by (kind, neighbor id, relationship id). Throws NOT_FOUND.
  std::vector<Neighbor> neighbors(std::string_view id, Direction direction,
                                  std::optional<std::string_view> kind_filter = {}) const;

  ValidationReport validate() const;

  // Raw insertion without checks, used when loading documents that are
  // validated afterwards. Duplicates overwrite.
  void insert_unchecked(ConceptDef def);
  void insert_unchecked(RelationKind def);
  void insert_unchecked(Entity entity);
  void insert_unchecked(Relationship rel);

 private:
  std::map<std::string, ConceptDef, std::less<>> concepts_;
  std::map<std::string, RelationKind, std::less<>> kinds_;
  std::map<std::string, Entity, std::less<>> entities_;
  std::map<std::string, Relationship, std::less<>> relationships_;
  std::map<std::string, std::set<std::string>, std::less<>> out_;
  std::map<std::string, std::set<std::string>, std::less<>> in_;
};

/// Alias kept for symmetry with the rest of the API.
inline ValidationReport validate_graph(const KnowledgeGraph& graph) { return graph.validate(); }

nlohmann::json to_json(const ConceptDef& def);
nlohmann::json to_json(const RelationKind& def);
nlohmann::json to_json(const Entity& entity);
nlohmann::json to_json(const Relationship& rel);
nlohmann::json to_json(const Violation& v);
nlohmann::json to_json(const ValidationReport& report);

ConceptDef concept_from_json(const nlohmann::json& j);
RelationKind relation_kind_from_json(const nlohmann::json& j);
Entity entity_from_json(const nlohmann::json& j);
Relationship relationship_from_json(const nlohmann::json& j);

/// The four ontology arrays of the interchange document. Bootstrap concepts
/// and kinds are implicit and omitted.
void write_graph(const KnowledgeGraph& graph, nlohmann::json& doc);
/// Loads the four arrays onto a fresh bootstrap graph without validation.
KnowledgeGraph read_graph_unchecked(const nlohmann::json& doc);

}  // namespace ctkg
