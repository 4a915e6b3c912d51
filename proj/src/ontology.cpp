#include "ctkg/ontology.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

#include "ctkg/error.hpp"
#include "ctkg/lexical.hpp"
#include "ctkg/uri.hpp"
#include "json_util.hpp"

namespace ctkg {

namespace {

using nlohmann::json;

const std::set<std::string> kEmptyIds;

constexpr std::string_view kKGObjectAttributes[] = {
    "decision_making", "description", "manuals", "methodology", "reasoning", "structure",
};

std::string str(std::string_view s) { return std::string(s); }

void sort_attributes(std::vector<AttributeDef>& attrs) {
  std::sort(attrs.begin(), attrs.end(),
            [](const AttributeDef& a, const AttributeDef& b) { return a.name < b.name; });
}

}  // namespace

KnowledgeGraph::KnowledgeGraph() {
  for (auto root : {kIoTDomain, kModelObject, kOrganization}) {
    concepts_.emplace(str(root), ConceptDef{str(root), std::nullopt, {{"label", ValueKind::Text}}});
  }
  ConceptDef kg{str(kKGObject), std::nullopt, {}};
  for (auto attr : kKGObjectAttributes) kg.attributes.push_back({str(attr), ValueKind::Text});
  concepts_.emplace(kg.name, std::move(kg));

  kinds_.emplace(str(kDependsOn), RelationKind{str(kDependsOn), str(kModelObject), str(kModelObject), true});
  kinds_.emplace(str(kRepresents), RelationKind{str(kRepresents), str(kModelObject), str(kIoTDomain), false});
  kinds_.emplace(str(kSuppliedBy), RelationKind{str(kSuppliedBy), str(kIoTDomain), str(kOrganization), false});
  kinds_.emplace(str(kDocumentedBy), RelationKind{str(kDocumentedBy), str(kAnyConcept), str(kKGObject), false});
}

bool KnowledgeGraph::is_builtin_concept(std::string_view name) {
  return name == kIoTDomain || name == kModelObject || name == kOrganization || name == kKGObject;
}

bool KnowledgeGraph::is_builtin_kind(std::string_view name) {
  return name == kDependsOn || name == kRepresents || name == kSuppliedBy || name == kDocumentedBy;
}

const ConceptDef& KnowledgeGraph::define_concept(ConceptDef def) {
  if (!is_identifier(def.name))
    throw Error(Errc::SchemaViolation, "concept name '" + def.name + "' is not an identifier");
  if (concepts_.contains(def.name))
    throw Error(Errc::DuplicateName, "concept '" + def.name + "' already defined");
  if (def.parent) {
    if (*def.parent == def.name)
      throw Error(Errc::CyclicParent, "concept '" + def.name + "' cannot be its own parent");
    if (!concepts_.contains(*def.parent))
      throw Error(Errc::UnknownParent, "unknown parent concept '" + *def.parent + "'");
  }
  sort_attributes(def.attributes);
  std::set<std::string> seen;
  if (def.parent) {
    for (const auto& a : effective_attributes(*def.parent)) seen.insert(a.name);
  }
  for (const auto& a : def.attributes) {
    if (!is_identifier(a.name))
      throw Error(Errc::SchemaViolation, "attribute name '" + a.name + "' is not an identifier");
    if (!seen.insert(a.name).second)
      throw Error(Errc::DuplicateName,
                  "attribute '" + a.name + "' declared twice in concept '" + def.name + "'");
  }
  auto [it, _] = concepts_.emplace(def.name, std::move(def));
  return it->second;
}

const RelationKind& KnowledgeGraph::define_relation_kind(RelationKind def) {
  if (!is_identifier(def.name))
    throw Error(Errc::SchemaViolation, "relation kind name '" + def.name + "' is not an identifier");
  if (kinds_.contains(def.name))
    throw Error(Errc::DuplicateName, "relation kind '" + def.name + "' already defined");
  for (const auto* endpoint : {&def.source_concept, &def.target_concept}) {
    if (*endpoint != kAnyConcept && !concepts_.contains(*endpoint))
      throw Error(Errc::UnknownConcept, "unknown concept '" + *endpoint + "'");
  }
  auto [it, _] = kinds_.emplace(def.name, std::move(def));
  return it->second;
}

const Entity& KnowledgeGraph::add_entity(std::string_view concept_name, std::string_view id,
                                         AttrMap attrs, AspectSet aspect_tags) {
  if (!concepts_.contains(concept_name))
    throw Error(Errc::UnknownConcept, "unknown concept '" + str(concept_name) + "'");
  require_uri(id);
  if (entities_.contains(id)) throw Error(Errc::DuplicateId, "entity '" + str(id) + "' exists");

  auto declared = effective_attributes(concept_name);
  for (auto& [name, value] : attrs) {
    auto it = std::find_if(declared.begin(), declared.end(),
                           [&](const AttributeDef& a) { return a.name == name; });
    if (it == declared.end())
      throw Error(Errc::SchemaViolation,
                  "attribute '" + name + "' is not declared by concept '" + str(concept_name) + "'");
    if (!conforms(value, it->kind))
      throw Error(Errc::SchemaViolation, "attribute '" + name + "' must be of kind " +
                                             str(to_string(it->kind)));
    value = coerce(value, it->kind);
  }
  Entity e{str(id), str(concept_name), std::move(attrs), std::move(aspect_tags)};
  auto [it, _] = entities_.emplace(e.id, std::move(e));
  return it->second;
}

std::string KnowledgeGraph::next_relationship_id() const {
  unsigned long long next = 1;
  for (const auto& [id, _] : relationships_) {
    if (id.size() > 4 && id.starts_with("rel-") &&
        std::all_of(id.begin() + 4, id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      next = std::max(next, std::stoull(id.substr(4)) + 1);
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "rel-%08llu", next);
  return buf;
}

const Relationship& KnowledgeGraph::add_relationship(std::string_view kind,
                                                     std::string_view source,
                                                     std::string_view target, AttrMap attrs,
                                                     std::string_view id) {
  const RelationKind* rk = find_kind(kind);
  if (!rk) throw Error(Errc::UnknownKind, "unknown relation kind '" + str(kind) + "'");
  const Entity* src = find_entity(source);
  const Entity* dst = find_entity(target);
  if (!src) throw Error(Errc::DanglingEndpoint, "source entity '" + str(source) + "' not found");
  if (!dst) throw Error(Errc::DanglingEndpoint, "target entity '" + str(target) + "' not found");
  if (!is_a(src->concept_name, rk->source_concept) || !is_a(dst->concept_name, rk->target_concept)) {
    throw Error(Errc::SchemaViolation, "relation '" + str(kind) + "' expects " +
                                           rk->source_concept + " -> " + rk->target_concept +
                                           ", got " + src->concept_name + " -> " + dst->concept_name);
  }
  std::string rel_id = id.empty() ? next_relationship_id() : str(id);
  if (!is_local_id(rel_id))
    throw Error(Errc::SchemaViolation, "relationship id '" + rel_id + "' must match [a-z0-9-]+");
  if (relationships_.contains(rel_id))
    throw Error(Errc::DuplicateId, "relationship '" + rel_id + "' exists");

  Relationship r{rel_id, str(kind), str(source), str(target), std::move(attrs)};
  out_[r.source].insert(rel_id);
  in_[r.target].insert(rel_id);
  auto [it, _] = relationships_.emplace(rel_id, std::move(r));
  return it->second;
}

void KnowledgeGraph::remove_entity(std::string_view id) {
  auto it = entities_.find(id);
  if (it == entities_.end()) throw Error(Errc::NotFound, "entity '" + str(id) + "' not found");
  if (!outgoing(id).empty() || !incoming(id).empty())
    throw Error(Errc::InUse, "entity '" + str(id) + "' is referenced by relationships");
  entities_.erase(it);
}

void KnowledgeGraph::remove_relationship(std::string_view id) {
  auto it = relationships_.find(id);
  if (it == relationships_.end())
    throw Error(Errc::NotFound, "relationship '" + str(id) + "' not found");
  auto drop = [&](auto& index, const std::string& key) {
    auto pos = index.find(key);
    if (pos == index.end()) return;
    pos->second.erase(it->first);
    if (pos->second.empty()) index.erase(pos);
  };
  drop(out_, it->second.source);
  drop(in_, it->second.target);
  relationships_.erase(it);
}

const ConceptDef* KnowledgeGraph::find_concept(std::string_view name) const {
  auto it = concepts_.find(name);
  return it == concepts_.end() ? nullptr : &it->second;
}

const RelationKind* KnowledgeGraph::find_kind(std::string_view name) const {
  auto it = kinds_.find(name);
  return it == kinds_.end() ? nullptr : &it->second;
}

const Entity* KnowledgeGraph::find_entity(std::string_view id) const {
  auto it = entities_.find(id);
  return it == entities_.end() ? nullptr : &it->second;
}

const Relationship* KnowledgeGraph::find_relationship(std::string_view id) const {
  auto it = relationships_.find(id);
  return it == relationships_.end() ? nullptr : &it->second;
}

const Entity& KnowledgeGraph::entity(std::string_view id) const {
  const Entity* e = find_entity(id);
  if (!e) throw Error(Errc::NotFound, "entity '" + str(id) + "' not found");
  return *e;
}

const std::set<std::string>& KnowledgeGraph::outgoing(std::string_view id) const {
  auto it = out_.find(id);
  return it == out_.end() ? kEmptyIds : it->second;
}

const std::set<std::string>& KnowledgeGraph::incoming(std::string_view id) const {
  auto it = in_.find(id);
  return it == in_.end() ? kEmptyIds : it->second;
}

bool KnowledgeGraph::is_a(std::string_view concept_name, std::string_view ancestor) const {
  if (ancestor == kAnyConcept) return true;
  std::string_view current = concept_name;
  // Bounded walk so corrupt (cyclic) schemas cannot hang the check.
  for (std::size_t steps = 0; steps <= concepts_.size(); ++steps) {
    if (current == ancestor) return true;
    const ConceptDef* def = find_concept(current);
    if (!def || !def->parent) return false;
    current = *def->parent;
  }
  return false;
}

std::vector<AttributeDef> KnowledgeGraph::effective_attributes(std::string_view concept_name) const {
  std::vector<AttributeDef> out;
  std::string_view current = concept_name;
  for (std::size_t steps = 0; steps <= concepts_.size(); ++steps) {
    const ConceptDef* def = find_concept(current);
    if (!def) break;
    out.insert(out.end(), def->attributes.begin(), def->attributes.end());
    if (!def->parent) break;
    current = *def->parent;
  }
  sort_attributes(out);
  return out;
}

std::vector<Neighbor> KnowledgeGraph::neighbors(std::string_view id, Direction direction,
                                                std::optional<std::string_view> kind_filter) const {
  entity(id);
  std::vector<Neighbor> out;
  auto collect = [&](const std::set<std::string>& rels, bool forward) {
    for (const auto& rid : rels) {
      const Relationship& r = relationships_.at(rid);
      if (kind_filter && r.kind != *kind_filter) continue;
      const Entity* other = find_entity(forward ? r.target : r.source);
      if (other) out.push_back({r, *other});
    }
  };
  if (direction != Direction::In) collect(outgoing(id), true);
  if (direction != Direction::Out) collect(incoming(id), false);
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return std::tie(a.relationship.kind, a.entity.id, a.relationship.id) <
           std::tie(b.relationship.kind, b.entity.id, b.relationship.id);
  });
  return out;
}

ValidationReport KnowledgeGraph::validate() const {
  ValidationReport report;
  auto add = [&](std::string_view code, const std::string& id, std::string detail) {
    report.push_back({str(code), id, std::move(detail)});
  };

  for (const auto& [name, def] : concepts_) {
    if (!is_identifier(name)) add("SCHEMA_VIOLATION", name, "concept name is not an identifier");
    if (def.parent) {
      if (!concepts_.contains(*def.parent)) {
        add("UNKNOWN_PARENT", name, "unknown parent '" + *def.parent + "'");
      } else {
        std::string_view current = *def.parent;
        for (std::size_t steps = 0; steps <= concepts_.size(); ++steps) {
          if (current == name) {
            add("CYCLIC_PARENT", name, "parent chain returns to '" + name + "'");
            break;
          }
          const ConceptDef* p = find_concept(current);
          if (!p || !p->parent) break;
          current = *p->parent;
        }
      }
    }
    auto attrs = effective_attributes(name);
    for (std::size_t i = 1; i < attrs.size(); ++i) {
      if (attrs[i].name == attrs[i - 1].name)
        add("DUPLICATE_NAME", name, "attribute '" + attrs[i].name + "' declared twice");
    }
  }

  for (const auto& [name, kind] : kinds_) {
    for (const auto* endpoint : {&kind.source_concept, &kind.target_concept}) {
      if (*endpoint != kAnyConcept && !concepts_.contains(*endpoint))
        add("UNKNOWN_CONCEPT", name, "unknown endpoint concept '" + *endpoint + "'");
    }
  }

  for (const auto& [id, e] : entities_) {
    if (!ResourceUri::try_parse(id)) add("BAD_URI", id, "entity id is not a resource URI");
    if (!concepts_.contains(e.concept_name)) {
      add("UNKNOWN_CONCEPT", id, "unknown concept '" + e.concept_name + "'");
      continue;
    }
    auto declared = effective_attributes(e.concept_name);
    for (const auto& [attr, value] : e.attrs) {
      auto it = std::find_if(declared.begin(), declared.end(),
                             [&](const AttributeDef& a) { return a.name == attr; });
      if (it == declared.end()) {
        add("SCHEMA_VIOLATION", id, "undeclared attribute '" + attr + "'");
      } else if (!conforms(value, it->kind)) {
        add("SCHEMA_VIOLATION", id, "attribute '" + attr + "' is not of kind " +
                                        str(to_string(it->kind)));
      }
    }
  }

  for (const auto& [id, r] : relationships_) {
    const RelationKind* rk = find_kind(r.kind);
    if (!rk) add("UNKNOWN_KIND", id, "unknown relation kind '" + r.kind + "'");
    const Entity* src = find_entity(r.source);
    const Entity* dst = find_entity(r.target);
    if (!src) add("DANGLING_ENDPOINT", id, "source '" + r.source + "' not found");
    if (!dst) add("DANGLING_ENDPOINT", id, "target '" + r.target + "' not found");
    if (rk && src && dst &&
        (!is_a(src->concept_name, rk->source_concept) || !is_a(dst->concept_name, rk->target_concept)))
      add("SCHEMA_VIOLATION", id, "endpoint concepts incompatible with '" + r.kind + "'");
  }

  std::sort(report.begin(), report.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.id, a.code, a.detail) < std::tie(b.id, b.code, b.detail);
  });
  return report;
}

void KnowledgeGraph::insert_unchecked(ConceptDef def) {
  sort_attributes(def.attributes);
  concepts_.insert_or_assign(def.name, std::move(def));
}

void KnowledgeGraph::insert_unchecked(RelationKind def) { kinds_.insert_or_assign(def.name, std::move(def)); }

void KnowledgeGraph::insert_unchecked(Entity entity) {
  entities_.insert_or_assign(entity.id, std::move(entity));
}

void KnowledgeGraph::insert_unchecked(Relationship rel) {
  if (auto* old = find_relationship(rel.id)) {
    out_[old->source].erase(rel.id);
    in_[old->target].erase(rel.id);
  }
  out_[rel.source].insert(rel.id);
  in_[rel.target].insert(rel.id);
  relationships_.insert_or_assign(rel.id, std::move(rel));
}

// ---- JSON ----

json to_json(const ConceptDef& def) {
  json attrs = json::array();
  for (const auto& a : def.attributes)
    attrs.push_back({{"name", a.name}, {"kind", str(to_string(a.kind))}});
  return {{"name", def.name},
          {"parent", def.parent ? json(*def.parent) : json(nullptr)},
          {"attributes", std::move(attrs)}};
}

json to_json(const RelationKind& def) {
  return {{"name", def.name},
          {"source_concept", def.source_concept},
          {"target_concept", def.target_concept},
          {"transitive_closure_eligible", def.transitive_closure_eligible}};
}

json to_json(const Entity& entity) {
  return {{"id", entity.id},
          {"concept", entity.concept_name},
          {"attrs", attrs_to_json(entity.attrs)},
          {"aspect_tags", aspects_to_json(entity.aspect_tags)}};
}

json to_json(const Relationship& rel) {
  return {{"id", rel.id},
          {"kind", rel.kind},
          {"source", rel.source},
          {"target", rel.target},
          {"attrs", attrs_to_json(rel.attrs)}};
}

json to_json(const Violation& v) { return {{"code", v.code}, {"id", v.id}, {"detail", v.detail}}; }

json to_json(const ValidationReport& report) {
  json out = json::array();
  for (const auto& v : report) out.push_back(to_json(v));
  return out;
}

ConceptDef concept_from_json(const json& j) {
  ConceptDef def;
  def.name = detail::string_field(j, "name");
  if (const json* p = detail::optional_field(j, "parent")) {
    if (!p->is_string()) throw Error(Errc::MalformedDocument, "concept parent must be a string");
    def.parent = p->get<std::string>();
  }
  if (const json* attrs = detail::optional_field(j, "attributes")) {
    if (!attrs->is_array()) throw Error(Errc::MalformedDocument, "attributes must be an array");
    for (const auto& a : *attrs) {
      auto kind = parse_value_kind(detail::string_field(a, "kind"));
      if (!kind) throw Error(Errc::SchemaViolation, "unknown value kind " + a.at("kind").dump());
      def.attributes.push_back({detail::string_field(a, "name"), *kind});
    }
  }
  sort_attributes(def.attributes);
  return def;
}

RelationKind relation_kind_from_json(const json& j) {
  RelationKind def;
  def.name = detail::string_field(j, "name");
  def.source_concept = detail::string_field(j, "source_concept");
  def.target_concept = detail::string_field(j, "target_concept");
  if (const json* flag = detail::optional_field(j, "transitive_closure_eligible")) {
    if (!flag->is_boolean())
      throw Error(Errc::MalformedDocument, "transitive_closure_eligible must be a boolean");
    def.transitive_closure_eligible = flag->get<bool>();
  }
  return def;
}

Entity entity_from_json(const json& j) {
  Entity e;
  e.id = detail::string_field(j, "id");
  e.concept_name = detail::string_field(j, "concept");
  if (const json* attrs = detail::optional_field(j, "attrs")) e.attrs = attrs_from_json(*attrs);
  if (const json* tags = detail::optional_field(j, "aspect_tags")) e.aspect_tags = aspects_from_json(*tags);
  return e;
}

Relationship relationship_from_json(const json& j) {
  Relationship r;
  if (const json* id = detail::optional_field(j, "id")) {
    if (!id->is_string()) throw Error(Errc::MalformedDocument, "relationship id must be a string");
    r.id = id->get<std::string>();
  }
  r.kind = detail::string_field(j, "kind");
  r.source = detail::string_field(j, "source");
  r.target = detail::string_field(j, "target");
  if (const json* attrs = detail::optional_field(j, "attrs")) r.attrs = attrs_from_json(*attrs);
  return r;
}

void write_graph(const KnowledgeGraph& graph, json& doc) {
  json concepts = json::array(), kinds = json::array(), entities = json::array(),
       rels = json::array();
  for (const auto& [name, def] : graph.concepts())
    if (!KnowledgeGraph::is_builtin_concept(name)) concepts.push_back(to_json(def));
  for (const auto& [name, def] : graph.relation_kinds())
    if (!KnowledgeGraph::is_builtin_kind(name)) kinds.push_back(to_json(def));
  for (const auto& [_, e] : graph.entities()) entities.push_back(to_json(e));
  for (const auto& [_, r] : graph.relationships()) rels.push_back(to_json(r));
  doc["concepts"] = std::move(concepts);
  doc["relation_kinds"] = std::move(kinds);
  doc["entities"] = std::move(entities);
  doc["relationships"] = std::move(rels);
}

KnowledgeGraph read_graph_unchecked(const json& doc) {
  KnowledgeGraph graph;
  for (const auto& c : detail::array_field(doc, "concepts")) {
    ConceptDef def = concept_from_json(c);
    if (graph.find_concept(def.name))
      throw Error(Errc::SchemaViolation, "concept '" + def.name + "' defined twice");
    graph.insert_unchecked(std::move(def));
  }
  for (const auto& k : detail::array_field(doc, "relation_kinds")) {
    RelationKind def = relation_kind_from_json(k);
    if (graph.find_kind(def.name))
      throw Error(Errc::SchemaViolation, "relation kind '" + def.name + "' defined twice");
    graph.insert_unchecked(std::move(def));
  }
  for (const auto& e : detail::array_field(doc, "entities")) {
    Entity entity = entity_from_json(e);
    if (graph.find_entity(entity.id))
      throw Error(Errc::SchemaViolation, "entity '" + entity.id + "' appears twice");
    // Widen integer literals stored under decimal attributes.
    auto declared = graph.effective_attributes(entity.concept_name);
    for (auto& [name, value] : entity.attrs) {
      for (const auto& a : declared)
        if (a.name == name) value = coerce(value, a.kind);
    }
    graph.insert_unchecked(std::move(entity));
  }
  for (const auto& r : detail::array_field(doc, "relationships")) {
    Relationship rel = relationship_from_json(r);
    if (rel.id.empty()) throw Error(Errc::MalformedDocument, "relationship without id");
    if (graph.find_relationship(rel.id))
      throw Error(Errc::SchemaViolation, "relationship '" + rel.id + "' appears twice");
    graph.insert_unchecked(std::move(rel));
  }
  return graph;
}

}  // namespace ctkg
