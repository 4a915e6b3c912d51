#include "ctkg/registry.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "ctkg/error.hpp"
#include "ctkg/lexical.hpp"
#include "ctkg/uri.hpp"
#include "json_util.hpp"

namespace ctkg {

namespace {

using nlohmann::json;

std::string str(std::string_view s) { return std::string(s); }

std::vector<std::string> sorted_unique(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void check_wall_time(const std::string& wall_time) {
  if (!is_timestamp(wall_time))
    throw Error(Errc::SchemaViolation, "wall_time '" + wall_time + "' is not ISO-8601");
}

}  // namespace

const std::string& ModelFacets::get(std::size_t index) const {
  switch (index) {
    case 0: return structure;
    case 1: return purpose;
    case 2: return theory;
    case 3: return language;
    case 4: return tool;
    default: return method;
  }
}

std::string_view to_string(DataType dtype) noexcept {
  return dtype == DataType::RealTime ? "real_time" : "off_line";
}

DataType parse_dtype(std::string_view text) {
  if (text == "real_time") return DataType::RealTime;
  if (text == "off_line") return DataType::OffLine;
  throw Error(Errc::BadDtype, "dtype must be real_time or off_line, got '" + str(text) + "'");
}

const std::string& twin_id(const Twin& twin) {
  return std::visit([](const auto& t) -> const std::string& { return t.id; }, twin);
}

DigitalTwin project_to_dt(const CognitiveTwin& ct) {
  DigitalTwin dt{ct.id, ct.physical, {}, ct.flows};
  for (const auto& m : ct.models) dt.models.push_back({m.id, m.entity_ref, m.latest().facets});
  return dt;
}

// ---- mutations ----

const PhysicalEntity& TwinRegistry::register_physical_entity(std::string_view id,
                                                             std::string description,
                                                             AspectSet tags) {
  require_uri(id, ResourceKind::PhysicalEntity);
  if (physical_.contains(id))
    throw Error(Errc::DuplicateId, "physical entity '" + str(id) + "' exists");
  auto [it, _] = physical_.emplace(str(id), PhysicalEntity{str(id), std::move(description), std::move(tags)});
  return it->second;
}

const ModelAsset& TwinRegistry::register_model(KnowledgeGraph& graph, ModelRegistration reg) {
  require_uri(reg.id, ResourceKind::Model);
  if (models_.contains(reg.id)) throw Error(Errc::DuplicateId, "model '" + reg.id + "' exists");
  if (reg.timespot < 0) throw Error(Errc::BadArgument, "timespot must be non-negative");
  check_wall_time(reg.wall_time);

  std::string entity_ref = reg.entity_ref.value_or(reg.id);
  if (const Entity* existing = graph.find_entity(entity_ref)) {
    if (!graph.is_a(existing->concept_name, kModelObject))
      throw Error(Errc::SchemaViolation,
                  "entity '" + entity_ref + "' is a " + existing->concept_name + ", not a ModelObject");
  } else {
    if (!graph.find_concept(reg.concept_name))
      throw Error(Errc::UnknownConcept, "unknown concept '" + reg.concept_name + "'");
    if (!graph.is_a(reg.concept_name, kModelObject))
      throw Error(Errc::SchemaViolation, "concept '" + reg.concept_name + "' is not a ModelObject");
    graph.add_entity(reg.concept_name, entity_ref);
  }

  ModelAsset asset{reg.id, entity_ref,
                   {ModelVersion{reg.id, reg.timespot, std::move(reg.wall_time),
                                 std::move(reg.facets), std::move(reg.note)}}};
  auto [it, _] = models_.emplace(asset.id, std::move(asset));
  return it->second;
}

const ModelVersion& TwinRegistry::snapshot_version(std::string_view model_id,
                                                   std::int64_t timespot, ModelFacets facets,
                                                   std::string note, std::string wall_time) {
  auto it = models_.find(model_id);
  if (it == models_.end()) throw Error(Errc::NotFound, "model '" + str(model_id) + "' not found");
  auto& versions = it->second.versions;
  if (timespot <= versions.back().timespot) {
    throw Error(Errc::NonMonotonicTimespot,
                "timespot " + std::to_string(timespot) + " is not after " +
                    std::to_string(versions.back().timespot));
  }
  check_wall_time(wall_time);
  versions.push_back({str(model_id), timespot, std::move(wall_time), std::move(facets), std::move(note)});
  return versions.back();
}

const CommFlow& TwinRegistry::add_comm_flow(std::string_view id, std::string_view start,
                                            std::string_view dest, DataType dtype,
                                            std::vector<std::string> content_schema) {
  require_uri(id, ResourceKind::Flow);
  if (flows_.contains(id)) throw Error(Errc::DuplicateId, "flow '" + str(id) + "' exists");
  for (auto endpoint : {start, dest}) {
    if (!physical_.contains(endpoint) && !models_.contains(endpoint))
      throw Error(Errc::NotFound, "flow endpoint '" + str(endpoint) + "' not found");
  }
  if (start == dest) throw Error(Errc::SelfLoop, "flow start equals destination");
  std::set<std::string> seen;
  for (const auto& signal : content_schema) {
    if (!is_identifier(signal))
      throw Error(Errc::SchemaViolation, "signal name '" + signal + "' is not an identifier");
    if (!seen.insert(signal).second)
      throw Error(Errc::SchemaViolation, "signal '" + signal + "' listed twice");
  }
  auto [it, _] = flows_.emplace(str(id), CommFlow{str(id), str(start), str(dest), dtype,
                                                  std::move(content_schema)});
  return it->second;
}

void TwinRegistry::check_twin_members(std::string_view id, std::string_view physical,
                                      const std::vector<std::string>& model_ids,
                                      const std::vector<std::string>& flow_ids) const {
  require_uri(id, ResourceKind::Twin);
  if (!physical_.contains(physical))
    throw Error(Errc::NotFound, "physical entity '" + str(physical) + "' not found");
  for (const auto& m : model_ids)
    if (!models_.contains(m)) throw Error(Errc::NotFound, "model '" + m + "' not found");
  std::set<std::string_view> members(model_ids.begin(), model_ids.end());
  members.insert(physical);
  for (const auto& f : flow_ids) {
    const CommFlow* flow = find_flow(f);
    if (!flow) throw Error(Errc::NotFound, "flow '" + f + "' not found");
    if (!members.contains(flow->entity_start) || !members.contains(flow->entity_dest))
      throw Error(Errc::FlowEndpointOutsideTwin, "flow '" + f + "' leaves the twin");
  }
}

DigitalTwin TwinRegistry::assemble_digital_twin(std::string_view id, std::string_view physical,
                                                const std::vector<std::string>& model_ids,
                                                const std::vector<std::string>& flow_ids) const {
  check_twin_members(id, physical, model_ids, flow_ids);
  DigitalTwin dt{str(id), physical_.find(physical)->second, {}, {}};
  for (const auto& m : sorted_unique(model_ids)) {
    const ModelAsset& asset = models_.find(m)->second;
    dt.models.push_back({asset.id, asset.entity_ref, asset.latest().facets});
  }
  for (const auto& f : sorted_unique(flow_ids)) dt.flows.push_back(flows_.find(f)->second);
  return dt;
}

CognitiveTwin TwinRegistry::assemble_cognitive_twin(const KnowledgeGraph& graph,
                                                    std::string_view id,
                                                    std::string_view physical,
                                                    const std::vector<std::string>& model_ids,
                                                    const std::vector<std::string>& flow_ids) const {
  check_twin_members(id, physical, model_ids, flow_ids);
  CognitiveTwin ct{str(id), physical_.find(physical)->second, {}, {}, {}};
  std::set<std::string> entities;
  for (const auto& m : sorted_unique(model_ids)) {
    const ModelAsset& asset = models_.find(m)->second;
    ct.models.push_back(asset);
    if (graph.find_entity(asset.entity_ref)) entities.insert(asset.entity_ref);
  }
  for (const auto& f : sorted_unique(flow_ids)) ct.flows.push_back(flows_.find(f)->second);

  std::set<std::string> rels;
  for (const auto& e : entities) {
    for (const auto& rid : graph.outgoing(e)) {
      if (entities.contains(graph.find_relationship(rid)->target)) rels.insert(rid);
    }
  }
  ct.ontology_view.entities.assign(entities.begin(), entities.end());
  ct.ontology_view.relationships.assign(rels.begin(), rels.end());
  return ct;
}

const Twin& TwinRegistry::add_twin(Twin twin) {
  const std::string& id = twin_id(twin);
  require_uri(id, ResourceKind::Twin);
  if (twins_.contains(id)) throw Error(Errc::DuplicateId, "twin '" + id + "' exists");
  std::string key = id;
  auto [it, _] = twins_.emplace(std::move(key), std::move(twin));
  return it->second;
}

ChurnMetrics TwinRegistry::evolution_dynamics(std::string_view model_id, std::int64_t t_from,
                                              std::int64_t t_to) const {
  const ModelAsset& asset = model(model_id);
  if (t_from < 0 || t_from > t_to)
    throw Error(Errc::BadWindow, "window [" + std::to_string(t_from) + ", " +
                                     std::to_string(t_to) + "] is empty or negative");
  ChurnMetrics out{asset.id, t_from, t_to, 0, {}, 0.0};
  for (auto name : ModelFacets::kNames) out.facets_changed[str(name)] = 0;

  const ModelVersion* previous = nullptr;
  for (const auto& v : asset.versions) {
    if (v.timespot < t_from || v.timespot > t_to) continue;
    ++out.version_count;
    if (previous) {
      for (std::size_t i = 0; i < ModelFacets::kNames.size(); ++i) {
        if (previous->facets.get(i) != v.facets.get(i))
          ++out.facets_changed[str(ModelFacets::kNames[i])];
      }
    }
    previous = &v;
  }
  out.velocity = static_cast<double>(out.version_count) / static_cast<double>(t_to - t_from + 1);
  return out;
}

// ---- lookups ----

const PhysicalEntity* TwinRegistry::find_physical(std::string_view id) const {
  auto it = physical_.find(id);
  return it == physical_.end() ? nullptr : &it->second;
}

const ModelAsset* TwinRegistry::find_model(std::string_view id) const {
  auto it = models_.find(id);
  return it == models_.end() ? nullptr : &it->second;
}

const CommFlow* TwinRegistry::find_flow(std::string_view id) const {
  auto it = flows_.find(id);
  return it == flows_.end() ? nullptr : &it->second;
}

const Twin* TwinRegistry::find_twin(std::string_view id) const {
  auto it = twins_.find(id);
  return it == twins_.end() ? nullptr : &it->second;
}

const ModelAsset& TwinRegistry::model(std::string_view id) const {
  const ModelAsset* m = find_model(id);
  if (!m) throw Error(Errc::NotFound, "model '" + str(id) + "' not found");
  return *m;
}

bool TwinRegistry::references_entity(std::string_view entity_id) const {
  return std::any_of(models_.begin(), models_.end(),
                     [&](const auto& kv) { return kv.second.entity_ref == entity_id; });
}

ValidationReport TwinRegistry::validate(const KnowledgeGraph& graph) const {
  ValidationReport report;
  auto add = [&](std::string_view code, const std::string& id, std::string detail) {
    report.push_back({str(code), id, std::move(detail)});
  };
  auto uri_ok = [](const std::string& id, ResourceKind kind) {
    auto uri = ResourceUri::try_parse(id);
    return uri && uri->kind() == kind;
  };

  for (const auto& [id, pe] : physical_)
    if (!uri_ok(id, ResourceKind::PhysicalEntity)) add("BAD_URI", id, "not a urn:ct:pe URI");

  for (const auto& [id, m] : models_) {
    if (!uri_ok(id, ResourceKind::Model)) add("BAD_URI", id, "not a urn:ct:model URI");
    if (m.versions.empty()) add("SCHEMA_VIOLATION", id, "model has no versions");
    for (std::size_t i = 0; i < m.versions.size(); ++i) {
      const auto& v = m.versions[i];
      if (v.model_id != id) add("SCHEMA_VIOLATION", id, "version carries model_id " + v.model_id);
      if (v.timespot < 0) add("SCHEMA_VIOLATION", id, "negative timespot");
      if (i > 0 && v.timespot <= m.versions[i - 1].timespot)
        add("NON_MONOTONIC_TIMESPOT", id, "timespot " + std::to_string(v.timespot));
      if (!is_timestamp(v.wall_time)) add("SCHEMA_VIOLATION", id, "bad wall_time " + v.wall_time);
    }
    const Entity* e = graph.find_entity(m.entity_ref);
    if (!e) {
      add("DANGLING_ENDPOINT", id, "entity_ref '" + m.entity_ref + "' not found");
    } else if (!graph.is_a(e->concept_name, kModelObject)) {
      add("SCHEMA_VIOLATION", id, "entity_ref is not a ModelObject");
    }
  }

  for (const auto& [id, f] : flows_) {
    if (!uri_ok(id, ResourceKind::Flow)) add("BAD_URI", id, "not a urn:ct:flow URI");
    for (const auto* endpoint : {&f.entity_start, &f.entity_dest}) {
      if (!physical_.contains(*endpoint) && !models_.contains(*endpoint))
        add("DANGLING_ENDPOINT", id, "endpoint '" + *endpoint + "' not found");
    }
    if (f.entity_start == f.entity_dest) add("SELF_LOOP", id, "start equals destination");
  }

  for (const auto& [id, twin] : twins_) {
    if (!uri_ok(id, ResourceKind::Twin)) add("BAD_URI", id, "not a urn:ct:twin URI");
    std::visit(
        [&](const auto& t) {
          if (!physical_.contains(t.physical.id))
            add("DANGLING_ENDPOINT", id, "physical '" + t.physical.id + "' not found");
          for (const auto& m : t.models)
            if (!models_.contains(m.id)) add("DANGLING_ENDPOINT", id, "model '" + m.id + "' not found");
          for (const auto& f : t.flows)
            if (!flows_.contains(f.id)) add("DANGLING_ENDPOINT", id, "flow '" + f.id + "' not found");
        },
        twin);
  }

  std::sort(report.begin(), report.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.id, a.code, a.detail) < std::tie(b.id, b.code, b.detail);
  });
  return report;
}

void TwinRegistry::insert_unchecked(PhysicalEntity pe) { physical_.insert_or_assign(pe.id, std::move(pe)); }
void TwinRegistry::insert_unchecked(ModelAsset model) { models_.insert_or_assign(model.id, std::move(model)); }
void TwinRegistry::insert_unchecked(CommFlow flow) { flows_.insert_or_assign(flow.id, std::move(flow)); }
void TwinRegistry::insert_unchecked(Twin twin) {
  std::string id = twin_id(twin);
  twins_.insert_or_assign(std::move(id), std::move(twin));
}

// ---- JSON ----

json to_json(const PhysicalEntity& pe) {
  return {{"id", pe.id}, {"description", pe.description}, {"aspect_tags", aspects_to_json(pe.aspect_tags)}};
}

json to_json(const ModelFacets& facets) {
  json out = json::object();
  for (std::size_t i = 0; i < ModelFacets::kNames.size(); ++i)
    out[str(ModelFacets::kNames[i])] = facets.get(i);
  return out;
}

json to_json(const ModelVersion& v) {
  return {{"model_id", v.model_id},
          {"timespot", v.timespot},
          {"wall_time", v.wall_time},
          {"facets", to_json(v.facets)},
          {"note", v.note}};
}

json to_json(const ModelAsset& model) {
  json versions = json::array();
  for (const auto& v : model.versions) versions.push_back(to_json(v));
  return {{"id", model.id}, {"entity_ref", model.entity_ref}, {"versions", std::move(versions)}};
}

json to_json(const CommFlow& flow) {
  return {{"id", flow.id},
          {"entity_start", flow.entity_start},
          {"entity_dest", flow.entity_dest},
          {"dtype", str(to_string(flow.dtype))},
          {"content_schema", flow.content_schema}};
}

namespace {

json flows_json(const std::vector<CommFlow>& flows) {
  json out = json::array();
  for (const auto& f : flows) out.push_back(to_json(f));
  return out;
}

}  // namespace

json to_json(const DigitalTwin& dt) {
  json models = json::array();
  for (const auto& m : dt.models)
    models.push_back({{"id", m.id}, {"entity_ref", m.entity_ref}, {"facets", to_json(m.facets)}});
  return {{"id", dt.id},
          {"type", "digital_twin"},
          {"physical", to_json(dt.physical)},
          {"models", std::move(models)},
          {"flows", flows_json(dt.flows)}};
}

json to_json(const CognitiveTwin& ct) {
  json models = json::array();
  for (const auto& m : ct.models) models.push_back(to_json(m));
  return {{"id", ct.id},
          {"type", "cognitive_twin"},
          {"physical", to_json(ct.physical)},
          {"models", std::move(models)},
          {"flows", flows_json(ct.flows)},
          {"ontology_view",
           {{"entities", ct.ontology_view.entities},
            {"relationships", ct.ontology_view.relationships}}}};
}

json to_json(const Twin& twin) {
  return std::visit([](const auto& t) { return to_json(t); }, twin);
}

json to_json(const ChurnMetrics& m) {
  return {{"model_id", m.model_id},
          {"window", {m.t_from, m.t_to}},
          {"version_count", m.version_count},
          {"facets_changed", m.facets_changed},
          {"velocity", m.velocity}};
}

PhysicalEntity physical_entity_from_json(const json& j) {
  PhysicalEntity pe;
  pe.id = detail::string_field(j, "id");
  if (const json* d = detail::optional_field(j, "description")) {
    if (!d->is_string()) throw Error(Errc::MalformedDocument, "description must be a string");
    pe.description = d->get<std::string>();
  }
  if (const json* tags = detail::optional_field(j, "aspect_tags")) pe.aspect_tags = aspects_from_json(*tags);
  return pe;
}

ModelFacets facets_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaViolation, "facets must be an object");
  ModelFacets f;
  std::string* slots[] = {&f.structure, &f.purpose, &f.theory, &f.language, &f.tool, &f.method};
  for (std::size_t i = 0; i < ModelFacets::kNames.size(); ++i)
    *slots[i] = detail::string_field(j, ModelFacets::kNames[i], Errc::SchemaViolation);
  if (j.size() != ModelFacets::kNames.size())
    throw Error(Errc::SchemaViolation, "facets has keys beyond the six facets");
  return f;
}

ModelVersion version_from_json(const json& j) {
  ModelVersion v;
  v.model_id = detail::string_field(j, "model_id");
  v.timespot = detail::integer_field(j, "timespot");
  v.wall_time = detail::string_field(j, "wall_time");
  v.facets = facets_from_json(detail::field(j, "facets", Errc::SchemaViolation));
  v.note = detail::string_field(j, "note");
  return v;
}

ModelAsset model_from_json(const json& j) {
  ModelAsset m;
  m.id = detail::string_field(j, "id");
  m.entity_ref = detail::string_field(j, "entity_ref");
  for (const auto& v : detail::array_field(j, "versions")) m.versions.push_back(version_from_json(v));
  return m;
}

CommFlow flow_from_json(const json& j) {
  CommFlow f;
  f.id = detail::string_field(j, "id");
  f.entity_start = detail::string_field(j, "entity_start");
  f.entity_dest = detail::string_field(j, "entity_dest");
  f.dtype = parse_dtype(detail::string_field(j, "dtype"));
  for (const auto& s : detail::array_field(j, "content_schema")) {
    if (!s.is_string()) throw Error(Errc::MalformedDocument, "signal names must be strings");
    f.content_schema.push_back(s.get<std::string>());
  }
  return f;
}

Twin twin_from_json(const json& j) {
  std::string type = detail::string_field(j, "type");
  PhysicalEntity physical = physical_entity_from_json(detail::field(j, "physical"));
  std::vector<CommFlow> flows;
  for (const auto& f : detail::array_field(j, "flows")) flows.push_back(flow_from_json(f));
  if (type == "digital_twin") {
    DigitalTwin dt{detail::string_field(j, "id"), std::move(physical), {}, std::move(flows)};
    for (const auto& m : detail::array_field(j, "models")) {
      dt.models.push_back({detail::string_field(m, "id"), detail::string_field(m, "entity_ref"),
                           facets_from_json(detail::field(m, "facets"))});
    }
    return dt;
  }
  if (type == "cognitive_twin") {
    CognitiveTwin ct{detail::string_field(j, "id"), std::move(physical), {}, std::move(flows), {}};
    for (const auto& m : detail::array_field(j, "models")) ct.models.push_back(model_from_json(m));
    const json& view = detail::field(j, "ontology_view");
    for (const auto& e : detail::array_field(view, "entities")) ct.ontology_view.entities.push_back(e.get<std::string>());
    for (const auto& r : detail::array_field(view, "relationships"))
      ct.ontology_view.relationships.push_back(r.get<std::string>());
    return ct;
  }
  throw Error(Errc::MalformedDocument, "unknown twin type '" + type + "'");
}

void write_registry(const TwinRegistry& registry, json& doc) {
  json pes = json::array(), models = json::array(), flows = json::array(), twins = json::array();
  for (const auto& [_, pe] : registry.physical_entities()) pes.push_back(to_json(pe));
  for (const auto& [_, m] : registry.models()) models.push_back(to_json(m));
  for (const auto& [_, f] : registry.flows()) flows.push_back(to_json(f));
  for (const auto& [_, t] : registry.twins()) twins.push_back(to_json(t));
  doc["physical_entities"] = std::move(pes);
  doc["models"] = std::move(models);
  doc["flows"] = std::move(flows);
  doc["twins"] = std::move(twins);
}

TwinRegistry read_registry_unchecked(const json& doc) {
  TwinRegistry registry;
  auto dup = [](const std::string& what, const std::string& id) {
    return Error(Errc::SchemaViolation, what + " '" + id + "' appears twice");
  };
  for (const auto& j : detail::array_field(doc, "physical_entities")) {
    auto pe = physical_entity_from_json(j);
    if (registry.find_physical(pe.id)) throw dup("physical entity", pe.id);
    registry.insert_unchecked(std::move(pe));
  }
  for (const auto& j : detail::array_field(doc, "models")) {
    auto m = model_from_json(j);
    if (registry.find_model(m.id)) throw dup("model", m.id);
    registry.insert_unchecked(std::move(m));
  }
  for (const auto& j : detail::array_field(doc, "flows")) {
    auto f = flow_from_json(j);
    if (registry.find_flow(f.id)) throw dup("flow", f.id);
    registry.insert_unchecked(std::move(f));
  }
  for (const auto& j : detail::array_field(doc, "twins")) {
    auto t = twin_from_json(j);
    if (registry.find_twin(twin_id(t))) throw dup("twin", twin_id(t));
    registry.insert_unchecked(std::move(t));
  }
  return registry;
}

}  // namespace ctkg
