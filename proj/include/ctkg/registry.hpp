#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctkg/ontology.hpp"
#include "ctkg/value.hpp"

namespace ctkg {

struct PhysicalEntity {
  std::string id;
  std::string description;
  AspectSet aspect_tags;
  friend bool operator==(const PhysicalEntity&, const PhysicalEntity&) = default;
};

/// The six descriptors of a virtual model. All are always present; empty
/// text is allowed.
struct ModelFacets {
  std::string structure;
  std::string purpose;
  std::string theory;
  std::string language;
  std::string tool;
  std::string method;

  static constexpr std::array<std::string_view, 6> kNames = {
      "structure", "purpose", "theory", "language", "tool", "method"};

  const std::string& get(std::size_t index) const;

  friend bool operator==(const ModelFacets&, const ModelFacets&) = default;
};

struct ModelVersion {
  std::string model_id;
  std::int64_t timespot = 0;
  std::string wall_time;  // ISO-8601
  ModelFacets facets;
  std::string note;
  friend bool operator==(const ModelVersion&, const ModelVersion&) = default;
};

struct ModelAsset {
  std::string id;
  std::string entity_ref;
  std::vector<ModelVersion> versions;  // strictly increasing timespots

  const ModelVersion& latest() const { return versions.back(); }
  friend bool operator==(const ModelAsset&, const ModelAsset&) = default;
};

enum class DataType { RealTime, OffLine };

std::string_view to_string(DataType dtype) noexcept;
/// Throws BAD_DTYPE.
DataType parse_dtype(std::string_view text);

struct CommFlow {
  std::string id;
  std::string entity_start;
  std::string entity_dest;
  DataType dtype = DataType::RealTime;
  std::vector<std::string> content_schema;
  friend bool operator==(const CommFlow&, const CommFlow&) = default;
};

/// A model as seen by a digital twin: latest facets only.
struct ModelView {
  std::string id;
  std::string entity_ref;
  ModelFacets facets;
  friend bool operator==(const ModelView&, const ModelView&) = default;
};

struct DigitalTwin {
  std::string id;
  PhysicalEntity physical;
  std::vector<ModelView> models;  // sorted by id
  std::vector<CommFlow> flows;    // sorted by id
  friend bool operator==(const DigitalTwin&, const DigitalTwin&) = default;
};

/// Ids of the knowledge-graph subgraph induced by a twin's model entities.
struct OntologyView {
  std::vector<std::string> entities;
  std::vector<std::string> relationships;
  friend bool operator==(const OntologyView&, const OntologyView&) = default;
};

struct CognitiveTwin {
  std::string id;
  PhysicalEntity physical;
  std::vector<ModelAsset> models;  // full version history, sorted by id
  std::vector<CommFlow> flows;
  OntologyView ontology_view;
  friend bool operator==(const CognitiveTwin&, const CognitiveTwin&) = default;
};

using Twin = std::variant<DigitalTwin, CognitiveTwin>;

const std::string& twin_id(const Twin& twin);

/// Drops version history, timespots and the ontology view.
DigitalTwin project_to_dt(const CognitiveTwin& ct);

struct ChurnMetrics {
  std::string model_id;
  std::int64_t t_from = 0;
  std::int64_t t_to = 0;
  std::int64_t version_count = 0;
  std::map<std::string, std::int64_t> facets_changed;
  double velocity = 0.0;
  friend bool operator==(const ChurnMetrics&, const ChurnMetrics&) = default;
};

struct ModelRegistration {
  std::string id;
  ModelFacets facets;
  std::int64_t timespot = 0;
  std::string wall_time;
  std::string note;
  /// Existing ModelObject entity to link; defaults to `id`, created if absent.
  std::optional<std::string> entity_ref;
  /// Concept used when the backing entity has to be created.
  std::string concept_name = "ModelObject";
};

/// Physical entities, model assets, comm flows and assembled twins.
/// Mutations are all-or-nothing, like KnowledgeGraph's.
class TwinRegistry {
 public:
  const PhysicalEntity& register_physical_entity(std::string_view id, std::string description,
                                                 AspectSet tags = {});
  /// Creates (or links) the backing ModelObject entity in `graph`.
  const ModelAsset& register_model(KnowledgeGraph& graph, ModelRegistration reg);
  const ModelVersion& snapshot_version(std::string_view model_id, std::int64_t timespot,
                                       ModelFacets facets, std::string note,
                                       std::string wall_time);
  const CommFlow& add_comm_flow(std::string_view id, std::string_view start,
                                std::string_view dest, DataType dtype,
                                std::vector<std::string> content_schema);

  DigitalTwin assemble_digital_twin(std::string_view id, std::string_view physical,
                                    const std::vector<std::string>& model_ids,
                                    const std::vector<std::string>& flow_ids) const;
  CognitiveTwin assemble_cognitive_twin(const KnowledgeGraph& graph, std::string_view id,
                                        std::string_view physical,
                                        const std::vector<std::string>& model_ids,
                                        const std::vector<std::string>& flow_ids) const;
  const Twin& add_twin(Twin twin);

  ChurnMetrics evolution_dynamics(std::string_view model_id, std::int64_t t_from,
                                  std::int64_t t_to) const;

  const PhysicalEntity* find_physical(std::string_view id) const;
  const ModelAsset* find_model(std::string_view id) const;
  const CommFlow* find_flow(std::string_view id) const;
  const Twin* find_twin(std::string_view id) const;
  /// Throws NOT_FOUND.
  const ModelAsset& model(std::string_view id) const;

  /// True if any model asset is backed by this graph entity.
  bool references_entity(std::string_view entity_id) const;

  const std::map<std::string, PhysicalEntity, std::less<>>& physical_entities() const { return physical_; }
  const std::map<std::string, ModelAsset, std::less<>>& models() const { return models_; }
  const std::map<std::string, CommFlow, std::less<>>& flows() const { return flows_; }
  const std::map<std::string, Twin, std::less<>>& twins() const { return twins_; }

  /// Registry invariants plus entity_ref resolution against `graph`.
  ValidationReport validate(const KnowledgeGraph& graph) const;

  void insert_unchecked(PhysicalEntity pe);
  void insert_unchecked(ModelAsset model);
  void insert_unchecked(CommFlow flow);
  void insert_unchecked(Twin twin);

 private:
  void check_twin_members(std::string_view id, std::string_view physical,
                          const std::vector<std::string>& model_ids,
                          const std::vector<std::string>& flow_ids) const;

  std::map<std::string, PhysicalEntity, std::less<>> physical_;
  std::map<std::string, ModelAsset, std::less<>> models_;
  std::map<std::string, CommFlow, std::less<>> flows_;
  std::map<std::string, Twin, std::less<>> twins_;
};

nlohmann::json to_json(const PhysicalEntity& pe);
nlohmann::json to_json(const ModelFacets& facets);
nlohmann::json to_json(const ModelVersion& version);
nlohmann::json to_json(const ModelAsset& model);
nlohmann::json to_json(const CommFlow& flow);
nlohmann::json to_json(const DigitalTwin& dt);
nlohmann::json to_json(const CognitiveTwin& ct);
nlohmann::json to_json(const Twin& twin);
nlohmann::json to_json(const ChurnMetrics& metrics);

PhysicalEntity physical_entity_from_json(const nlohmann::json& j);
/// Throws SCHEMA_VIOLATION if any of the six facets is absent.
ModelFacets facets_from_json(const nlohmann::json& j);
ModelVersion version_from_json(const nlohmann::json& j);
ModelAsset model_from_json(const nlohmann::json& j);
CommFlow flow_from_json(const nlohmann::json& j);
Twin twin_from_json(const nlohmann::json& j);

void write_registry(const TwinRegistry& registry, nlohmann::json& doc);
TwinRegistry read_registry_unchecked(const nlohmann::json& doc);

}  // namespace ctkg
