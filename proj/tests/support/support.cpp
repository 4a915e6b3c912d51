#include "support.hpp"

#include <stdlib.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "ctkg/error.hpp"

namespace ctkg::testing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const char* const kFacetWords[] = {"", "a", "b"};

std::string random_facet(Rng& rng) { return kFacetWords[pick(rng, 3)]; }

ModelFacets random_facets(Rng& rng) {
  return facets(random_facet(rng), random_facet(rng), random_facet(rng), random_facet(rng),
                random_facet(rng), random_facet(rng));
}

}  // namespace

ModelFacets facets(std::string structure, std::string purpose, std::string theory,
                   std::string language, std::string tool, std::string method) {
  return ModelFacets{std::move(structure), std::move(purpose), std::move(theory),
                     std::move(language),  std::move(tool),    std::move(method)};
}

StoreState aero_engine() {
  StoreState s;
  auto& g = s.graph;
  auto& r = s.registry;
  g.define_concept({"SimulationModel", std::string(kModelObject), {{"solver", ValueKind::Text}}});
  g.define_concept({"SensorNode", std::string(kIoTDomain),
                    {{"mass", ValueKind::Decimal}, {"vendor", ValueKind::Text}}});
  g.define_relation_kind({"calibrated_against", std::string(kModelObject), std::string(kIoTDomain), false});

  r.register_physical_entity("urn:ct:pe/aeroengine", "twin-spool turbofan", {AspectTag::Management});
  r.register_model(g, {"urn:ct:model/aeroengine-cad",
                       facets("casing and rotor geometry", "design", "solid geometry", "STEP", "CATIA", "parametric design"),
                       1, "2024-01-10T08:00:00Z", "initial geometry", std::nullopt, "ModelObject"});
  r.register_model(g, {"urn:ct:model/aeroengine-fem",
                       facets("loads in, stresses out", "structural analysis",
                              "differential-algebraic system of equations", "Modelica", "OpenModelica", "finite elements"),
                       1, "2024-01-12T08:00:00Z", "coarse mesh", std::nullopt, "SimulationModel"});
  r.register_model(g, {"urn:ct:model/assembly-process",
                       facets("activities and artifacts", "assembly planning", "discrete events", "IDEF0", "MetaGraph", "workflow"),
                       2, "2024-02-01T08:00:00Z", "", std::nullopt, "ModelObject"});
  r.snapshot_version("urn:ct:model/aeroengine-fem", 2,
                     facets("loads in, stresses out", "structural analysis",
                            "differential-algebraic system of equations", "Modelica", "Dymola", "finite elements"),
                     "tool migration", "2024-03-01T08:00:00Z");
  r.snapshot_version("urn:ct:model/aeroengine-fem", 5,
                     facets("loads and temperatures in, stresses out", "thermo-structural analysis",
                            "differential-algebraic system of equations", "Modelica", "Dymola", "finite elements"),
                     "thermal coupling", "2024-06-01T08:00:00Z");

  g.add_entity("SensorNode", "urn:ct:entity/egt-sensor", {{"vendor", std::string("acme")}, {"mass", 0.25}},
               {AspectTag::SecurityPrivacy});
  g.add_entity("SensorNode", "urn:ct:entity/n1-sensor", {{"vendor", std::string("globex")}, {"mass", 0.4}});
  g.add_entity("Organization", "urn:ct:entity/acme", {{"label", std::string("Acme Sensors")}});
  g.add_entity("IoTDomain", "urn:ct:entity/engine-health", {{"label", std::string("engine health monitoring")}});
  g.add_entity("KGObject", "urn:ct:entity/fem-manual", {{"manuals", std::string("FEM user guide")}});

  g.add_relationship("depends_on", "urn:ct:model/aeroengine-fem", "urn:ct:model/aeroengine-cad");
  g.add_relationship("depends_on", "urn:ct:model/assembly-process", "urn:ct:model/aeroengine-fem");
  g.add_relationship("represents", "urn:ct:model/aeroengine-cad", "urn:ct:entity/engine-health");
  g.add_relationship("supplied_by", "urn:ct:entity/egt-sensor", "urn:ct:entity/acme");
  g.add_relationship("documented_by", "urn:ct:model/aeroengine-fem", "urn:ct:entity/fem-manual");
  g.add_relationship("calibrated_against", "urn:ct:model/aeroengine-fem", "urn:ct:entity/egt-sensor",
                     {{"campaign", std::string("2024-q1")}});

  r.add_comm_flow("urn:ct:flow/egt-feed", "urn:ct:pe/aeroengine", "urn:ct:model/aeroengine-fem",
                  DataType::RealTime, {"egt", "n1"});
  r.add_comm_flow("urn:ct:flow/design-data", "urn:ct:model/aeroengine-cad", "urn:ct:model/aeroengine-fem",
                  DataType::OffLine, {"mesh"});

  std::vector<std::string> models{"urn:ct:model/aeroengine-cad", "urn:ct:model/aeroengine-fem"};
  std::vector<std::string> flows{"urn:ct:flow/egt-feed", "urn:ct:flow/design-data"};
  r.add_twin(r.assemble_digital_twin("urn:ct:twin/aeroengine-dt", "urn:ct:pe/aeroengine", models, flows));
  r.add_twin(r.assemble_cognitive_twin(g, "urn:ct:twin/aeroengine-ct", "urn:ct:pe/aeroengine", models, flows));

  ProcessModel p;
  p.id = "urn:ct:proc/blade-assembly";
  p.activities["design"] = {"design", {"requirements"}, {}, {"drawing"}, {"cad-station"}, 6.0, {RateLaw::Constant, 2.0, 0.0}};
  p.activities["machine"] = {"machine", {"drawing"}, {"gate"}, {"blade"}, {"cnc"}, 4.0, {RateLaw::ExpDecay, 2.0, 0.1}};
  p.external_inputs = {"requirements"};
  p.control_bindings["gate"] = 1.0;
  s.processes.emplace(p.id, p);

  append_points(s, {{"urn:ct:pe/aeroengine", "2024-05-01T10:00:00Z", "egt", 612.5},
                    {"urn:ct:pe/aeroengine", "2024-05-01T10:00:01Z", "egt", 613.0},
                    {"urn:ct:pe/aeroengine", "2024-05-01T10:00:00Z", "n1", 0.92}});
  return s;
}

TempDir::TempDir() {
  std::string pattern = (std::filesystem::temp_directory_path() / "ctkg-test-XXXXXX").string();
  if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

// ---- twin registries ----

RegistryCase random_registry(Rng& rng, int max_models, int max_versions, int max_flows) {
  RegistryCase c;
  c.physical = "urn:ct:pe/p0";
  c.registry.register_physical_entity(c.physical, "root", {});
  c.registry.register_physical_entity("urn:ct:pe/p1", "other", {});

  int n_models = static_cast<int>(pick(rng, static_cast<std::size_t>(max_models) + 1));
  std::vector<std::string> all_models;
  for (int i = 0; i < n_models; ++i) {
    std::string id = "urn:ct:model/m" + std::to_string(i);
    std::int64_t t = static_cast<std::int64_t>(pick(rng, 4));
    c.registry.register_model(c.graph, {id, random_facets(rng), t, "2024-01-01T00:00:00Z", "", std::nullopt, "ModelObject"});
    int extra = static_cast<int>(pick(rng, static_cast<std::size_t>(max_versions)));
    for (int v = 0; v < extra; ++v) {
      t += 1 + static_cast<std::int64_t>(pick(rng, 3));
      c.registry.snapshot_version(id, t, random_facets(rng), "v", "2024-01-02T00:00:00Z");
    }
    all_models.push_back(id);
  }
  for (int i = 0; i < n_models * 2; ++i) {
    const auto& a = all_models[pick(rng, all_models.size())];
    const auto& b = all_models[pick(rng, all_models.size())];
    c.graph.add_relationship("depends_on", a, b);
  }
  for (const auto& m : all_models)
    if (coin(rng, 0.6)) c.models.push_back(m);
  if (!c.models.empty() && coin(rng, 0.3)) c.models.push_back(c.models.front());
  std::shuffle(c.models.begin(), c.models.end(), rng);

  std::vector<std::string> endpoints = c.models;
  endpoints.push_back(c.physical);
  std::sort(endpoints.begin(), endpoints.end());
  endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());
  int n_flows = endpoints.size() < 2 ? 0 : static_cast<int>(pick(rng, static_cast<std::size_t>(max_flows) + 1));
  for (int i = 0; i < n_flows; ++i) {
    std::size_t a = pick(rng, endpoints.size());
    std::size_t b = (a + 1 + pick(rng, endpoints.size() - 1)) % endpoints.size();
    std::string id = "urn:ct:flow/f" + std::to_string(i);
    c.registry.add_comm_flow(id, endpoints[a], endpoints[b], coin(rng) ? DataType::RealTime : DataType::OffLine,
                             {"s" + std::to_string(pick(rng, 5))});
    c.flows.push_back(id);
  }
  std::shuffle(c.flows.begin(), c.flows.end(), rng);
  return c;
}

ModelAsset random_history(Rng& rng, int max_versions) {
  ModelAsset m{"urn:ct:model/h", "urn:ct:model/h", {}};
  int n = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(max_versions)));
  std::int64_t t = static_cast<std::int64_t>(pick(rng, 3));
  for (int i = 0; i < n; ++i) {
    m.versions.push_back({m.id, t, "2024-01-01T00:00:00Z", random_facets(rng), ""});
    t += 1 + static_cast<std::int64_t>(pick(rng, 3));
  }
  return m;
}

ChurnMetrics churn_oracle(const ModelAsset& model, std::int64_t t_from, std::int64_t t_to) {
  ChurnMetrics out{model.id, t_from, t_to, 0, {}, 0.0};
  for (auto name : ModelFacets::kNames) out.facets_changed[std::string(name)] = 0;
  std::vector<const ModelVersion*> inside;
  for (const auto& v : model.versions)
    if (t_from <= v.timespot && v.timespot <= t_to) inside.push_back(&v);
  out.version_count = static_cast<std::int64_t>(inside.size());
  for (std::size_t i = 1; i < inside.size(); ++i) {
    const ModelFacets& a = inside[i - 1]->facets;
    const ModelFacets& b = inside[i]->facets;
    if (a.structure != b.structure) ++out.facets_changed["structure"];
    if (a.purpose != b.purpose) ++out.facets_changed["purpose"];
    if (a.theory != b.theory) ++out.facets_changed["theory"];
    if (a.language != b.language) ++out.facets_changed["language"];
    if (a.tool != b.tool) ++out.facets_changed["tool"];
    if (a.method != b.method) ++out.facets_changed["method"];
  }
  out.velocity = static_cast<double>(out.version_count) / static_cast<double>(t_to - t_from + 1);
  return out;
}

// ---- graphs ----

KnowledgeGraph random_dependency_graph(Rng& rng, int n, int m) {
  KnowledgeGraph g;
  for (int i = 0; i < n; ++i) g.add_entity("ModelObject", "urn:ct:entity/n" + std::to_string(i));
  for (int i = 0; i < m && n > 0; ++i) {
    g.add_relationship("depends_on", "urn:ct:entity/n" + std::to_string(pick(rng, n)),
                       "urn:ct:entity/n" + std::to_string(pick(rng, n)));
  }
  return g;
}

namespace {

// reach[i][j]: j reachable from i in one or more steps over `kinds`.
std::vector<std::vector<char>> warshall(const KnowledgeGraph& g, const std::vector<std::string>& ids,
                                        const std::set<std::string>& kinds) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  std::size_t n = ids.size();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (const auto& [_, r] : g.relationships())
    if (kinds.contains(r.kind)) reach[index.at(r.source)][index.at(r.target)] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;
  return reach;
}

std::vector<std::string> entity_ids(const KnowledgeGraph& g) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : g.entities()) ids.push_back(id);
  return ids;
}

}  // namespace

std::set<std::string> impact_oracle(const KnowledgeGraph& graph, const std::string& target,
                                    const std::set<std::string>& kinds) {
  auto ids = entity_ids(graph);
  auto reach = warshall(graph, ids, kinds);
  std::size_t t = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), target) - ids.begin());
  std::set<std::string> out;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (reach[i][t]) out.insert(ids[i]);
  return out;
}

std::map<std::string, std::set<std::string>> impact_oracle_all(const KnowledgeGraph& graph,
                                                               const std::set<std::string>& kinds) {
  auto ids = entity_ids(graph);
  auto reach = warshall(graph, ids, kinds);
  std::map<std::string, std::set<std::string>> out;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto& set = out[ids[t]];
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (reach[i][t]) set.insert(ids[i]);
  }
  return out;
}

namespace {

const char* const kTypedConcepts[] = {"ModelObject", "Part", "Tool", "IoTDomain", "Site"};
const char* const kTypedKinds[] = {"depends_on", "feeds", "located_at", "represents"};
const char* const kClosureKinds[] = {"depends_on", "feeds"};
const char* const kAttrNames[] = {"score", "weight", "label", "active", "missing"};

Value random_value_of(Rng& rng, ValueKind kind) {
  switch (kind) {
    case ValueKind::Integer: return static_cast<std::int64_t>(pick(rng, 7)) - 3;
    case ValueKind::Decimal: return static_cast<double>(pick(rng, 9)) * 0.5 - 2.0;
    case ValueKind::Boolean: return coin(rng);
    default: return std::string(1, static_cast<char>('a' + pick(rng, 3)));
  }
}

Value random_literal(Rng& rng) {
  switch (pick(rng, 4)) {
    case 0: return static_cast<std::int64_t>(pick(rng, 7)) - 3;
    case 1: return static_cast<double>(pick(rng, 9)) * 0.5 - 2.0;
    case 2: return coin(rng);
    default: return std::string(1, static_cast<char>('a' + pick(rng, 3)));
  }
}

}  // namespace

KnowledgeGraph random_typed_graph(Rng& rng, int max_entities, int max_edges) {
  KnowledgeGraph g;
  g.define_concept({"Part", "ModelObject",
                    {{"active", ValueKind::Boolean}, {"score", ValueKind::Integer}, {"weight", ValueKind::Decimal}}});
  g.define_concept({"Tool", "Part", {}});
  g.define_concept({"Site", "IoTDomain", {{"score", ValueKind::Decimal}}});
  g.define_relation_kind({"feeds", "Part", "Part", true});
  g.define_relation_kind({"located_at", "ModelObject", "IoTDomain", false});

  int n = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(max_entities)));
  for (int i = 0; i < n; ++i) {
    std::string concept_name = kTypedConcepts[pick(rng, 5)];
    AttrMap attrs;
    for (const auto& a : g.effective_attributes(concept_name))
      if (coin(rng, 0.7)) attrs[a.name] = random_value_of(rng, a.kind);
    g.add_entity(concept_name, "urn:ct:entity/e" + std::to_string(i), std::move(attrs));
  }
  auto ids = entity_ids(g);
  int m = static_cast<int>(pick(rng, static_cast<std::size_t>(max_edges) + 1));
  for (int i = 0; i < m; ++i) {
    const RelationKind& kind = *g.find_kind(kTypedKinds[pick(rng, 4)]);
    std::vector<std::string> sources, targets;
    for (const auto& id : ids) {
      const std::string& c = g.find_entity(id)->concept_name;
      if (g.is_a(c, kind.source_concept)) sources.push_back(id);
      if (g.is_a(c, kind.target_concept)) targets.push_back(id);
    }
    if (sources.empty() || targets.empty()) continue;
    g.add_relationship(kind.name, sources[pick(rng, sources.size())], targets[pick(rng, targets.size())]);
  }
  return g;
}

Query random_pattern_query(Rng& rng) {
  Query q;
  std::size_t n_nodes = 2 + pick(rng, 2);
  const char* const vars[] = {"a", "b", "c"};
  for (std::size_t i = 0; i < n_nodes; ++i) {
    NodePattern node{std::nullopt, kTypedConcepts[pick(rng, 5)]};
    if (coin(rng, 0.85)) node.variable = vars[pick(rng, 3)];
    q.nodes.push_back(node);
  }
  if (!q.nodes.front().variable) q.nodes.front().variable = "a";
  std::size_t closure_at = pick(rng, n_nodes - 1);
  for (std::size_t i = 0; i + 1 < n_nodes; ++i) {
    EdgePattern e;
    e.closure = i == closure_at;
    e.kind = e.closure ? kClosureKinds[pick(rng, 2)] : kTypedKinds[pick(rng, 4)];
    e.direction = coin(rng) ? EdgeDirection::Forward : EdgeDirection::Reverse;
    q.edges.push_back(e);
  }
  std::vector<std::string> bound;
  for (const auto& n : q.nodes)
    if (n.variable && std::find(bound.begin(), bound.end(), *n.variable) == bound.end()) bound.push_back(*n.variable);

  std::size_t n_where = pick(rng, 3);
  for (std::size_t i = 0; i < n_where; ++i) {
    q.where.push_back({bound[pick(rng, bound.size())], kAttrNames[pick(rng, 5)],
                       static_cast<CompareOp>(pick(rng, 6)), random_literal(rng)});
  }
  if (coin(rng, 0.3)) {
    q.count = true;
    q.returns = {bound[pick(rng, bound.size())]};
  } else {
    std::vector<std::string> shuffled = bound;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.resize(1 + pick(rng, shuffled.size()));
    q.returns = shuffled;
  }
  return q;
}

namespace {

bool oracle_is_a(const KnowledgeGraph& g, std::string concept_name, const std::string& ancestor) {
  while (true) {
    if (concept_name == ancestor) return true;
    const ConceptDef* def = g.find_concept(concept_name);
    if (!def || !def->parent) return false;
    concept_name = *def->parent;
  }
}

template <class T>
bool apply_op(const T& a, const T& b, CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return !(a == b);
    case CompareOp::Lt: return a < b;
    case CompareOp::Le: return !(b < a);
    case CompareOp::Gt: return b < a;
    case CompareOp::Ge: return !(a < b);
  }
  return false;
}

bool oracle_condition(const AttrMap& attrs, const Condition& c) {
  auto it = attrs.find(c.attr);
  if (it == attrs.end()) return false;
  const Value& v = it->second;
  const Value& lit = c.literal;
  auto numeric = [](const Value& x) { return std::holds_alternative<std::int64_t>(x) || std::holds_alternative<double>(x); };
  auto as_double = [](const Value& x) {
    return std::holds_alternative<std::int64_t>(x) ? static_cast<double>(std::get<std::int64_t>(x)) : std::get<double>(x);
  };
  if (numeric(v) && numeric(lit)) {
    if (std::holds_alternative<std::int64_t>(v) && std::holds_alternative<std::int64_t>(lit))
      return apply_op(std::get<std::int64_t>(v), std::get<std::int64_t>(lit), c.op);
    return apply_op(as_double(v), as_double(lit), c.op);
  }
  if (std::holds_alternative<std::string>(v) && std::holds_alternative<std::string>(lit))
    return apply_op(std::get<std::string>(v), std::get<std::string>(lit), c.op);
  if (std::holds_alternative<bool>(v) && std::holds_alternative<bool>(lit))
    return apply_op(std::get<bool>(v), std::get<bool>(lit), c.op);
  return false;
}

}  // namespace

ResultSet evaluate_oracle(const KnowledgeGraph& graph, const Query& q) {
  auto ids = entity_ids(graph);
  std::map<std::string, std::vector<std::vector<char>>> closure;
  for (const auto& e : q.edges)
    if (e.closure && !closure.contains(e.kind)) closure[e.kind] = warshall(graph, ids, {e.kind});

  auto direct = [&](const std::string& kind, std::size_t from, std::size_t to) {
    for (const auto& [_, r] : graph.relationships())
      if (r.kind == kind && r.source == ids[from] && r.target == ids[to]) return true;
    return false;
  };

  std::set<std::vector<std::string>> rows;
  std::vector<std::size_t> at(q.nodes.size(), 0);
  std::size_t n = ids.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      at[i] = rest % n;
      rest /= n;
    }
    bool ok = true;
    std::map<std::string, std::size_t> binding;
    for (std::size_t i = 0; i < q.nodes.size() && ok; ++i) {
      const auto& node = q.nodes[i];
      ok = oracle_is_a(graph, graph.find_entity(ids[at[i]])->concept_name, node.concept_name);
      if (ok && node.variable) {
        auto [it, inserted] = binding.emplace(*node.variable, at[i]);
        ok = inserted || it->second == at[i];
      }
    }
    for (std::size_t i = 0; i < q.edges.size() && ok; ++i) {
      const auto& e = q.edges[i];
      std::size_t from = e.direction == EdgeDirection::Forward ? at[i] : at[i + 1];
      std::size_t to = e.direction == EdgeDirection::Forward ? at[i + 1] : at[i];
      ok = e.closure ? closure.at(e.kind)[from][to] != 0 : direct(e.kind, from, to);
    }
    for (const auto& c : q.where) {
      if (!ok) break;
      ok = oracle_condition(graph.find_entity(ids[binding.at(c.variable)])->attrs, c);
    }
    if (!ok) continue;
    std::vector<std::string> row;
    for (const auto& v : q.returns) row.push_back(ids[binding.at(v)]);
    rows.insert(row);
  }
  ResultSet out;
  out.columns = q.returns;
  if (q.count) {
    out.count = static_cast<std::int64_t>(rows.size());
  } else {
    out.rows.assign(rows.begin(), rows.end());
  }
  return out;
}

namespace {

std::string space(Rng& rng, bool required = false) {
  static const char* const pads[] = {"", " ", "  ", "\t", "\n", " \n  "};
  std::string s = pads[pick(rng, 6)];
  if (required && s.empty()) s = " ";
  return s;
}

std::string random_identifier(Rng& rng) {
  static const char* const fixed[] = {"m", "x1", "_y", "Part", "ModelObject", "depends_on", "a_b", "MATCHES", "Count"};
  static const std::set<std::string> keywords = {"MATCH", "WHERE", "AND", "RETURN", "COUNT", "true", "false"};
  if (coin(rng)) return fixed[pick(rng, 9)];
  static const std::string first = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
  static const std::string rest = first + "0123456789";
  while (true) {
    std::string s(1, first[pick(rng, first.size())]);
    std::size_t len = pick(rng, 6);
    for (std::size_t i = 0; i < len; ++i) s += rest[pick(rng, rest.size())];
    if (!keywords.contains(s)) return s;
  }
}

std::string random_literal_text(Rng& rng) {
  switch (pick(rng, 6)) {
    case 0: return std::to_string(static_cast<long long>(pick(rng, 2000)) - 1000);
    case 1: return std::to_string(pick(rng, 100)) + "." + std::to_string(pick(rng, 1000));
    case 2: return "-" + std::to_string(pick(rng, 10)) + "." + std::to_string(pick(rng, 100)) + "e" +
                   (coin(rng) ? "-" : "") + std::to_string(pick(rng, 5));
    case 3: return coin(rng) ? "true" : "false";
    default: {
      static const std::string alphabet = "ab Z09_-.:;\"\\()[]*<>=!'";
      std::string s = "\"";
      std::size_t len = pick(rng, 8);
      for (std::size_t i = 0; i < len; ++i) {
        char c = alphabet[pick(rng, alphabet.size())];
        if (c == '"' || c == '\\') s += '\\';
        s += c;
      }
      return s + "\"";
    }
  }
}

}  // namespace

std::string sample_query_text(Rng& rng) {
  static const char* const ops[] = {"=", "!=", "<", "<=", ">", ">="};
  std::string out = space(rng) + "MATCH" + space(rng, true);
  std::vector<std::string> bound;
  std::size_t n_nodes = 1 + pick(rng, 4);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    if (i > 0) {
      std::string kind = random_identifier(rng);
      std::string star = coin(rng, 0.3) ? space(rng) + "*" : "";
      if (coin(rng)) {
        out += space(rng) + "-" + space(rng) + "[" + space(rng) + kind + star + space(rng) + "]" + space(rng) + "-" +
               space(rng) + ">" + space(rng);
      } else {
        out += space(rng) + "<" + space(rng) + "-" + space(rng) + "[" + space(rng) + kind + star + space(rng) + "]" +
               space(rng) + "-" + space(rng);
      }
    }
    out += "(" + space(rng);
    if (coin(rng, 0.8) || (i + 1 == n_nodes && bound.empty())) {
      std::string var = bound.empty() || coin(rng, 0.7) ? random_identifier(rng) : bound[pick(rng, bound.size())];
      if (std::find(bound.begin(), bound.end(), var) == bound.end()) bound.push_back(var);
      out += var + space(rng) + ":" + space(rng);
    }
    out += random_identifier(rng) + space(rng) + ")";
  }
  std::size_t n_where = pick(rng, 4);
  for (std::size_t i = 0; i < n_where; ++i) {
    out += space(rng, true) + (i == 0 ? "WHERE" : "AND") + space(rng, true);
    out += bound[pick(rng, bound.size())] + space(rng) + "." + space(rng) + random_identifier(rng) + space(rng) +
           ops[pick(rng, 6)] + space(rng) + random_literal_text(rng);
  }
  out += space(rng, true) + "RETURN" + space(rng, true);
  if (coin(rng, 0.3)) {
    out += "COUNT" + space(rng) + "(" + space(rng) + bound[pick(rng, bound.size())] + space(rng) + ")";
  } else {
    std::size_t n_ret = 1 + pick(rng, bound.size());
    for (std::size_t i = 0; i < n_ret; ++i) {
      if (i > 0) out += space(rng) + "," + space(rng);
      out += bound[pick(rng, bound.size())];
    }
  }
  return out + space(rng);
}

// ---- processes ----

std::map<std::string, double> completion_oracle(const ProcessModel& p) {
  std::map<std::string, std::string> producer;
  for (const auto& [id, a] : p.activities)
    for (const auto& o : a.outputs) producer[o] = id;

  std::map<std::string, double> done;
  std::function<double(const std::string&)> complete = [&](const std::string& id) -> double {
    if (auto it = done.find(id); it != done.end()) return it->second;
    const Activity& a = p.activities.at(id);
    double ready = 0.0;
    for (const auto& in : a.inputs)
      if (producer.contains(in)) ready = std::max(ready, complete(producer.at(in)));
    double start = ready;
    for (const auto& c : a.controls) {
      const auto& binding = p.control_bindings.at(c);
      if (const double* v = std::get_if<double>(&binding)) {
        if (*v == 0.0) start = kInf;
        continue;
      }
      // Earliest sample at or after `start` leaves the gate open, or the one in force at `start`.
      const auto& series = std::get<std::vector<SeriesPoint>>(binding);
      double open_at = kInf;
      double current = 0.0;
      for (const auto& pt : series) {
        if (pt.time <= start) {
          current = pt.value;
          continue;
        }
        if (current != 0.0) break;
        if (pt.value != 0.0) {
          open_at = pt.time;
          break;
        }
      }
      if (current != 0.0) open_at = start;
      start = std::max(start, open_at);
    }
    double duration;
    if (a.dynamics.kind == RateLaw::Constant) {
      duration = a.work / a.dynamics.r0;
    } else {
      double x = a.dynamics.lambda * a.work / a.dynamics.r0;
      duration = x >= 1.0 ? kInf : -std::log(1.0 - x) / a.dynamics.lambda;
    }
    return done[id] = start + duration;
  };
  for (const auto& [id, _] : p.activities) complete(id);
  return done;
}

OptCase random_opt_case(Rng& rng, std::int64_t max_grid) {
  static const double rates[] = {0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};
  OptCase c;
  c.process.id = "urn:ct:proc/random";
  std::size_t n = 1 + pick(rng, 4);
  for (std::size_t i = 0; i < n; ++i) {
    Activity a;
    a.id = "a" + std::to_string(i);
    a.outputs = {"o" + std::to_string(i)};
    for (std::size_t j = 0; j < i; ++j)
      if (coin(rng, 0.5)) a.inputs.insert("o" + std::to_string(j));
    if (a.inputs.empty() && coin(rng)) {
      a.inputs.insert("raw");
      c.process.external_inputs.insert("raw");
    }
    a.work = static_cast<double>(2 * (1 + pick(rng, 4)));
    if (coin(rng, 0.3)) {
      a.dynamics = {RateLaw::ExpDecay, rates[pick(rng, 7)], 0.1 * static_cast<double>(1 + pick(rng, 5))};
    } else {
      a.dynamics = {RateLaw::Constant, rates[pick(rng, 7)], 0.0};
    }
    c.process.activities[a.id] = a;
  }

  for (const auto& [id, _] : c.process.activities) {
    if (!coin(rng, 0.7)) continue;
    std::vector<double> domain;
    for (double r : rates)
      if (coin(rng, 0.5)) domain.push_back(r);
    if (domain.empty()) domain.push_back(rates[pick(rng, 7)]);
    if (c.grid * static_cast<std::int64_t>(domain.size()) > max_grid) continue;
    c.grid *= static_cast<std::int64_t>(domain.size());
    c.space.params.push_back({"r0_" + id, {ParamTarget::Kind::ActivityRate, id}, domain});
  }
  if (coin(rng, 0.3) && c.grid * 2 <= max_grid) {
    std::string gated = "a" + std::to_string(pick(rng, n));
    c.process.activities[gated].controls.insert("gate");
    c.process.control_bindings["gate"] = 1.0;
    c.grid *= 2;
    c.space.params.push_back({"gate", {ParamTarget::Kind::ControlConstant, "gate"}, {0.0, 1.0}});
  }
  if (c.space.params.empty()) {
    c.space.params.push_back({"r0_a0", {ParamTarget::Kind::ActivityRate, "a0"}, {1.0, 2.0, 3.0}});
    c.grid = 3;
  }
  if (coin(rng)) {
    c.objective.metric = Metric::WeightedCompletion;
    static const double weights[] = {0.0, 0.5, 1.0, 2.0};
    for (const auto& [id, _] : c.process.activities) c.objective.weights[id] = weights[pick(rng, 4)];
  }
  return c;
}

std::vector<Assignment> grid_points(const ParameterSpace& space) {
  std::vector<Assignment> out{Assignment{}};
  for (const auto& param : space.params) {
    std::vector<Assignment> next;
    for (const auto& partial : out) {
      for (double v : param.domain) {
        Assignment a = partial;
        a[param.name] = v;
        next.push_back(std::move(a));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace ctkg::testing
