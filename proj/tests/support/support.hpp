#pragma once

// Shared fixtures, random generators and brute-force oracles for the unit
// and acceptance tests. Oracles deliberately avoid the engine's own
// algorithms (no impact_set, no Matcher, no condition_holds).

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ctkg/ontology.hpp"
#include "ctkg/optimizer.hpp"
#include "ctkg/process.hpp"
#include "ctkg/query.hpp"
#include "ctkg/registry.hpp"
#include "ctkg/store.hpp"

namespace ctkg::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }
inline bool coin(Rng& rng, double p = 0.5) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

ModelFacets facets(std::string structure, std::string purpose, std::string theory,
                   std::string language, std::string tool, std::string method);

/// Aero-engine example: CAD/FEM/process models with versions, sensors,
/// suppliers, flows, a DT and a CT, a two-step process and one series.
StoreState aero_engine();

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---- twin registries ----

struct RegistryCase {
  KnowledgeGraph graph;
  TwinRegistry registry;
  std::string physical;
  std::vector<std::string> models;  // twin members, unsorted, may repeat
  std::vector<std::string> flows;
};

/// Up to `max_models` models with up to `max_versions` versions each and up
/// to `max_flows` flows whose endpoints lie inside the chosen twin members.
RegistryCase random_registry(Rng& rng, int max_models, int max_versions, int max_flows);

/// Random history of up to `max_versions` versions for a single model.
ModelAsset random_history(Rng& rng, int max_versions);

/// Direct enumeration of version counts and pairwise facet diffs.
ChurnMetrics churn_oracle(const ModelAsset& model, std::int64_t t_from, std::int64_t t_to);

// ---- graphs ----

/// `n` ModelObject entities and up to `m` depends_on edges (self loops and
/// parallel edges allowed).
KnowledgeGraph random_dependency_graph(Rng& rng, int n, int m);

/// Entities reaching `target` over edges of `kinds`, by Warshall closure.
std::set<std::string> impact_oracle(const KnowledgeGraph& graph, const std::string& target,
                                    const std::set<std::string>& kinds);

/// impact_oracle for every entity at once, from a single closure.
std::map<std::string, std::set<std::string>> impact_oracle_all(const KnowledgeGraph& graph,
                                                               const std::set<std::string>& kinds);

/// Small ontology (Part < ModelObject, Tool < Part, Site < IoTDomain) with
/// closure-eligible kinds depends_on and feeds, plus located_at.
KnowledgeGraph random_typed_graph(Rng& rng, int max_entities, int max_edges);

/// A query over random_typed_graph's ontology with exactly one closure edge.
Query random_pattern_query(Rng& rng);

/// Naive exhaustive homomorphism enumeration with post-hoc WHERE filtering.
ResultSet evaluate_oracle(const KnowledgeGraph& graph, const Query& query);

/// Random query text in the accepted grammar, with random spacing.
std::string sample_query_text(Rng& rng);

// ---- processes ----

/// Closed-form completion time per activity: longest path through the
/// producer/consumer DAG, honoring constant gates. Infinity when unreachable.
std::map<std::string, double> completion_oracle(const ProcessModel& process);

struct OptCase {
  ProcessModel process;
  ParameterSpace space;
  Objective objective;
  std::int64_t grid = 1;
};

/// Random DAG process with r0 / gate parameters and at most `max_grid` points.
OptCase random_opt_case(Rng& rng, std::int64_t max_grid);

/// Every grid point of the space, in lexicographic index order.
std::vector<Assignment> grid_points(const ParameterSpace& space);

}  // namespace ctkg::testing
