#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctkg/ontology.hpp"
#include "ctkg/value.hpp"

namespace ctkg {

// Query language (canonical form):
//
//   query   := "MATCH" pattern ["WHERE" cond ("AND" cond)*] "RETURN" ret
//   pattern := node (edge node)*
//   node    := "(" [var ":"] concept ")"
//   edge    := "-[" kind ["*"] "]->" | "<-[" kind ["*"] "]-"
//   cond    := var "." attr op literal        op in = != < <= > >=
//   ret     := var ("," var)* | "COUNT" "(" var ")"
//
// Matching is homomorphic: distinct variables may bind the same entity.
// A starred edge matches one or more hops of the same kind.

struct NodePattern {
  std::optional<std::string> variable;
  std::string concept_name;
  friend bool operator==(const NodePattern&, const NodePattern&) = default;
};

enum class EdgeDirection { Forward, Reverse };

struct EdgePattern {
  std::string kind;
  EdgeDirection direction = EdgeDirection::Forward;
  bool closure = false;
  friend bool operator==(const EdgePattern&, const EdgePattern&) = default;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(CompareOp op) noexcept;

struct Condition {
  std::string variable;
  std::string attr;
  CompareOp op = CompareOp::Eq;
  Value literal;
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct Query {
  std::vector<NodePattern> nodes;  // edges.size() + 1 entries
  std::vector<EdgePattern> edges;
  std::vector<Condition> where;
  std::vector<std::string> returns;
  bool count = false;  // RETURN COUNT(returns[0])
  friend bool operator==(const Query&, const Query&) = default;
};

/// Throws Error(PARSE_ERROR) with 1-based line/column and the expected-token
/// set. Never aborts on any input.
Query parse_query(std::string_view text);
std::string format_query(const Query& query);

/// Evaluates `cond` against an attribute map. Missing attributes and
/// mismatched types compare false; integers and decimals compare numerically.
bool condition_holds(const Condition& cond, const AttrMap& attrs);

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // distinct, sorted
  std::optional<std::int64_t> count;           // set for COUNT queries
  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

/// Throws UNKNOWN_CONCEPT, UNKNOWN_KIND or CLOSURE_NOT_ALLOWED.
/// COUNT(v) counts the distinct entities bound to v.
ResultSet evaluate(const KnowledgeGraph& graph, const Query& query);

/// {"columns": [...], "rows": [[...]]} or {"count": n}
nlohmann::json to_json(const ResultSet& result);

/// Every entity from which `entity_id` is reachable through edges of the
/// given kinds. The start entity is included only if it lies on a cycle.
std::vector<std::string> impact_set(const KnowledgeGraph& graph, std::string_view entity_id,
                                    const std::set<std::string>& kinds);

/// Alternating entity / relationship ids, starting and ending with an entity.
struct Path {
  std::vector<std::string> elements;
  std::size_t length() const { return elements.size() / 2; }
  friend bool operator==(const Path&, const Path&) = default;
};

/// Sorted by (length, lexicographic element sequence).
using PathSet = std::vector<Path>;

/// All simple forward paths from src to dst of length <= max_len.
PathSet trace_paths(const KnowledgeGraph& graph, std::string_view src, std::string_view dst,
                    const std::set<std::string>& kinds, int max_len);

nlohmann::json to_json(const PathSet& paths);

}  // namespace ctkg
