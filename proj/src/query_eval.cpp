#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <tuple>

#include "ctkg/error.hpp"
#include "ctkg/query.hpp"

namespace ctkg {

namespace {

using nlohmann::json;

template <class T>
bool compare(const T& a, const T& b, CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return a != b;
    case CompareOp::Lt: return a < b;
    case CompareOp::Le: return a <= b;
    case CompareOp::Gt: return a > b;
    case CompareOp::Ge: return a >= b;
  }
  return false;
}

std::optional<double> as_number(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

// Entities reachable from `from` in one or more hops over `kind`.
std::vector<std::string> closure_from(const KnowledgeGraph& graph, const std::string& from,
                                      const std::string& kind, EdgeDirection dir) {
  std::set<std::string> seen;
  std::deque<std::string> frontier{from};
  while (!frontier.empty()) {
    std::string at = std::move(frontier.front());
    frontier.pop_front();
    const auto& rels = dir == EdgeDirection::Forward ? graph.outgoing(at) : graph.incoming(at);
    for (const auto& rid : rels) {
      const Relationship& r = *graph.find_relationship(rid);
      if (r.kind != kind) continue;
      const std::string& next = dir == EdgeDirection::Forward ? r.target : r.source;
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  return {seen.begin(), seen.end()};
}

class Matcher {
 public:
  Matcher(const KnowledgeGraph& graph, const Query& q) : graph_(graph), q_(q) {
    for (const auto& n : q.nodes)
      if (n.variable && !var_index_.contains(*n.variable)) {
        std::size_t idx = var_index_.size();
        var_index_.emplace(*n.variable, idx);
      }
    binding_.assign(var_index_.size(), nullptr);
  }

  void run(const std::function<void(const std::vector<const Entity*>&)>& emit) {
    emit_ = &emit;
    for (const auto& [_, e] : graph_.entities()) visit(0, e);
  }

 private:
  void visit(std::size_t node, const Entity& e) {
    const NodePattern& pat = q_.nodes[node];
    if (!graph_.is_a(e.concept_name, pat.concept_name)) return;
    std::size_t slot = 0;
    bool assigned_here = false;
    if (pat.variable) {
      slot = var_index_.at(*pat.variable);
      if (binding_[slot] && binding_[slot] != &e) return;
      if (!binding_[slot]) {
        binding_[slot] = &e;
        assigned_here = true;
      }
    }
    if (node + 1 == q_.nodes.size()) {
      (*emit_)(binding_);
    } else {
      for (const Entity* next : step(e, q_.edges[node])) visit(node + 1, *next);
    }
    if (assigned_here) binding_[slot] = nullptr;
  }

  std::vector<const Entity*> step(const Entity& from, const EdgePattern& edge) {
    std::vector<const Entity*> out;
    if (edge.closure) {
      auto key = std::make_tuple(from.id, edge.kind, edge.direction);
      auto it = closure_cache_.find(key);
      if (it == closure_cache_.end())
        it = closure_cache_.emplace(key, closure_from(graph_, from.id, edge.kind, edge.direction)).first;
      for (const auto& id : it->second)
        if (const Entity* e = graph_.find_entity(id)) out.push_back(e);
      return out;
    }
    const auto& rels = edge.direction == EdgeDirection::Forward ? graph_.outgoing(from.id)
                                                                : graph_.incoming(from.id);
    for (const auto& rid : rels) {
      const Relationship& r = *graph_.find_relationship(rid);
      if (r.kind != edge.kind) continue;
      const std::string& next = edge.direction == EdgeDirection::Forward ? r.target : r.source;
      if (const Entity* e = graph_.find_entity(next)) out.push_back(e);
    }
    return out;
  }

 public:
  std::size_t slot(const std::string& var) const { return var_index_.at(var); }

 private:
  const KnowledgeGraph& graph_;
  const Query& q_;
  std::map<std::string, std::size_t> var_index_;
  std::vector<const Entity*> binding_;
  const std::function<void(const std::vector<const Entity*>&)>* emit_ = nullptr;
  std::map<std::tuple<std::string, std::string, EdgeDirection>, std::vector<std::string>> closure_cache_;
};

}  // namespace

bool condition_holds(const Condition& cond, const AttrMap& attrs) {
  auto it = attrs.find(cond.attr);
  if (it == attrs.end()) return false;
  const Value& value = it->second;
  auto lhs = as_number(value);
  auto rhs = as_number(cond.literal);
  if (lhs && rhs) {
    auto* li = std::get_if<std::int64_t>(&value);
    auto* ri = std::get_if<std::int64_t>(&cond.literal);
    if (li && ri) return compare(*li, *ri, cond.op);
    return compare(*lhs, *rhs, cond.op);
  }
  if (value.index() != cond.literal.index()) return false;
  if (auto* s = std::get_if<std::string>(&value)) return compare(*s, std::get<std::string>(cond.literal), cond.op);
  if (auto* b = std::get_if<bool>(&value)) return compare(*b, std::get<bool>(cond.literal), cond.op);
  return false;
}

ResultSet evaluate(const KnowledgeGraph& graph, const Query& q) {
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    if (!graph.find_concept(q.nodes[i].concept_name))
      throw Error(Errc::UnknownConcept, "unknown concept '" + q.nodes[i].concept_name + "'");
    if (i < q.edges.size()) {
      const auto& e = q.edges[i];
      const RelationKind* kind = graph.find_kind(e.kind);
      if (!kind) throw Error(Errc::UnknownKind, "unknown relation kind '" + e.kind + "'");
      if (e.closure && !kind->transitive_closure_eligible)
        throw Error(Errc::ClosureNotAllowed, "relation kind '" + e.kind + "' is not closure-eligible");
    }
  }

  Matcher matcher(graph, q);
  std::vector<std::pair<std::size_t, const Condition*>> conds;
  for (const auto& c : q.where) conds.emplace_back(matcher.slot(c.variable), &c);
  std::vector<std::size_t> projection;
  for (const auto& v : q.returns) projection.push_back(matcher.slot(v));

  std::set<std::vector<std::string>> rows;
  matcher.run([&](const std::vector<const Entity*>& binding) {
    for (const auto& [slot, cond] : conds)
      if (!condition_holds(*cond, binding[slot]->attrs)) return;
    std::vector<std::string> row;
    row.reserve(projection.size());
    for (auto slot : projection) row.push_back(binding[slot]->id);
    rows.insert(std::move(row));
  });

  ResultSet out;
  out.columns = q.returns;
  if (q.count) {
    out.count = static_cast<std::int64_t>(rows.size());
  } else {
    out.rows.assign(rows.begin(), rows.end());
  }
  return out;
}

json to_json(const ResultSet& result) {
  if (result.count) return {{"count", *result.count}};
  return {{"columns", result.columns}, {"rows", result.rows}};
}

std::vector<std::string> impact_set(const KnowledgeGraph& graph, std::string_view entity_id,
                                    const std::set<std::string>& kinds) {
  graph.entity(entity_id);
  if (kinds.empty()) throw Error(Errc::BadArgument, "impact_set needs at least one relation kind");
  for (const auto& k : kinds)
    if (!graph.find_kind(k)) throw Error(Errc::UnknownKind, "unknown relation kind '" + k + "'");

  std::set<std::string> seen;
  std::deque<std::string> frontier{std::string(entity_id)};
  while (!frontier.empty()) {
    std::string at = std::move(frontier.front());
    frontier.pop_front();
    for (const auto& rid : graph.incoming(at)) {
      const Relationship& r = *graph.find_relationship(rid);
      if (!kinds.contains(r.kind)) continue;
      if (seen.insert(r.source).second) frontier.push_back(r.source);
    }
  }
  return {seen.begin(), seen.end()};
}

PathSet trace_paths(const KnowledgeGraph& graph, std::string_view src, std::string_view dst,
                    const std::set<std::string>& kinds, int max_len) {
  graph.entity(src);
  graph.entity(dst);
  if (max_len < 1) throw Error(Errc::BadLimit, "max_len must be at least 1");
  PathSet out;
  if (src == dst) return out;

  std::vector<std::string> elements{std::string(src)};
  std::set<std::string> on_path{std::string(src)};
  std::function<void(const std::string&, int)> dfs = [&](const std::string& at, int depth) {
    for (const auto& rid : graph.outgoing(at)) {
      const Relationship& r = *graph.find_relationship(rid);
      if (!kinds.contains(r.kind) || on_path.contains(r.target)) continue;
      elements.push_back(rid);
      elements.push_back(r.target);
      if (r.target == dst) {
        out.push_back({elements});
      } else if (depth + 1 < max_len) {
        on_path.insert(r.target);
        dfs(r.target, depth + 1);
        on_path.erase(r.target);
      }
      elements.pop_back();
      elements.pop_back();
    }
  };
  dfs(std::string(src), 0);
  std::sort(out.begin(), out.end(), [](const Path& a, const Path& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    return a.elements < b.elements;
  });
  return out;
}

json to_json(const PathSet& paths) {
  json out = json::array();
  for (const auto& p : paths) out.push_back(p.elements);
  return out;
}

}  // namespace ctkg
