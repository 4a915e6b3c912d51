// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ctkg/error.hpp"
#include "ctkg/optimizer.hpp"
#include "ctkg/process.hpp"
#include "ctkg/query.hpp"
#include "ctkg/registry.hpp"
#include "ctkg/service.hpp"
#include "ctkg/store.hpp"
#include "support.hpp"

namespace {

using namespace ctkg;
using namespace ctkg::testing;
using nlohmann::json;

// Thrown by check() with the first mismatch.
struct Mismatch {
  std::string what;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Mismatch{what};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ---- 1. CT projection equals the DT assembled from the same inputs ----

std::string projection() {
  Rng rng(101);
  for (int i = 0; i < 500; ++i) {
    RegistryCase c = random_registry(rng, 20, 10, 15);
    const std::string id = "urn:ct:twin/t" + std::to_string(i);
    CognitiveTwin ct = c.registry.assemble_cognitive_twin(c.graph, id, c.physical, c.models, c.flows);
    DigitalTwin dt = c.registry.assemble_digital_twin(id, c.physical, c.models, c.flows);
    check(canonical(to_json(project_to_dt(ct))) == canonical(to_json(dt)), "case " + std::to_string(i));
  }
  return "500 registries";
}

// ---- 2. impact_set equals the Warshall closure ----

std::string impact() {
  Rng rng(202);
  const std::set<std::string> kinds{"depends_on"};
  std::size_t targets = 0;
  for (int i = 0; i < 200; ++i) {
    int n = 1 + static_cast<int>(pick(rng, 200));
    int m = static_cast<int>(pick(rng, 601));
    KnowledgeGraph g = random_dependency_graph(rng, n, m);
    auto oracle = impact_oracle_all(g, kinds);
    for (const auto& [target, expected] : oracle) {
      auto got = impact_set(g, target, kinds);
      check(std::set<std::string>(got.begin(), got.end()) == expected && got.size() == expected.size(),
            "graph " + std::to_string(i) + " target " + target);
      ++targets;
    }
  }
  return "200 graphs, " + std::to_string(targets) + " targets";
}

// ---- 3. parse/format round trip ----

std::string round_trip() {
  Rng rng(303);
  for (int i = 0; i < 1000; ++i) {
    std::string text = sample_query_text(rng);
    Query q = parse_query(text);
    check(parse_query(format_query(q)) == q, "query: " + text);
  }
  return "1000 queries";
}

// ---- 4. evaluation equals naive homomorphism enumeration ----

std::string evaluation() {
  Rng rng(404);
  int queries = 0;
  for (int i = 0; i < 100; ++i) {
    KnowledgeGraph g = random_typed_graph(rng, 30, 90);
    for (int k = 0; k < 5; ++k) {
      Query q = random_pattern_query(rng);
      check(evaluate(g, q) == evaluate_oracle(g, q), "graph " + std::to_string(i) + ": " + format_query(q));
      ++queries;
    }
  }
  return "100 graphs, " + std::to_string(queries) + " queries";
}

// ---- 5. simulator against closed forms ----

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

ProcessModel single(double work, DynamicsSpec dyn) {
  ProcessModel p;
  p.id = "urn:ct:proc/single";
  p.activities["a"] = {"a", {"in"}, {}, {"out"}, {}, work, dyn};
  p.external_inputs = {"in"};
  return p;
}

std::string analytics() {
  Rng rng(505);
  SimConfig cfg;
  cfg.step = 0.01;
  double worst_const = 0, worst_exp = 0, worst_chain = 0;
  for (int i = 0; i < 200; ++i) {
    double w = uniform(rng, 0.1, 100), r0 = uniform(rng, 0.1, 10);
    auto trace = simulate(single(w, {RateLaw::Constant, r0, 0}), cfg, false);
    double err = std::abs(completion_times(trace).at("a") - w / r0);
    worst_const = std::max(worst_const, err);
    check(err <= 1e-9, "constant w=" + fmt(w) + " r0=" + fmt(r0));
  }
  for (int i = 0; i < 200; ++i) {
    double lambda = uniform(rng, 0.01, 1), r0 = uniform(rng, 0.1, 10);
    double w = uniform(rng, 0.01, 0.99) * r0 / lambda;
    auto trace = simulate(single(w, {RateLaw::ExpDecay, r0, lambda}), cfg, false);
    double expected = -std::log(1 - lambda * w / r0) / lambda;
    double err = std::abs(completion_times(trace).at("a") - expected);
    worst_exp = std::max(worst_exp, err);
    check(err <= 1e-6, "exp_decay w=" + fmt(w) + " r0=" + fmt(r0) + " lambda=" + fmt(lambda));
  }
  for (int i = 0; i < 100; ++i) {
    int n = 2 + static_cast<int>(pick(rng, 6));
    ProcessModel serial, parallel;
    serial.id = "urn:ct:proc/serial";
    parallel.id = "urn:ct:proc/parallel";
    serial.external_inputs = parallel.external_inputs = {"x0"};
    double sum = 0, max = 0;
    for (int k = 0; k < n; ++k) {
      std::string id = "a" + std::to_string(k);
      double w = uniform(rng, 0.5, 20), r0 = uniform(rng, 0.5, 4);
      DynamicsSpec dyn{RateLaw::Constant, r0, 0};
      double d = w / r0;
      if (coin(rng)) {
        double lambda = uniform(rng, 0.01, 0.5);
        w = std::min(w, 0.9 * r0 / lambda);
        dyn = {RateLaw::ExpDecay, r0, lambda};
        d = -std::log(1 - lambda * w / r0) / lambda;
      }
      sum += d;
      max = std::max(max, d);
      serial.activities[id] = {id, {"x" + std::to_string(k)}, {}, {"x" + std::to_string(k + 1)}, {}, w, dyn};
      parallel.activities[id] = {id, {"x0"}, {}, {"y" + std::to_string(k)}, {}, w, dyn};
    }
    double es = std::abs(makespan(simulate(serial, cfg, false)) - sum);
    double ep = std::abs(makespan(simulate(parallel, cfg, false)) - max);
    worst_chain = std::max({worst_chain, es, ep});
    check(es <= 1e-6, "serial case " + std::to_string(i));
    check(ep <= 1e-6, "parallel case " + std::to_string(i));
  }
  for (int i = 0; i < 50; ++i) {
    double lambda = uniform(rng, 0.01, 1), r0 = uniform(rng, 0.1, 10);
    double w = r0 / lambda * (i == 0 ? 1.0 : uniform(rng, 1.0, 3.0));
    bool thrown = false;
    try {
      simulate(single(w, {RateLaw::ExpDecay, r0, lambda}), cfg, false);
    } catch (const Error& e) {
      thrown = e.code() == Errc::HorizonExceeded;
    }
    check(thrown, "unreachable work did not raise HORIZON_EXCEEDED");
  }
  return "max err constant " + fmt(worst_const) + ", exp " + fmt(worst_exp) + ", chains " + fmt(worst_chain);
}

// ---- 6. determinism ----

// Canonical output, or the error code when the run is rejected.
std::string outcome(const std::function<json()>& f) {
  try {
    return canonical(f());
  } catch (const Error& e) {
    return std::string(to_string(e.code()));
  }
}

std::string determinism() {
  Rng rng(606);
  StoreState aero = aero_engine();
  const ProcessModel& blade = aero.processes.begin()->second;
  SimConfig cfg;
  cfg.step = 0.5;
  check(canonical(to_json(simulate(blade, cfg))) == canonical(to_json(simulate(blade, cfg))), "aero simulate");
  int solved = 0;
  for (int i = 0; i < 20; ++i) {
    OptCase c = random_opt_case(rng, 100);
    SimConfig sc;
    sc.step = 0.25;
    std::uint64_t seed = rng();
    std::int64_t budget = 1 + static_cast<std::int64_t>(pick(rng, static_cast<std::size_t>(c.grid) + 2));
    auto sim = [&] { return to_json(simulate(c.process, sc)); };
    check(outcome(sim) == outcome(sim), "simulate case " + std::to_string(i));
    auto a = outcome([&] { return to_json(optimize(c.process, c.space, c.objective, budget, seed, sc)); });
    auto b = outcome([&] { return to_json(optimize(c.process, c.space, c.objective, budget, seed, sc)); });
    auto t = outcome([&] { return to_json(optimize(c.process, c.space, c.objective, budget, seed, sc, {4})); });
    if (a.front() == '{') ++solved;
    check(a == b, "optimize case " + std::to_string(i));
    check(a == t, "optimize threads case " + std::to_string(i));
  }
  return "aero + 20 random jobs, " + std::to_string(solved) + " optimized";
}

// ---- 7. optimizer reaches the grid minimum ----

std::string optimizer() {
  Rng rng(707);
  SimConfig cfg;
  for (int i = 0; i < 50; ++i) {
    OptCase c = random_opt_case(rng, 100);
    double best = std::numeric_limits<double>::infinity();
    auto grid = grid_points(c.space);
    for (const auto& a : grid) best = std::min(best, evaluate_candidate(c.process, c.space, a, c.objective, cfg));
    std::int64_t budget = c.grid + static_cast<std::int64_t>(pick(rng, 5));
    OptResult r = optimize(c.process, c.space, c.objective, budget, rng(), cfg);
    std::string tag = "case " + std::to_string(i);
    check(r.best_value == best, tag + ": best " + fmt(r.best_value) + " vs grid " + fmt(best));
    check(evaluate_candidate(c.process, c.space, r.best_assignment, c.objective, cfg) == r.best_value,
          tag + ": best assignment does not reproduce best value");
    check(r.history.size() == grid.size(), tag + ": grid not fully covered");
    double running = std::numeric_limits<double>::infinity(), prev = running;
    for (const auto& h : r.history) {
      running = std::min(running, h.value);
      check(running <= prev, tag + ": running best increased");
      prev = running;
    }
    check(running == r.best_value, tag + ": history minimum differs from best");
  }
  return "50 jobs";
}

// ---- 8. churn ----

std::string churn() {
  Rng rng(808);
  int windows = 0;
  for (int i = 0; i < 200; ++i) {
    ModelAsset m = random_history(rng, 50);
    TwinRegistry r;
    r.insert_unchecked(m);
    std::int64_t last = m.latest().timespot + 3;
    for (int k = 0; k < 5; ++k) {
      std::int64_t a = static_cast<std::int64_t>(pick(rng, static_cast<std::size_t>(last)));
      std::int64_t b = a + static_cast<std::int64_t>(pick(rng, static_cast<std::size_t>(last)));
      check(r.evolution_dynamics(m.id, a, b) == churn_oracle(m, a, b),
            "history " + std::to_string(i) + " window [" + std::to_string(a) + "," + std::to_string(b) + "]");
      ++windows;
    }
  }
  return "200 histories, " + std::to_string(windows) + " windows";
}

// ---- 9. service ----

struct Create {
  std::string path;
  json body;
};

ModelFacets random_facets(Rng& rng) {
  static const char* const words[] = {"geometry", "loads", "control", "assembly", "thermal"};
  auto w = [&] { return std::string(words[pick(rng, 5)]); };
  return facets(w(), w(), w(), w(), w(), w());
}

json process_json(Rng& rng, const std::string& id) {
  ProcessModel p;
  p.id = id;
  int n = 1 + static_cast<int>(pick(rng, 3));
  p.external_inputs = {"x0"};
  for (int k = 0; k < n; ++k) {
    std::string a = "step" + std::to_string(k);
    p.activities[a] = {a, {"x" + std::to_string(k)}, {}, {"x" + std::to_string(k + 1)}, {"crew"},
                       1.0 + static_cast<double>(pick(rng, 8)), {RateLaw::Constant, 1.0 + static_cast<double>(pick(rng, 3)), 0}};
  }
  return to_json(p);
}

std::vector<Create> mixed_resources(Rng& rng) {
  std::vector<Create> out;
  for (int i = 0; i < 5; ++i)
    out.push_back({"/concepts", {{"name", "Gauge" + std::to_string(i)}, {"parent", "IoTDomain"},
                                 {"attributes", {{{"name", "reading"}, {"kind", "decimal"}}}}}});
  for (int i = 0; i < 3; ++i)
    out.push_back({"/relation_kinds", {{"name", "monitors_" + std::to_string(i)}, {"source_concept", "ModelObject"},
                                       {"target_concept", "IoTDomain"}, {"transitive_closure_eligible", false}}});
  for (int i = 0; i < 10; ++i)
    out.push_back({"/physical_entities", {{"id", "urn:ct:pe/asset" + std::to_string(i)},
                                          {"description", "asset " + std::to_string(i)},
                                          {"aspect_tags", i % 2 ? json{"management"} : json::array()}}});
  for (int i = 0; i < 20; ++i)
    out.push_back({"/models", {{"id", "urn:ct:model/m" + std::to_string(i)}, {"facets", to_json(random_facets(rng))},
                               {"timespot", static_cast<int>(pick(rng, 5))}, {"wall_time", "2024-04-01T00:00:00Z"},
                               {"note", "n" + std::to_string(i)}}});
  for (int i = 0; i < 20; ++i)
    out.push_back({"/entities", {{"id", "urn:ct:entity/g" + std::to_string(i)}, {"concept", "Gauge" + std::to_string(i % 5)},
                                 {"attrs", {{"reading", static_cast<double>(pick(rng, 1000)) / 8.0}}}}});
  for (int i = 0; i < 20; ++i) {
    std::string src = "urn:ct:model/m" + std::to_string(pick(rng, 20));
    if (i % 2)
      out.push_back({"/relationships", {{"kind", "depends_on"}, {"source", src},
                                        {"target", "urn:ct:model/m" + std::to_string(pick(rng, 20))}}});
    else
      out.push_back({"/relationships", {{"kind", "monitors_" + std::to_string(pick(rng, 3))}, {"source", src},
                                        {"target", "urn:ct:entity/g" + std::to_string(pick(rng, 20))},
                                        {"attrs", {{"since", "2024"}}}}});
  }
  for (int i = 0; i < 12; ++i)
    out.push_back({"/flows", {{"id", "urn:ct:flow/f" + std::to_string(i)},
                              {"entity_start", "urn:ct:pe/asset" + std::to_string(i % 10)},
                              {"entity_dest", "urn:ct:model/m" + std::to_string(i)},
                              {"dtype", i % 3 ? "real_time" : "off_line"},
                              {"content_schema", {"temp", "pressure"}}}});
  for (int i = 0; i < 6; ++i)
    out.push_back({"/twins", {{"id", "urn:ct:twin/t" + std::to_string(i)}, {"type", i % 2 ? "ct" : "dt"},
                              {"physical", "urn:ct:pe/asset" + std::to_string(i)},
                              {"models", {"urn:ct:model/m" + std::to_string(i), "urn:ct:model/m" + std::to_string(i + 10)}},
                              {"flows", {"urn:ct:flow/f" + std::to_string(i)}}}});
  for (int i = 0; i < 4; ++i)
    out.push_back({"/processes", process_json(rng, "urn:ct:proc/p" + std::to_string(i))});
  return out;
}

// Mirrors the service's lookup for a created resource.
json lookup(const StoreState& s, const std::string& path, const std::string& id) {
  if (path == "/concepts") return to_json(*s.graph.find_concept(id));
  if (path == "/relation_kinds") return to_json(*s.graph.find_kind(id));
  if (path == "/entities") return to_json(*s.graph.find_entity(id));
  if (path == "/relationships") return to_json(*s.graph.find_relationship(id));
  if (path == "/physical_entities") return to_json(*s.registry.find_physical(id));
  if (path == "/models") return to_json(*s.registry.find_model(id));
  if (path == "/flows") return to_json(*s.registry.find_flow(id));
  if (path == "/twins") return to_json(*s.registry.find_twin(id));
  return to_json(s.processes.at(id));
}

const char* create_op(const std::string& path) {
  if (path == "/concepts") return "define_concept";
  if (path == "/relation_kinds") return "define_relation_kind";
  if (path == "/entities") return "add_entity";
  if (path == "/relationships") return "add_relationship";
  if (path == "/physical_entities") return "register_physical_entity";
  if (path == "/models") return "register_model";
  if (path == "/flows") return "add_comm_flow";
  if (path == "/twins") return "add_twin";
  return "add_process";
}

std::string service() {
  TempDir dir;
  Store::init(dir.path());
  Store store(dir.path(), Store::Mode::Write);
  Service svc(store);
  int port = svc.start();
  httplib::Client client("127.0.0.1", port);
  client.set_keep_alive(true);
  client.set_tcp_nodelay(true);

  Rng rng(909);
  StoreState mirror;
  auto creates = mixed_resources(rng);
  check(creates.size() == 100, "expected 100 resources");
  for (const auto& c : creates) {
    auto r = client.Post(c.path, c.body.dump(), "application/json");
    check(r && r->status == 201, "POST " + c.path + " " + c.body.dump() + " -> " + (r ? r->body : "no response"));
    std::string id = json::parse(r->body).at(c.path == "/concepts" || c.path == "/relation_kinds" ? "name" : "id");
    apply_mutation(mirror, create_op(c.path), c.body);
    auto g = client.Get(c.path + "/" + id);
    check(g && g->status == 200, "GET " + c.path + "/" + id);
    check(g->body == lookup(mirror, c.path, id).dump(), "read-back differs for " + id);
  }

  auto missing = client.Get("/entities/urn:ct:entity/absent");
  check(missing && missing->status == 404 && json::parse(missing->body)["error"] == "NOT_FOUND", "unknown id");

  auto bad = client.Post("/query", json{{"query", "MATCH (a:Gauge0)\nRETURN a b"}}.dump(), "application/json");
  check(bad && bad->status == 400, "malformed query status");
  json err = json::parse(bad->body);
  check(err["error"] == "PARSE_ERROR" && err["line"] == 2 && err["column"] == 10,
        "malformed query body " + bad->body);

  std::string csv = "entity_id,timestamp,signal,value\n";
  const int rows = 20, bad_line = 2 + static_cast<int>(pick(rng, rows));
  for (int k = 0; k < rows; ++k) {
    char ts[32];
    std::snprintf(ts, sizeof ts, "2024-05-01T10:00:%02dZ", k);
    csv += std::string("urn:ct:pe/asset1,") + ts + ",temp," + (k + 2 == bad_line ? "hot" : std::to_string(300 + k)) + "\n";
  }
  auto ing = client.Post("/ingest", csv, "text/csv");
  check(ing && ing->status == 200, "ingest status");
  json ij = json::parse(ing->body);
  check(ij["accepted"] == rows - 1, "ingest accepted " + ing->body);
  check(ij["rejected"].size() == 1 && ij["rejected"][0]["line"] == bad_line, "ingest rejected " + ing->body);

  client.stop();
  svc.stop();
  return "100 resources, port " + std::to_string(port);
}

// ---- 10. durability across checkpoint and reopen ----

std::string durability() {
  TempDir dir;
  Store::init(dir.path());
  Rng rng(1010);
  std::string before;
  int acked = 0, attempts = 0;
  {
    Store store(dir.path(), Store::Mode::Write);
    Service svc(store);
    httplib::Client client("127.0.0.1", svc.start());
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
  client.set_tcp_nodelay(true);

    std::vector<std::string> models, entities, rels, physical;
    int next = 0;
    auto post = [&](const std::string& path, const json& body) {
      auto r = client.Post(path, body.dump(), "application/json");
      check(static_cast<bool>(r), "no response from " + path);
      return r;
    };
    while (acked < 1000) {
      check(++attempts < 5000, "too few acknowledged mutations");
      std::string n = std::to_string(next++);
      httplib::Result r;
      std::size_t op = pick(rng, 9);
      if (physical.empty()) op = 0;
      switch (op) {
        case 0:
          r = post("/physical_entities", {{"id", "urn:ct:pe/p" + n}, {"description", "d" + n}});
          if (r->status == 201) physical.push_back("urn:ct:pe/p" + n);
          break;
        case 1:
        case 2:
          r = post("/models", {{"id", "urn:ct:model/m" + n}, {"facets", to_json(random_facets(rng))},
                               {"timespot", 1}, {"wall_time", "2024-01-01T00:00:00Z"}});
          if (r->status == 201) models.push_back("urn:ct:model/m" + n);
          break;
        case 3:
          r = post("/entities", {{"id", "urn:ct:entity/e" + n}, {"concept", "ModelObject"}});
          if (r->status == 201) entities.push_back("urn:ct:entity/e" + n);
          break;
        case 4: {
          if (models.empty()) continue;
          const auto& src = models[pick(rng, models.size())];
          std::string dst = !entities.empty() && coin(rng) ? entities[pick(rng, entities.size())]
                                                           : models[pick(rng, models.size())];
          r = post("/relationships", {{"kind", "depends_on"}, {"source", src}, {"target", dst}});
          if (r->status == 201) rels.push_back(json::parse(r->body)["id"]);
          break;
        }
        case 5:
          if (rels.empty()) continue;
          {
            std::size_t k = pick(rng, rels.size());
            r = client.Delete("/relationships/" + rels[k]);
            if (r && r->status == 200) rels.erase(rels.begin() + static_cast<std::ptrdiff_t>(k));
          }
          break;
        case 6:
          if (entities.empty()) continue;
          {
            std::size_t k = pick(rng, entities.size());
            r = client.Delete("/entities/" + entities[k]);  // IN_USE when referenced
            if (r && r->status == 200) entities.erase(entities.begin() + static_cast<std::ptrdiff_t>(k));
          }
          break;
        case 7:
          if (models.empty()) continue;
          r = post("/models/" + models[pick(rng, models.size())] + "/versions",
                   {{"timespot", 2 + next}, {"facets", to_json(random_facets(rng))}, {"wall_time", "2024-02-01T00:00:00Z"}});
          break;
        case 8: {
          if (models.empty()) continue;
          std::string pe = physical[pick(rng, physical.size())];
          std::string flow = "urn:ct:flow/f" + n;
          r = post("/flows", {{"id", flow}, {"entity_start", pe}, {"entity_dest", models[pick(rng, models.size())]},
                              {"dtype", "real_time"}, {"content_schema", {"temp"}}});
          if (r->status == 201 && coin(rng)) {
            ++acked;
            std::string csv = "entity_id,timestamp,signal,value\n" + pe + ",2024-05-01T10:00:00Z,temp," + n + "\n";
            r = client.Post("/ingest", csv, "text/csv");
          }
          break;
        }
      }
      check(static_cast<bool>(r), "request failed");
      if (r->status / 100 == 2) ++acked;
    }
    check(store.applied_seq() > Store::kCheckpointEvery, "checkpoint threshold not crossed");
    auto e = client.Get("/export");
    check(e && e->status == 200, "export before reopen");
    before = e->body;
    client.stop();
    svc.stop();
  }
  Store reopened(dir.path(), Store::Mode::Write);
  Service svc(reopened);
  httplib::Client client("127.0.0.1", svc.start());
  auto e = client.Get("/export");
  check(e && e->status == 200, "export after reopen");
  check(e->body == before, "export differs after reopen");
  client.stop();
  svc.stop();
  return std::to_string(acked) + " acknowledged of " + std::to_string(attempts) + " attempts";
}

struct Criterion {
  int number;
  const char* name;
  double limit_s;
  std::function<std::string()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "ct-projection-equals-dt", 5, projection},
      {2, "impact-equals-closure", 10, impact},
      {3, "query-round-trip", 5, round_trip},
      {4, "query-equals-enumeration", 30, evaluation},
      {5, "simulator-analytic", 5, analytics},
      {6, "deterministic-outputs", 5, determinism},
      {7, "optimizer-grid-minimum", 60, optimizer},
      {8, "churn-oracle", 5, churn},
      {9, "service-round-trip", 30, service},
      {10, "durable-reopen", 30, durability},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.run();
    } catch (const Mismatch& m) {
      ok = false;
      detail = m.what;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && elapsed >= c.limit_s) {
      ok = false;
      detail += " (over time limit)";
    }
    if (!ok) ++failed;
    std::printf("%s %2d %-26s %8.3fs / %4.0fs  %s\n", ok ? "PASS" : "FAIL", c.number, c.name, elapsed, c.limit_s,
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
