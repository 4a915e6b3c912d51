#include "ctkg/service.hpp"

#include <functional>
#include <optional>
#include <thread>

#include <httplib.h>

#include "ctkg/error.hpp"
#include "ctkg/optimizer.hpp"
#include "ctkg/query.hpp"
#include "json_util.hpp"

namespace ctkg {

namespace {

using nlohmann::json;

struct Collection {
  const char* path;  // "/entities"
  const char* kind;  // descriptor name
  const char* create_op;
  const char* id_key;
};

const Collection kCollections[] = {
    {"/concepts", "concept", "define_concept", "name"},
    {"/relation_kinds", "relation_kind", "define_relation_kind", "name"},
    {"/entities", "entity", "add_entity", "id"},
    {"/relationships", "relationship", "add_relationship", "id"},
    {"/physical_entities", "physical_entity", "register_physical_entity", "id"},
    {"/models", "model", "register_model", "id"},
    {"/flows", "flow", "add_comm_flow", "id"},
    {"/twins", "twin", "add_twin", "id"},
    {"/processes", "process", "add_process", "id"},
};

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) { send(res, http_status(e.code()), e.to_json()); }

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw Error(Errc::MalformedDocument, "request body is not valid JSON");
  return body;
}

std::string query_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw Error(Errc::BadArgument, std::string("missing query parameter '") + name + "'");
  return req.get_param_value(name);
}

std::int64_t integer_param(const httplib::Request& req, const char* name) {
  std::string text = query_param(req, name);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw Error(Errc::BadArgument, std::string("query parameter '") + name + "' must be an integer");
  return v;
}

// Looks up one resource of a collection in a state; null if absent.
std::optional<json> lookup(const StoreState& s, std::string_view collection, const std::string& id) {
  if (collection == "/concepts") {
    if (auto* c = s.graph.find_concept(id)) return to_json(*c);
  } else if (collection == "/relation_kinds") {
    if (auto* k = s.graph.find_kind(id)) return to_json(*k);
  } else if (collection == "/entities") {
    if (auto* e = s.graph.find_entity(id)) return to_json(*e);
  } else if (collection == "/relationships") {
    if (auto* r = s.graph.find_relationship(id)) return to_json(*r);
  } else if (collection == "/physical_entities") {
    if (auto* p = s.registry.find_physical(id)) return to_json(*p);
  } else if (collection == "/models") {
    if (auto* m = s.registry.find_model(id)) return to_json(*m);
  } else if (collection == "/flows") {
    if (auto* f = s.registry.find_flow(id)) return to_json(*f);
  } else if (collection == "/twins") {
    if (auto* t = s.registry.find_twin(id)) return to_json(*t);
  } else if (collection == "/processes") {
    auto it = s.processes.find(id);
    if (it != s.processes.end()) return to_json(it->second);
  }
  return std::nullopt;
}

std::set<std::string> kind_list(const httplib::Request& req) {
  std::set<std::string> out;
  if (!req.has_param("kinds")) return out;
  std::string text = req.get_param_value("kinds");
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    if (comma > pos) out.insert(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

}  // namespace

json service_descriptor() {
  json resources = json::array();
  for (const auto& c : kCollections) {
    resources.push_back({{"kind", c.kind},
                         {"collection", c.path},
                         {"template", std::string(c.path) + "/{id}"},
                         {"create", std::string("POST ") + c.path}});
  }
  return {{"format", kInterchangeFormat},
          {"version", kInterchangeVersion},
          {"uri_scheme", "urn:ct:{pe|model|flow|twin|entity|proc}/{local-id}"},
          {"resources", std::move(resources)},
          {"endpoints",
           {{"query", "POST /query"},
            {"ingest", "POST /ingest"},
            {"simulate", "POST /simulate"},
            {"optimize", "POST /optimize"},
            {"export", "GET /export"},
            {"versions", "GET|POST /models/{id}/versions"},
            {"dynamics", "GET /models/{id}/dynamics?from=&to="},
            {"neighbors", "GET /entities/{id}/neighbors?direction=&kind="},
            {"impact", "GET /entities/{id}/impact?kinds="},
            {"timeseries", "GET /timeseries?entity_id=&signal="}}}};
}

struct Service::Impl {
  Store& store;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Store& s) : store(s) {
    server.set_tcp_nodelay(true);
    routes();
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler guard(Handler fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_error(res, Error(Errc::MalformedDocument, e.what()));
      } catch (const std::exception& e) {
        send_error(res, Error(Errc::IoError, e.what()));
      }
    };
  }

  void create(const Collection& c, const httplib::Request& req, httplib::Response& res) {
    json result = store.mutate(c.create_op, parse_body(req));
    std::string id = result.at(c.id_key).get<std::string>();
    res.set_header("Location", std::string(c.path) + "/" + id);
    send(res, 201, result);
  }

  void routes() {
    auto& s = server;
    s.Get("/health", guard([](const auto&, auto& res) { send(res, 200, {{"status", "ok"}}); }));
    s.Get("/service/descriptor", guard([](const auto&, auto& res) { send(res, 200, service_descriptor()); }));

    // Specific sub-resources first: generic "/{collection}/(.+)" would swallow them.
    s.Get(R"(/models/(.+)/versions)", guard([this](const auto& req, auto& res) {
      std::string id = req.matches[1];
      json versions = store.read([&](const StoreState& st) {
        json out = json::array();
        for (const auto& v : st.registry.model(id).versions) out.push_back(to_json(v));
        return out;
      });
      send(res, 200, versions);
    }));
    s.Post(R"(/models/(.+)/versions)", guard([this](const auto& req, auto& res) {
      json args = parse_body(req);
      if (!args.is_object()) throw Error(Errc::BadArgument, "version body must be an object");
      args["model_id"] = std::string(req.matches[1]);
      json result = store.mutate("snapshot_version", std::move(args));
      res.set_header("Location", "/models/" + std::string(req.matches[1]) + "/versions");
      send(res, 201, result);
    }));
    s.Get(R"(/models/(.+)/dynamics)", guard([this](const auto& req, auto& res) {
      std::string id = req.matches[1];
      auto from = integer_param(req, "from");
      auto to = integer_param(req, "to");
      json out = store.read([&](const StoreState& st) { return to_json(st.registry.evolution_dynamics(id, from, to)); });
      send(res, 200, out);
    }));
    s.Get(R"(/entities/(.+)/neighbors)", guard([this](const auto& req, auto& res) {
      std::string id = req.matches[1];
      std::string dir = req.has_param("direction") ? req.get_param_value("direction") : "both";
      Direction d = dir == "out" ? Direction::Out : dir == "in" ? Direction::In : Direction::Both;
      if (dir != "out" && dir != "in" && dir != "both")
        throw Error(Errc::BadArgument, "direction must be out, in or both");
      std::optional<std::string> kind;
      if (req.has_param("kind")) kind = req.get_param_value("kind");
      json out = store.read([&](const StoreState& st) {
        if (kind && !st.graph.find_kind(*kind)) throw Error(Errc::UnknownKind, "unknown relation kind '" + *kind + "'");
        json arr = json::array();
        for (const auto& n : st.graph.neighbors(id, d, kind ? std::optional<std::string_view>(*kind) : std::nullopt))
          arr.push_back({{"relationship", to_json(n.relationship)}, {"entity", to_json(n.entity)}});
        return arr;
      });
      send(res, 200, out);
    }));
    s.Get(R"(/entities/(.+)/impact)", guard([this](const auto& req, auto& res) {
      std::string id = req.matches[1];
      auto kinds = kind_list(req);
      json out = store.read([&](const StoreState& st) { return json(impact_set(st.graph, id, kinds)); });
      send(res, 200, out);
    }));
    s.Delete(R"(/entities/(.+))", guard([this](const auto& req, auto& res) {
      send(res, 200, store.mutate("remove_entity", {{"id", std::string(req.matches[1])}}));
    }));
    s.Delete(R"(/relationships/(.+))", guard([this](const auto& req, auto& res) {
      send(res, 200, store.mutate("remove_relationship", {{"id", std::string(req.matches[1])}}));
    }));

    for (const auto& c : kCollections) {
      s.Post(c.path, guard([this, &c](const auto& req, auto& res) { create(c, req, res); }));
      s.Get(std::string(c.path) + "/(.+)", guard([this, &c](const auto& req, auto& res) {
        std::string id = req.matches[1];
        auto found = store.read([&](const StoreState& st) { return lookup(st, c.path, id); });
        if (!found) throw Error(Errc::NotFound, std::string(c.kind) + " '" + id + "' not found");
        send(res, 200, *found);
      }));
    }

    s.Get("/timeseries", guard([this](const auto& req, auto& res) {
      std::string entity = query_param(req, "entity_id");
      std::string signal = query_param(req, "signal");
      json out = store.read([&](const StoreState& st) {
        auto it = st.timeseries.find({entity, signal});
        if (it == st.timeseries.end())
          throw Error(Errc::NotFound, "no series for '" + entity + "' signal '" + signal + "'");
        json pts = json::array();
        for (const auto& p : it->second) pts.push_back({p.timestamp, p.value});
        return json{{"entity_id", entity}, {"signal", signal}, {"points", std::move(pts)}};
      });
      send(res, 200, out);
    }));

    s.Post("/query", guard([this](const auto& req, auto& res) {
      json body = parse_body(req);
      Query q = parse_query(detail::string_field(body, "query", Errc::BadArgument));
      json out = store.read([&](const StoreState& st) { return to_json(evaluate(st.graph, q)); });
      send(res, 200, out);
    }));
    s.Post("/ingest", guard([this](const auto& req, auto& res) {
      send(res, 200, store.mutate("ingest", {{"csv", req.body}}));
    }));
    s.Post("/simulate", guard([this](const auto& req, auto& res) {
      json body = parse_body(req);
      const json* bindings = detail::optional_field(body, "bindings");
      ProcessModel p = store.read([&](const StoreState& st) {
        return resolve_process(st, detail::field(body, "process", Errc::BadArgument), bindings ? *bindings : json());
      });
      const json* cfg = detail::optional_field(body, "config");
      SimConfig config = cfg ? config_from_json(*cfg) : SimConfig{};
      send(res, 200, to_json(simulate(p, config)));
    }));
    s.Post("/optimize", guard([this](const auto& req, auto& res) {
      json body = parse_body(req);
      OptJob job = job_from_json(body);
      const json* bindings = detail::optional_field(body, "bindings");
      ProcessModel p = store.read([&](const StoreState& st) {
        return resolve_process(st, json(job.process_ref), bindings ? *bindings : json());
      });
      OptOptions options;
      if (const json* threads = detail::optional_field(body, "threads"))
        options.threads = static_cast<unsigned>(std::max<long long>(1, threads->get<long long>()));
      send(res, 200, to_json(optimize(p, job.space, job.objective, job.budget, job.seed, job.config, options)));
    }));
    s.Get("/export", guard([this](const auto&, auto& res) {
      json doc = store.read([](const StoreState& st) { return serialize(st); });
      send(res, 200, doc);
    }));

    s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) {
        send(res, 404, Error(Errc::NotFound, "no route for " + req.method + " " + req.path).to_json());
      }
    });
  }
};

Service::Service(Store& store) : impl_(std::make_unique<Impl>(store)) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error(Errc::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void Service::run() { impl_->server.listen_after_bind(); }

int Service::start(const std::string& host, int port) {
  int bound = bind(host, port);
  impl_->thread = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ctkg
