#include "ctkg/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "ctkg/error.hpp"
#include "ctkg/lexical.hpp"
#include "ctkg/uri.hpp"
#include "json_util.hpp"

namespace ctkg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr auto kLockTimeout = std::chrono::seconds(10);

const char* const kArrayKeys[] = {"concepts", "entities",     "flows",         "models",
                                  "physical_entities", "processes", "relation_kinds",
                                  "relationships", "timeseries", "twins"};

std::string str(std::string_view s) { return std::string(s); }

std::set<SeriesKey> declared_signals(const StoreState& state) {
  std::set<SeriesKey> out;
  for (const auto& [_, flow] : state.registry.flows()) {
    for (const auto& signal : flow.content_schema) {
      out.emplace(flow.entity_start, signal);
      out.emplace(flow.entity_dest, signal);
    }
  }
  return out;
}

std::string require_string(const json& args, std::string_view key) {
  return detail::string_field(args, key, Errc::BadArgument);
}

std::vector<std::string> string_list(const json& args, std::string_view key) {
  std::vector<std::string> out;
  const json* arr = detail::optional_field(args, key);
  if (!arr) return out;
  if (!arr->is_array()) throw Error(Errc::BadArgument, "'" + str(key) + "' must be an array");
  for (const auto& item : *arr) {
    if (!item.is_string()) throw Error(Errc::BadArgument, "'" + str(key) + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string optional_string(json& args, std::string_view key, std::string fallback) {
  const json* v = detail::optional_field(args, key);
  if (!v) {
    args[str(key)] = fallback;
    return fallback;
  }
  if (!v->is_string()) throw Error(Errc::BadArgument, "'" + str(key) + "' must be a string");
  return v->get<std::string>();
}

json timeseries_to_json(const TimeseriesMap& series) {
  json out = json::array();
  for (const auto& [key, points] : series) {
    json pts = json::array();
    for (const auto& p : points) pts.push_back({p.timestamp, p.value});
    out.push_back({{"entity_id", key.first}, {"signal", key.second}, {"points", std::move(pts)}});
  }
  return out;
}

std::vector<IngestRecord> timeseries_records(const json& arr) {
  std::vector<IngestRecord> out;
  for (const auto& sj : arr) {
    std::string entity = detail::string_field(sj, "entity_id");
    std::string signal = detail::string_field(sj, "signal");
    for (const auto& pt : detail::array_field(sj, "points")) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_string() || !pt[1].is_number())
        throw Error(Errc::MalformedDocument, "time-series points are [timestamp, value] pairs");
      out.push_back({entity, pt[0].get<std::string>(), signal, pt[1].get<double>()});
    }
  }
  return out;
}

// Timestamps that do not parse sort first and are reported by validate_state.
void insert_point(TimeseriesMap& series, const IngestRecord& r) {
  TimePoint point{parse_timestamp(r.timestamp).value_or(-INFINITY), r.timestamp, r.value};
  auto& points = series[{r.entity_id, r.signal}];
  auto pos = std::upper_bound(points.begin(), points.end(), point.epoch,
                              [](double t, const TimePoint& p) { return t < p.epoch; });
  points.insert(pos, std::move(point));
}

void throw_first(const ValidationReport& report) {
  if (report.empty()) return;
  const Violation& v = report.front();
  throw Error(Errc::SchemaViolation, "'" + v.id + "': " + v.code + " (" + v.detail + ")");
}

// Merges `incoming` arrays into `base` by id; identical duplicates are skipped.
void merge_array(json& base, const json& incoming, const char* key) {
  std::string id_key = std::string(key) == "concepts" || std::string(key) == "relation_kinds" ? "name" : "id";
  std::map<std::string, std::size_t> index;
  json& arr = base[key];
  for (std::size_t i = 0; i < arr.size(); ++i) index[arr[i].at(id_key).get<std::string>()] = i;
  for (const auto& item : detail::array_field(incoming, key)) {
    std::string id = detail::string_field(item, id_key);
    auto it = index.find(id);
    if (it == index.end()) {
      index[id] = arr.size();
      arr.push_back(item);
    } else if (arr[it->second] != item) {
      throw Error(Errc::DuplicateId, "import conflicts with existing '" + id + "'");
    }
  }
}

void check_header(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::MalformedDocument, "interchange document must be an object");
  auto format = doc.find("format");
  if (format == doc.end() || !format->is_string() || *format != kInterchangeFormat)
    throw Error(Errc::MalformedDocument, "document format must be \"ct-interchange\"");
  auto version = doc.find("version");
  if (version == doc.end() || !version->is_number_integer())
    throw Error(Errc::MalformedDocument, "document version must be an integer");
  if (version->get<std::int64_t>() != kInterchangeVersion)
    throw Error(Errc::UnsupportedVersion, "unsupported document version " + version->dump());
  for (const char* key : kArrayKeys) detail::array_field(doc, key);
}

}  // namespace

// ---- interchange ----

json serialize(const StoreState& state) {
  json doc = json::object();
  doc["format"] = kInterchangeFormat;
  doc["version"] = kInterchangeVersion;
  write_graph(state.graph, doc);
  write_registry(state.registry, doc);
  json processes = json::array();
  for (const auto& [_, p] : state.processes) processes.push_back(to_json(p));
  doc["processes"] = std::move(processes);
  doc["timeseries"] = timeseries_to_json(state.timeseries);
  return doc;
}

std::string canonical(const json& doc) { return doc.dump(); }

ValidationReport validate_state(const StoreState& state) {
  ValidationReport report = state.graph.validate();
  auto registry_report = state.registry.validate(state.graph);
  report.insert(report.end(), registry_report.begin(), registry_report.end());

  for (const auto& [id, p] : state.processes) {
    auto uri = ResourceUri::try_parse(id);
    if (!uri || uri->kind() != ResourceKind::Process) report.push_back({"BAD_URI", id, "not a urn:ct:proc URI"});
    if (p.id != id) report.push_back({"SCHEMA_VIOLATION", id, "process id mismatch"});
    for (const auto& v : validate_process(p))
      report.push_back({"INVALID_PROCESS", id, v.code + " at '" + v.id + "': " + v.detail});
  }

  auto declared = declared_signals(state);
  for (const auto& [key, points] : state.timeseries) {
    const std::string label = key.first + "#" + key.second;
    if (!is_identifier(key.second)) report.push_back({"BAD_SIGNAL", label, "signal is not an identifier"});
    if (!declared.contains(key)) report.push_back({"UNDECLARED_SIGNAL", label, "no flow declares this signal"});
    if (points.empty()) report.push_back({"SCHEMA_VIOLATION", label, "series has no points"});
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      auto epoch = parse_timestamp(p.timestamp);
      if (!epoch) {
        report.push_back({"BAD_TIMESTAMP", label, p.timestamp});
      } else if (i > 0 && *epoch < points[i - 1].epoch) {
        report.push_back({"UNSORTED_SERIES", label, p.timestamp});
      }
      if (!std::isfinite(p.value)) report.push_back({"BAD_VALUE", label, "non-finite value"});
    }
  }

  std::sort(report.begin(), report.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.id, a.code, a.detail) < std::tie(b.id, b.code, b.detail);
  });
  return report;
}

StoreState deserialize(const json& doc) {
  check_header(doc);
  StoreState state;
  state.graph = read_graph_unchecked(doc);
  state.registry = read_registry_unchecked(doc);
  for (const auto& pj : doc["processes"]) {
    ProcessModel p = process_from_json(pj);
    if (state.processes.contains(p.id))
      throw Error(Errc::SchemaViolation, "process '" + p.id + "' appears twice");
    std::string key = p.id;
    state.processes.emplace(std::move(key), std::move(p));
  }
  std::set<SeriesKey> seen;
  for (const auto& sj : doc["timeseries"]) {
    SeriesKey key{detail::string_field(sj, "entity_id"), detail::string_field(sj, "signal")};
    if (!seen.insert(key).second)
      throw Error(Errc::SchemaViolation, "series '" + key.first + "#" + key.second + "' appears twice");
  }
  // Points are stored in document order, which is canonical; no re-sorting here
  // so that an unsorted document is reported instead of silently repaired.
  for (const auto& r : timeseries_records(doc["timeseries"])) {
    state.timeseries[{r.entity_id, r.signal}].push_back(
        {parse_timestamp(r.timestamp).value_or(-INFINITY), r.timestamp, r.value});
  }
  throw_first(validate_state(state));
  return state;
}

// ---- ingest ----

IngestResult parse_ingest(const StoreState& state, std::string_view csv) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty() || lines.front() != "entity_id,timestamp,signal,value")
    throw Error(Errc::MalformedHeader, "header must be exactly entity_id,timestamp,signal,value");

  auto declared = declared_signals(state);
  IngestResult result;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty()) continue;
    auto line_no = static_cast<std::int64_t>(i + 1);
    auto reject = [&](const char* reason) { result.rejected.push_back({line_no, reason}); };

    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      cols.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (cols.size() != 4) { reject("BAD_ROW"); continue; }
    if (!ResourceUri::try_parse(cols[0])) { reject("BAD_URI"); continue; }
    if (!parse_timestamp(cols[1])) { reject("BAD_TIMESTAMP"); continue; }
    if (!is_identifier(cols[2])) { reject("BAD_SIGNAL"); continue; }
    auto value = parse_decimal(cols[3]);
    if (!value) { reject("BAD_VALUE"); continue; }
    if (!declared.contains({str(cols[0]), str(cols[2])})) { reject("UNDECLARED_SIGNAL"); continue; }
    result.accepted.push_back({str(cols[0]), str(cols[1]), str(cols[2]), *value});
  }
  return result;
}

void append_points(StoreState& state, const std::vector<IngestRecord>& records) {
  for (const auto& r : records) insert_point(state.timeseries, r);
}

json to_json(const IngestResult& result) {
  json rejected = json::array();
  for (const auto& r : result.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
  return {{"accepted", result.accepted.size()}, {"rejected", std::move(rejected)}};
}

std::vector<SeriesPoint> series_since(const StoreState& state, std::string_view entity_id,
                                      std::string_view signal, std::string_view origin) {
  auto it = state.timeseries.find({str(entity_id), str(signal)});
  if (it == state.timeseries.end())
    throw Error(Errc::NotFound, "no series for '" + str(entity_id) + "' signal '" + str(signal) + "'");
  auto t0 = parse_timestamp(origin);
  if (!t0) throw Error(Errc::BadArgument, "origin '" + str(origin) + "' is not ISO-8601");
  std::vector<SeriesPoint> out;
  for (const auto& p : it->second) out.push_back({p.epoch - *t0, p.value});
  return out;
}

ProcessModel resolve_process(const StoreState& state, const json& ref, const json& bindings) {
  ProcessModel p;
  if (ref.is_string()) {
    auto it = state.processes.find(ref.get<std::string>());
    if (it == state.processes.end())
      throw Error(Errc::NotFound, "process '" + ref.get<std::string>() + "' not found");
    p = it->second;
  } else if (ref.is_object()) {
    p = process_from_json(ref);
  } else {
    throw Error(Errc::BadArgument, "process must be a URI or a process object");
  }
  if (bindings.is_null()) return p;
  if (!bindings.is_array()) throw Error(Errc::BadArgument, "bindings must be an array");
  for (const auto& b : bindings) {
    p = bind_timeseries(p, require_string(b, "control"),
                        series_since(state, require_string(b, "entity_id"), require_string(b, "signal"),
                                     require_string(b, "origin")));
  }
  return p;
}

std::string now_timestamp() {
  return format_timestamp(static_cast<long long>(std::time(nullptr)));
}

// ---- mutations ----

Mutation apply_mutation(StoreState& state, std::string op, json args) {
  if (!args.is_object()) throw Error(Errc::BadArgument, "mutation arguments must be an object");
  KnowledgeGraph& graph = state.graph;
  TwinRegistry& registry = state.registry;
  Mutation m{op, std::move(args), nullptr, true};
  json& a = m.args;

  if (op == "define_concept") {
    m.result = to_json(graph.define_concept(concept_from_json(a)));
  } else if (op == "define_relation_kind") {
    m.result = to_json(graph.define_relation_kind(relation_kind_from_json(a)));
  } else if (op == "add_entity") {
    Entity e = entity_from_json(a);
    m.result = to_json(graph.add_entity(e.concept_name, e.id, std::move(e.attrs), std::move(e.aspect_tags)));
  } else if (op == "remove_entity") {
    std::string id = require_string(a, "id");
    graph.entity(id);
    if (registry.references_entity(id))
      throw Error(Errc::InUse, "entity '" + id + "' backs a model asset");
    graph.remove_entity(id);
    m.result = {{"removed", id}};
  } else if (op == "add_relationship") {
    Relationship r = relationship_from_json(a);
    if (r.id.empty()) {
      r.id = graph.next_relationship_id();
      a["id"] = r.id;
    }
    m.result = to_json(graph.add_relationship(r.kind, r.source, r.target, std::move(r.attrs), r.id));
  } else if (op == "remove_relationship") {
    std::string id = require_string(a, "id");
    graph.remove_relationship(id);
    m.result = {{"removed", id}};
  } else if (op == "register_physical_entity") {
    PhysicalEntity pe = physical_entity_from_json(a);
    m.result = to_json(registry.register_physical_entity(pe.id, pe.description, pe.aspect_tags));
  } else if (op == "register_model") {
    ModelRegistration reg;
    reg.id = require_string(a, "id");
    reg.facets = facets_from_json(detail::field(a, "facets", Errc::SchemaViolation));
    reg.timespot = detail::integer_field(a, "timespot", Errc::BadArgument);
    reg.wall_time = optional_string(a, "wall_time", now_timestamp());
    reg.note = optional_string(a, "note", "");
    if (const json* ref = detail::optional_field(a, "entity_ref")) {
      if (!ref->is_string()) throw Error(Errc::BadArgument, "'entity_ref' must be a string");
      reg.entity_ref = ref->get<std::string>();
    }
    if (const json* c = detail::optional_field(a, "concept")) {
      if (!c->is_string()) throw Error(Errc::BadArgument, "'concept' must be a string");
      reg.concept_name = c->get<std::string>();
    }
    m.result = to_json(registry.register_model(graph, std::move(reg)));
  } else if (op == "snapshot_version") {
    std::string model_id = require_string(a, "model_id");
    auto timespot = detail::integer_field(a, "timespot", Errc::BadArgument);
    ModelFacets facets = facets_from_json(detail::field(a, "facets", Errc::SchemaViolation));
    std::string wall_time = optional_string(a, "wall_time", now_timestamp());
    std::string note = optional_string(a, "note", "");
    m.result = to_json(registry.snapshot_version(model_id, timespot, std::move(facets), std::move(note),
                                                 std::move(wall_time)));
  } else if (op == "add_comm_flow") {
    CommFlow f{require_string(a, "id"), require_string(a, "entity_start"), require_string(a, "entity_dest"),
               parse_dtype(require_string(a, "dtype")), string_list(a, "content_schema")};
    m.result = to_json(registry.add_comm_flow(f.id, f.entity_start, f.entity_dest, f.dtype,
                                              std::move(f.content_schema)));
  } else if (op == "add_twin") {
    std::string id = require_string(a, "id");
    std::string type = require_string(a, "type");
    std::string physical = require_string(a, "physical");
    auto models = string_list(a, "models");
    auto flows = string_list(a, "flows");
    if (type == "dt" || type == "digital_twin") {
      m.result = to_json(registry.add_twin(registry.assemble_digital_twin(id, physical, models, flows)));
    } else if (type == "ct" || type == "cognitive_twin") {
      m.result = to_json(registry.add_twin(registry.assemble_cognitive_twin(graph, id, physical, models, flows)));
    } else {
      throw Error(Errc::BadArgument, "twin type must be dt or ct");
    }
  } else if (op == "add_process") {
    ProcessModel p = process_from_json(a);
    require_uri(p.id, ResourceKind::Process);
    if (state.processes.contains(p.id)) throw Error(Errc::DuplicateId, "process '" + p.id + "' exists");
    auto report = validate_process(p);
    if (!report.empty())
      throw Error(Errc::InvalidProcess,
                  "process is invalid: " + report.front().code + " at '" + report.front().id + "'");
    m.result = to_json(p);
    std::string key = p.id;
    state.processes.emplace(std::move(key), std::move(p));
  } else if (op == "ingest") {
    const json& body = detail::field(a, "csv", Errc::BadArgument);
    if (!body.is_string()) throw Error(Errc::BadArgument, "'csv' must be a string");
    IngestResult r = parse_ingest(state, body.get_ref<const std::string&>());
    append_points(state, r.accepted);
    m.result = to_json(r);
    json records = json::array();
    for (const auto& rec : r.accepted) records.push_back({rec.entity_id, rec.timestamp, rec.signal, rec.value});
    m.op = "append_points";
    m.args = {{"records", std::move(records)}};
    m.changed = !r.accepted.empty();
  } else if (op == "append_points") {
    std::vector<IngestRecord> records;
    for (const auto& rj : detail::array_field(a, "records", Errc::BadArgument)) {
      if (!rj.is_array() || rj.size() != 4 || !rj[0].is_string() || !rj[1].is_string() ||
          !rj[2].is_string() || !rj[3].is_number())
        throw Error(Errc::BadArgument, "records are [entity_id, timestamp, signal, value]");
      records.push_back({rj[0].get<std::string>(), rj[1].get<std::string>(), rj[2].get<std::string>(),
                         rj[3].get<double>()});
    }
    append_points(state, records);
    m.result = {{"accepted", records.size()}};
  } else if (op == "import") {
    const json& incoming = detail::field(a, "document", Errc::BadArgument);
    check_header(incoming);
    json merged = serialize(state);
    for (const char* key : kArrayKeys) {
      if (std::string(key) == "timeseries") continue;
      merge_array(merged, incoming, key);
    }
    StoreState next = deserialize(merged);
    append_points(next, timeseries_records(incoming["timeseries"]));
    throw_first(validate_state(next));
    state = std::move(next);
    json counts = json::object();
    for (const char* key : kArrayKeys) counts[key] = incoming[key].size();
    m.result = {{"imported", std::move(counts)}};
  } else {
    throw Error(Errc::BadArgument, "unknown mutation '" + op + "'");
  }
  return m;
}

// ---- persistence ----

namespace {

fs::path snapshot_path(const fs::path& dir) { return dir / "snapshot.json"; }
fs::path log_path(const fs::path& dir) { return dir / "log.jsonl"; }

[[noreturn]] void io_fail(const std::string& what) {
  throw Error(Errc::IoError, what + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail(what);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void sync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) io_fail("cannot write " + tmp.string());
  try {
    write_all(fd, data, "cannot write " + tmp.string());
    if (::fsync(fd) != 0) io_fail("cannot sync " + tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_fail("cannot rename " + tmp.string());
  sync_dir(path.parent_path());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string snapshot_text(std::int64_t seq, const StoreState& state) {
  return json{{"applied_seq", seq}, {"document", serialize(state)}}.dump() + "\n";
}

}  // namespace

void Store::init(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  if (fs::exists(snapshot_path(dir))) throw Error(Errc::IoError, "a store already exists at " + dir.string());
  write_file_atomic(snapshot_path(dir), snapshot_text(0, StoreState{}));
  write_file_atomic(log_path(dir), "");
}

Store::Store(const fs::path& dir, Mode mode) : dir_(dir), mode_(mode) {
  if (!fs::exists(snapshot_path(dir_))) throw Error(Errc::IoError, "no store at " + dir_.string());
  fs::path lock = dir_ / ".lock";
  lock_fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT, 0644);
  if (lock_fd_ < 0) io_fail("cannot open " + lock.string());
  int how = (mode_ == Mode::Write ? LOCK_EX : LOCK_SH) | LOCK_NB;
  auto deadline = std::chrono::steady_clock::now() + kLockTimeout;
  while (::flock(lock_fd_, how) != 0) {
    if (errno != EWOULDBLOCK && errno != EINTR) {
      ::close(lock_fd_);
      io_fail("cannot lock " + dir_.string());
    }
    if (std::chrono::steady_clock::now() > deadline) {
      ::close(lock_fd_);
      throw Error(Errc::IoError, "store " + dir_.string() + " is locked by another process");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  try {
    load();
  } catch (...) {
    if (log_fd_ >= 0) ::close(log_fd_);
    ::close(lock_fd_);
    throw;
  }
}

Store::~Store() {
  if (log_fd_ >= 0) ::close(log_fd_);
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Store::load() {
  json snapshot;
  try {
    snapshot = json::parse(read_file(snapshot_path(dir_)));
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, "corrupt snapshot: " + std::string(e.what()));
  }
  std::int64_t applied = detail::integer_field(snapshot, "applied_seq", Errc::IoError);
  StoreState state = deserialize(detail::field(snapshot, "document", Errc::IoError));

  std::string log = fs::exists(log_path(dir_)) ? read_file(log_path(dir_)) : std::string();
  std::size_t valid_end = 0;
  std::size_t pos = 0;
  std::int64_t seq = applied;
  std::int64_t replayed = 0;
  while (pos < log.size()) {
    std::size_t nl = log.find('\n', pos);
    bool last = nl == std::string::npos || nl + 1 == log.size();
    std::string_view line(log.data() + pos, (nl == std::string::npos ? log.size() : nl) - pos);
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      if (last) break;  // torn final write, never acknowledged
      throw Error(Errc::IoError, "corrupt log record at byte " + std::to_string(pos));
    }
    std::int64_t rseq = detail::integer_field(record, "seq", Errc::IoError);
    if (rseq > applied) {
      if (rseq != seq + 1) throw Error(Errc::IoError, "log sequence gap at " + std::to_string(rseq));
      apply_mutation(state, detail::string_field(record, "op", Errc::IoError), detail::field(record, "args", Errc::IoError));
      seq = rseq;
      ++replayed;
    }
    valid_end = nl == std::string::npos ? log.size() : nl + 1;
    pos = valid_end;
  }

  if (log_fd_ >= 0) {
    ::close(log_fd_);
    log_fd_ = -1;
  }
  if (mode_ == Mode::Write) {
    log_fd_ = ::open(log_path(dir_).c_str(), O_WRONLY | O_CREAT, 0644);
    if (log_fd_ < 0) io_fail("cannot open log");
    if (valid_end < log.size() || (valid_end > 0 && log[valid_end - 1] != '\n')) {
      if (::ftruncate(log_fd_, static_cast<off_t>(valid_end)) != 0) io_fail("cannot trim log");
      if (valid_end > 0 && log[valid_end - 1] != '\n') write_all(log_fd_, "\n", "cannot repair log");
      ::fsync(log_fd_);
    }
    if (::lseek(log_fd_, 0, SEEK_END) < 0) io_fail("cannot seek log");
  }
  state_ = std::move(state);
  seq_ = seq;
  since_checkpoint_ = replayed;
}

void Store::append_log_locked(const Mutation& m, std::int64_t seq) {
  std::string line = json{{"seq", seq}, {"op", m.op}, {"args", m.args}}.dump() + "\n";
  write_all(log_fd_, line, "cannot append to log");
  if (::fdatasync(log_fd_) != 0) io_fail("cannot sync log");
}

json Store::mutate(std::string op, json args) {
  if (mode_ != Mode::Write) throw Error(Errc::IoError, "store opened read-only");
  std::unique_lock lock(mu_);
  Mutation m = apply_mutation(state_, std::move(op), std::move(args));
  if (!m.changed) return m.result;
  try {
    append_log_locked(m, seq_ + 1);
  } catch (...) {
    // The in-memory state is ahead of the log; fall back to what is durable.
    load();
    throw;
  }
  ++seq_;
  if (++since_checkpoint_ >= kCheckpointEvery) {
    try {
      write_snapshot_locked();
    } catch (const Error&) {
      // The log still holds every record; the next checkpoint retries.
    }
  }
  return m.result;
}

void Store::write_snapshot_locked() {
  write_file_atomic(snapshot_path(dir_), snapshot_text(seq_, state_));
  if (::ftruncate(log_fd_, 0) != 0) io_fail("cannot truncate log");
  if (::lseek(log_fd_, 0, SEEK_SET) < 0) io_fail("cannot seek log");
  ::fsync(log_fd_);
  since_checkpoint_ = 0;
}

void Store::checkpoint() {
  if (mode_ != Mode::Write) throw Error(Errc::IoError, "store opened read-only");
  std::unique_lock lock(mu_);
  write_snapshot_locked();
}

std::int64_t Store::applied_seq() const {
  std::shared_lock lock(mu_);
  return seq_;
}

}  // namespace ctkg
