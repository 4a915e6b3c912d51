#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctkg/ontology.hpp"
#include "ctkg/process.hpp"
#include "ctkg/registry.hpp"

namespace ctkg {

inline constexpr std::string_view kInterchangeFormat = "ct-interchange";
inline constexpr std::int64_t kInterchangeVersion = 1;

struct TimePoint {
  double epoch = 0.0;      // seconds since 1970-01-01T00:00:00Z
  std::string timestamp;  // as ingested
  double value = 0.0;
  friend bool operator==(const TimePoint&, const TimePoint&) = default;
};

/// (entity_id, signal) -> points ordered by time, ties in arrival order.
using SeriesKey = std::pair<std::string, std::string>;
using TimeseriesMap = std::map<SeriesKey, std::vector<TimePoint>>;

/// Everything a store holds.
struct StoreState {
  KnowledgeGraph graph;
  TwinRegistry registry;
  std::map<std::string, ProcessModel, std::less<>> processes;
  TimeseriesMap timeseries;
};

/// Canonical interchange document: sorted keys, arrays sorted by id.
nlohmann::json serialize(const StoreState& state);
/// Throws UNSUPPORTED_VERSION, MALFORMED_DOCUMENT or SCHEMA_VIOLATION
/// (the message names the first offending id).
StoreState deserialize(const nlohmann::json& doc);
/// Compact dump of a canonical document.
std::string canonical(const nlohmann::json& doc);

/// Full check of a state: graph, registry, processes and time series.
ValidationReport validate_state(const StoreState& state);

struct IngestReject {
  std::int64_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct IngestRecord {
  std::string entity_id;
  std::string timestamp;
  std::string signal;
  double value = 0.0;
};

struct IngestResult {
  std::vector<IngestRecord> accepted;
  std::vector<IngestReject> rejected;
};

/// Parses and checks a CSV batch against the declared flow schemas without
/// modifying the state. Throws MALFORMED_HEADER.
IngestResult parse_ingest(const StoreState& state, std::string_view csv);
void append_points(StoreState& state, const std::vector<IngestRecord>& records);
nlohmann::json to_json(const IngestResult& result);

/// Points of one series as process time: seconds since `origin` (ISO-8601).
/// Throws NOT_FOUND or BAD_ARGUMENT.
std::vector<SeriesPoint> series_since(const StoreState& state, std::string_view entity_id,
                                      std::string_view signal, std::string_view origin);

/// Resolves a process reference (URI string or inline process object) and
/// applies optional time-series bindings:
///   [{"control": c, "entity_id": e, "signal": s, "origin": iso}]
ProcessModel resolve_process(const StoreState& state, const nlohmann::json& ref,
                             const nlohmann::json& bindings = nullptr);

/// Current UTC time as ISO-8601 with a Z suffix.
std::string now_timestamp();

/// Outcome of a state mutation. `args` are completed (assigned ids, default
/// wall times) so that replaying (op, args) reproduces the same state.
struct Mutation {
  std::string op;
  nlohmann::json args;
  nlohmann::json result;
  bool changed = true;
};

/// Applies one named mutation, all-or-nothing. Ops:
///   define_concept, define_relation_kind, add_entity, remove_entity,
///   add_relationship, remove_relationship, register_physical_entity,
///   register_model, snapshot_version, add_comm_flow, add_twin, add_process,
///   ingest, append_points, import
Mutation apply_mutation(StoreState& state, std::string op, nlohmann::json args);

/// A persistent store directory: snapshot.json plus an append-only log.jsonl.
/// Writers hold an exclusive lock on the directory, readers a shared one.
class Store {
 public:
  enum class Mode { Read, Write };

  /// Creates an empty store directory. Throws IO_ERROR if one already exists.
  static void init(const std::filesystem::path& dir);

  /// Opens and replays the store. Throws IO_ERROR (missing or locked).
  Store(const std::filesystem::path& dir, Mode mode);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Runs `f(const StoreState&)` under a shared lock.
  template <class F>
  decltype(auto) read(F&& f) const {
    std::shared_lock lock(mu_);
    return f(std::as_const(state_));
  }

  /// Applies and durably logs a mutation before returning its result.
  nlohmann::json mutate(std::string op, nlohmann::json args);

  /// Writes a fresh snapshot and truncates the log.
  void checkpoint();

  const std::filesystem::path& dir() const { return dir_; }
  std::int64_t applied_seq() const;

  /// Log records between automatic checkpoints.
  static constexpr std::int64_t kCheckpointEvery = 512;

 private:
  void load();
  void write_snapshot_locked();
  void append_log_locked(const Mutation& m, std::int64_t seq);

  std::filesystem::path dir_;
  Mode mode_;
  int lock_fd_ = -1;
  int log_fd_ = -1;
  mutable std::shared_mutex mu_;
  StoreState state_;
  std::int64_t seq_ = 0;
  std::int64_t since_checkpoint_ = 0;
};

}  // namespace ctkg
