#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctkg/ontology.hpp"

namespace ctkg {

enum class RateLaw { Constant, ExpDecay };

/// Work rate while an activity runs: r(t) = r0 (constant) or r0 * exp(-lambda t)
/// with t measured from the activity's start.
struct DynamicsSpec {
  RateLaw kind = RateLaw::Constant;
  double r0 = 1.0;
  double lambda = 0.0;
  friend bool operator==(const DynamicsSpec&, const DynamicsSpec&) = default;
};

/// IDEF0-style activity: Inputs, Controls, Outputs, Mechanisms.
struct Activity {
  std::string id;
  std::set<std::string> inputs;
  std::set<std::string> controls;
  std::set<std::string> outputs;
  std::set<std::string> mechanisms;
  double work = 1.0;
  DynamicsSpec dynamics;
  friend bool operator==(const Activity&, const Activity&) = default;
};

struct SeriesPoint {
  double time = 0.0;
  double value = 0.0;
  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

/// A control signal is either a constant or a piecewise-constant series
/// (right-continuous; no value before the first sample).
using ControlBinding = std::variant<double, std::vector<SeriesPoint>>;

/// Most recent value of the signal at time t, if any.
std::optional<double> value_at(const ControlBinding& binding, double t);

struct ProcessModel {
  std::string id;
  std::map<std::string, Activity> activities;
  std::set<std::string> external_inputs;
  std::map<std::string, ControlBinding> control_bindings;
  friend bool operator==(const ProcessModel&, const ProcessModel&) = default;
};

/// Empty iff the process is well formed: every input satisfied by exactly one
/// producer or external input, acyclic, all controls bound, sane dynamics.
ValidationReport validate_process(const ProcessModel& process);

/// Closed-form time to complete `work` under the activity's dynamics.
/// +infinity when an exponentially decaying rate can never deliver it.
double activity_duration(const Activity& activity);

enum class EventKind { ActivityStart, ActivityComplete, ArtifactReady };

std::string_view to_string(EventKind kind) noexcept;

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::ActivityStart;
  std::string subject;
  std::int64_t seq = 0;
  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct SimConfig {
  double step = 0.001;
  std::int64_t seed = 0;
  double horizon = 1.0e6;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Throws BAD_CONFIG.
void validate_config(const SimConfig& config);

struct SimTrace {
  std::vector<SimEvent> events;  // strictly increasing (time, seq)
  /// Remaining work per activity sampled at t = k * step, k = 0..floor(makespan / step).
  std::map<std::string, std::vector<double>> state_samples;
  SimConfig config_echo;
  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

/// Deterministic simulation. Throws INVALID_PROCESS, BAD_CONFIG or
/// HORIZON_EXCEEDED (some activity cannot finish by the horizon).
SimTrace simulate(const ProcessModel& process, const SimConfig& config, bool record_samples = true);

/// Time of the last activity completion; 0 for an empty trace.
/// Throws INCOMPLETE_TRACE if an activity started but never completed.
double makespan(const SimTrace& trace);

/// Completion time per activity id.
std::map<std::string, double> completion_times(const SimTrace& trace);

/// Returns a copy with `signal` bound to the series. Throws UNKNOWN_SIGNAL
/// or UNSORTED_SERIES.
ProcessModel bind_timeseries(const ProcessModel& process, std::string_view signal,
                             std::vector<SeriesPoint> series);
ProcessModel bind_constant(const ProcessModel& process, std::string_view signal, double value);

nlohmann::json to_json(const ProcessModel& process);
ProcessModel process_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& config);
SimConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimTrace& trace);
SimTrace trace_from_json(const nlohmann::json& j);

}  // namespace ctkg
