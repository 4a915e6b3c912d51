#include "ctkg/process.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>

#include "ctkg/error.hpp"
#include "json_util.hpp"

namespace ctkg {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxSamples = 2.0e7;

bool sorted_series(const std::vector<SeriesPoint>& series) {
  return std::is_sorted(series.begin(), series.end(),
                        [](const SeriesPoint& a, const SeriesPoint& b) { return a.time < b.time; });
}

// Producer/consumer graph cycles, one violation per strongly connected component.
void report_cycles(const ProcessModel& p, const std::map<std::string, std::string>& producer,
                   ValidationReport& report) {
  std::map<std::string, std::set<std::string>> succ;
  for (const auto& [id, a] : p.activities) {
    succ[id];
    for (const auto& in : a.inputs) {
      auto it = producer.find(in);
      if (it != producer.end()) succ[it->second].insert(id);
    }
  }

  // Tarjan's algorithm.
  std::map<std::string, int> index, low;
  std::set<std::string> on_stack;
  std::vector<std::string> stack;
  std::vector<std::set<std::string>> components;
  int counter = 0;
  std::function<void(const std::string&)> strong = [&](const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& w : succ[v]) {
      if (!index.contains(w)) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.contains(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::set<std::string> comp;
      std::string w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp.insert(w);
      } while (w != v);
      components.push_back(std::move(comp));
    }
  };
  for (const auto& [id, _] : succ)
    if (!index.contains(id)) strong(id);

  for (const auto& comp : components) {
    const std::string& start = *comp.begin();
    if (comp.size() == 1 && !succ[start].contains(start)) continue;
    // Shortest cycle through the smallest member, found by BFS inside the component.
    std::map<std::string, std::string> parent;
    std::deque<std::string> frontier{start};
    std::vector<std::string> cycle;
    while (!frontier.empty() && cycle.empty()) {
      std::string v = frontier.front();
      frontier.pop_front();
      for (const auto& w : succ[v]) {
        if (!comp.contains(w)) continue;
        if (w == start) {
          for (std::string at = v; at != start; at = parent[at]) cycle.push_back(at);
          cycle.push_back(start);
          std::reverse(cycle.begin(), cycle.end());
          break;
        }
        if (!parent.contains(w)) {
          parent[w] = v;
          frontier.push_back(w);
        }
      }
    }
    std::string detail;
    for (const auto& id : cycle) detail += id + " -> ";
    detail += start;
    report.push_back({"CYCLE", start, detail});
  }
}

}  // namespace

std::optional<double> value_at(const ControlBinding& binding, double t) {
  if (auto* c = std::get_if<double>(&binding)) return *c;
  const auto& series = std::get<std::vector<SeriesPoint>>(binding);
  std::optional<double> out;
  for (const auto& pt : series) {
    if (pt.time > t) break;
    out = pt.value;
  }
  return out;
}

ValidationReport validate_process(const ProcessModel& p) {
  ValidationReport report;
  auto add = [&](std::string code, const std::string& id, std::string detail) {
    report.push_back({std::move(code), id, std::move(detail)});
  };

  std::map<std::string, std::string> producer;
  for (const auto& [id, a] : p.activities) {
    if (id.empty() || a.id != id) add("SCHEMA_VIOLATION", id, "activity id mismatch");
    if (a.outputs.empty()) add("NO_OUTPUTS", id, "activity declares no outputs");
    if (!(a.work > 0.0) || !std::isfinite(a.work)) add("BAD_WORK", id, "work must be > 0");
    const auto& d = a.dynamics;
    if (!(d.r0 > 0.0) || !std::isfinite(d.r0)) add("BAD_DYNAMICS", id, "r0 must be > 0");
    if (!(d.lambda >= 0.0) || !std::isfinite(d.lambda)) add("BAD_DYNAMICS", id, "lambda must be >= 0");
    if (d.kind == RateLaw::ExpDecay && !(d.lambda > 0.0))
      add("BAD_DYNAMICS", id, "exp_decay_rate needs lambda > 0");
    for (const auto& out : a.outputs) {
      auto [it, inserted] = producer.emplace(out, id);
      if (!inserted) add("DUPLICATE_OUTPUT", out, "produced by " + it->second + " and " + id);
      if (p.external_inputs.contains(out))
        add("AMBIGUOUS_INPUT", out, "artifact is both external and produced by " + id);
    }
  }
  for (const auto& [id, a] : p.activities) {
    for (const auto& in : a.inputs) {
      if (!producer.contains(in) && !p.external_inputs.contains(in))
        add("UNSATISFIED_INPUT", id, "input '" + in + "' has no producer");
    }
    for (const auto& c : a.controls) {
      if (!p.control_bindings.contains(c)) add("UNBOUND_CONTROL", id, "control '" + c + "' unbound");
    }
  }
  for (const auto& [signal, binding] : p.control_bindings) {
    if (auto* series = std::get_if<std::vector<SeriesPoint>>(&binding)) {
      if (!sorted_series(*series)) add("UNSORTED_SERIES", signal, "series times decrease");
    }
  }
  report_cycles(p, producer, report);

  std::sort(report.begin(), report.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.id, a.code, a.detail) < std::tie(b.id, b.code, b.detail);
  });
  return report;
}

double activity_duration(const Activity& a) {
  const auto& d = a.dynamics;
  if (d.kind == RateLaw::Constant) return a.work / d.r0;
  double fraction = d.lambda * a.work / d.r0;
  if (fraction >= 1.0) return kInf;
  return -std::log1p(-fraction) / d.lambda;
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::ActivityStart: return "activity_start";
    case EventKind::ActivityComplete: return "activity_complete";
    case EventKind::ArtifactReady: return "artifact_ready";
  }
  return "";
}

void validate_config(const SimConfig& config) {
  if (!(config.step > 0.0) || !std::isfinite(config.step))
    throw Error(Errc::BadConfig, "step must be > 0");
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon))
    throw Error(Errc::BadConfig, "horizon must be > 0");
  if (!(config.step < config.horizon)) throw Error(Errc::BadConfig, "step must be < horizon");
}

namespace {

// Earliest t >= ready at which every control of the activity reads non-zero.
std::optional<double> gate_open_time(const ProcessModel& p, const Activity& a, double ready) {
  if (a.controls.empty()) return ready;
  std::vector<double> candidates{ready};
  for (const auto& c : a.controls) {
    const auto& binding = p.control_bindings.at(c);
    if (auto* series = std::get_if<std::vector<SeriesPoint>>(&binding)) {
      for (const auto& pt : *series)
        if (pt.time > ready) candidates.push_back(pt.time);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    bool open = std::all_of(a.controls.begin(), a.controls.end(), [&](const std::string& c) {
      auto v = value_at(p.control_bindings.at(c), t);
      return v && *v != 0.0;
    });
    if (open) return t;
  }
  return std::nullopt;
}

double remaining_work(const Activity& a, double start, double complete, double t) {
  if (t < start) return a.work;
  if (t >= complete) return 0.0;
  double elapsed = t - start;
  const auto& d = a.dynamics;
  double done = d.kind == RateLaw::Constant ? d.r0 * elapsed
                                            : d.r0 / d.lambda * -std::expm1(-d.lambda * elapsed);
  return std::max(0.0, a.work - done);
}

struct Pending {
  double time;
  std::int64_t seq;
  EventKind kind;
  std::string subject;
  bool operator>(const Pending& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
};

}  // namespace

SimTrace simulate(const ProcessModel& p, const SimConfig& config, bool record_samples) {
  validate_config(config);
  auto report = validate_process(p);
  if (!report.empty()) {
    throw Error(Errc::InvalidProcess,
                "process is invalid: " + report.front().code + " at '" + report.front().id + "'");
  }

  std::map<std::string, std::vector<std::string>> consumers;
  std::map<std::string, std::size_t> waiting;
  for (const auto& [id, a] : p.activities) {
    waiting[id] = a.inputs.size();
    for (const auto& in : a.inputs) consumers[in].push_back(id);
  }

  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
  std::int64_t next_seq = 0;
  auto schedule = [&](double t, EventKind kind, const std::string& subject) {
    queue.push({t, next_seq++, kind, subject});
  };
  auto exceeded = [&](const std::string& id, const std::string& why) {
    throw Error(Errc::HorizonExceeded, "activity '" + id + "' " + why + " (horizon " +
                                           std::to_string(config.horizon) + ")");
  };
  auto try_start = [&](const Activity& a, double ready) {
    auto open = gate_open_time(p, a, ready);
    if (!open) exceeded(a.id, "is never released by its controls");
    if (*open > config.horizon) exceeded(a.id, "cannot start before the horizon");
    schedule(*open, EventKind::ActivityStart, a.id);
  };

  for (const auto& art : p.external_inputs) schedule(0.0, EventKind::ArtifactReady, art);
  for (const auto& [id, a] : p.activities)
    if (a.inputs.empty()) try_start(a, 0.0);

  SimTrace trace;
  trace.config_echo = config;
  std::map<std::string, std::pair<double, double>> spans;
  while (!queue.empty()) {
    Pending ev = queue.top();
    queue.pop();
    trace.events.push_back({ev.time, ev.kind, ev.subject, ev.seq});
    switch (ev.kind) {
      case EventKind::ArtifactReady: {
        auto it = consumers.find(ev.subject);
        if (it == consumers.end()) break;
        for (const auto& id : it->second)
          if (--waiting[id] == 0) try_start(p.activities.at(id), ev.time);
        break;
      }
      case EventKind::ActivityStart: {
        const Activity& a = p.activities.at(ev.subject);
        double complete = ev.time + activity_duration(a);
        if (!std::isfinite(complete)) exceeded(a.id, "never delivers its work");
        if (complete > config.horizon) exceeded(a.id, "completes after the horizon");
        spans[a.id] = {ev.time, complete};
        schedule(complete, EventKind::ActivityComplete, a.id);
        break;
      }
      case EventKind::ActivityComplete:
        for (const auto& out : p.activities.at(ev.subject).outputs)
          schedule(ev.time, EventKind::ArtifactReady, out);
        break;
    }
  }

  if (record_samples) {
    double end = 0.0;
    for (const auto& [_, span] : spans) end = std::max(end, span.second);
    double count = std::floor(end / config.step + 1e-9) + 1.0;
    if (count * static_cast<double>(p.activities.size()) > kMaxSamples)
      throw Error(Errc::BadConfig, "step too small for the simulated span");
    auto k_max = static_cast<std::int64_t>(count);
    for (const auto& [id, a] : p.activities) {
      auto [start, complete] = spans.at(id);
      std::vector<double> samples;
      samples.reserve(static_cast<std::size_t>(k_max));
      for (std::int64_t k = 0; k < k_max; ++k)
        samples.push_back(remaining_work(a, start, complete, static_cast<double>(k) * config.step));
      trace.state_samples.emplace(id, std::move(samples));
    }
  }
  return trace;
}

std::map<std::string, double> completion_times(const SimTrace& trace) {
  std::map<std::string, double> started, done;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::ActivityStart) started[e.subject] = e.time;
    if (e.kind == EventKind::ActivityComplete) done[e.subject] = e.time;
  }
  for (const auto& [id, _] : started) {
    if (!done.contains(id))
      throw Error(Errc::IncompleteTrace, "activity '" + id + "' started but never completed");
  }
  return done;
}

double makespan(const SimTrace& trace) {
  double out = 0.0;
  for (const auto& [_, t] : completion_times(trace)) out = std::max(out, t);
  return out;
}

ProcessModel bind_timeseries(const ProcessModel& p, std::string_view signal,
                             std::vector<SeriesPoint> series) {
  bool declared = std::any_of(p.activities.begin(), p.activities.end(), [&](const auto& kv) {
    return kv.second.controls.contains(std::string(signal));
  });
  if (!declared)
    throw Error(Errc::UnknownSignal, "no activity is controlled by '" + std::string(signal) + "'");
  if (!sorted_series(series)) throw Error(Errc::UnsortedSeries, "series times must be non-decreasing");
  for (const auto& pt : series) {
    if (!std::isfinite(pt.time) || !std::isfinite(pt.value))
      throw Error(Errc::BadArgument, "series points must be finite");
  }
  ProcessModel out = p;
  out.control_bindings.insert_or_assign(std::string(signal), std::move(series));
  return out;
}

ProcessModel bind_constant(const ProcessModel& p, std::string_view signal, double value) {
  bool declared = std::any_of(p.activities.begin(), p.activities.end(), [&](const auto& kv) {
    return kv.second.controls.contains(std::string(signal));
  });
  if (!declared)
    throw Error(Errc::UnknownSignal, "no activity is controlled by '" + std::string(signal) + "'");
  ProcessModel out = p;
  out.control_bindings.insert_or_assign(std::string(signal), value);
  return out;
}

// ---- JSON ----

json to_json(const ProcessModel& p) {
  json activities = json::array();
  for (const auto& [id, a] : p.activities) {
    activities.push_back(
        {{"id", a.id},
         {"icom",
          {{"inputs", a.inputs}, {"controls", a.controls}, {"outputs", a.outputs}, {"mechanisms", a.mechanisms}}},
         {"work", a.work},
         {"dynamics",
          {{"kind", a.dynamics.kind == RateLaw::Constant ? "constant_rate" : "exp_decay_rate"},
           {"r0", a.dynamics.r0},
           {"lambda", a.dynamics.lambda}}}});
  }
  json bindings = json::object();
  for (const auto& [signal, binding] : p.control_bindings) {
    if (auto* c = std::get_if<double>(&binding)) {
      bindings[signal] = {{"constant", *c}};
    } else {
      json pts = json::array();
      for (const auto& pt : std::get<std::vector<SeriesPoint>>(binding)) pts.push_back({pt.time, pt.value});
      bindings[signal] = {{"series", std::move(pts)}};
    }
  }
  return {{"id", p.id},
          {"activities", std::move(activities)},
          {"external_inputs", p.external_inputs},
          {"control_bindings", std::move(bindings)}};
}

namespace {

std::set<std::string> name_set(const json& j, std::string_view key) {
  std::set<std::string> out;
  const json* arr = detail::optional_field(j, key);
  if (!arr) return out;
  if (!arr->is_array()) throw Error(Errc::MalformedDocument, "'" + std::string(key) + "' must be an array");
  for (const auto& item : *arr) {
    if (!item.is_string() || item.get<std::string>().empty())
      throw Error(Errc::MalformedDocument, "artifact and signal names must be non-empty strings");
    out.insert(item.get<std::string>());
  }
  return out;
}

}  // namespace

ProcessModel process_from_json(const json& j) {
  ProcessModel p;
  if (const json* id = detail::optional_field(j, "id")) {
    if (!id->is_string()) throw Error(Errc::MalformedDocument, "process id must be a string");
    p.id = id->get<std::string>();
  }
  for (const auto& aj : detail::array_field(j, "activities")) {
    Activity a;
    a.id = detail::string_field(aj, "id");
    const json& icom = detail::field(aj, "icom");
    a.inputs = name_set(icom, "inputs");
    a.controls = name_set(icom, "controls");
    a.outputs = name_set(icom, "outputs");
    a.mechanisms = name_set(icom, "mechanisms");
    a.work = detail::number_field(aj, "work");
    const json& dj = detail::field(aj, "dynamics");
    std::string kind = detail::string_field(dj, "kind");
    if (kind == "constant_rate") {
      a.dynamics.kind = RateLaw::Constant;
    } else if (kind == "exp_decay_rate") {
      a.dynamics.kind = RateLaw::ExpDecay;
    } else {
      throw Error(Errc::MalformedDocument, "unknown dynamics kind '" + kind + "'");
    }
    a.dynamics.r0 = detail::number_field(dj, "r0");
    if (detail::optional_field(dj, "lambda")) a.dynamics.lambda = detail::number_field(dj, "lambda");
    if (p.activities.contains(a.id))
      throw Error(Errc::MalformedDocument, "activity '" + a.id + "' listed twice");
    std::string key = a.id;
    p.activities.emplace(std::move(key), std::move(a));
  }
  p.external_inputs = name_set(j, "external_inputs");
  if (const json* bindings = detail::optional_field(j, "control_bindings")) {
    if (!bindings->is_object()) throw Error(Errc::MalformedDocument, "control_bindings must be an object");
    for (const auto& [signal, bj] : bindings->items()) {
      if (const json* c = detail::optional_field(bj, "constant")) {
        if (!c->is_number()) throw Error(Errc::MalformedDocument, "constant binding must be a number");
        p.control_bindings.emplace(signal, c->get<double>());
      } else {
        std::vector<SeriesPoint> series;
        for (const auto& pt : detail::array_field(bj, "series")) {
          if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
            throw Error(Errc::MalformedDocument, "series points are [time, value] pairs");
          series.push_back({pt[0].get<double>(), pt[1].get<double>()});
        }
        p.control_bindings.emplace(signal, std::move(series));
      }
    }
  }
  return p;
}

json to_json(const SimConfig& c) { return {{"step", c.step}, {"seed", c.seed}, {"horizon", c.horizon}}; }

SimConfig config_from_json(const json& j) {
  SimConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(Errc::BadConfig, "config must be an object");
  if (detail::optional_field(j, "step")) c.step = detail::number_field(j, "step", Errc::BadConfig);
  if (detail::optional_field(j, "seed")) c.seed = detail::integer_field(j, "seed", Errc::BadConfig);
  if (detail::optional_field(j, "horizon")) c.horizon = detail::number_field(j, "horizon", Errc::BadConfig);
  return c;
}

json to_json(const SimTrace& trace) {
  json events = json::array();
  for (const auto& e : trace.events) {
    events.push_back({{"time", e.time}, {"kind", std::string(to_string(e.kind))}, {"subject", e.subject}, {"seq", e.seq}});
  }
  json samples = json::object();
  for (const auto& [id, values] : trace.state_samples) samples[id] = values;
  return {{"events", std::move(events)}, {"state_samples", std::move(samples)}, {"config_echo", to_json(trace.config_echo)}};
}

SimTrace trace_from_json(const json& j) {
  SimTrace t;
  for (const auto& ej : detail::array_field(j, "events")) {
    SimEvent e;
    e.time = detail::number_field(ej, "time");
    std::string kind = detail::string_field(ej, "kind");
    if (kind == "activity_start") e.kind = EventKind::ActivityStart;
    else if (kind == "activity_complete") e.kind = EventKind::ActivityComplete;
    else if (kind == "artifact_ready") e.kind = EventKind::ArtifactReady;
    else throw Error(Errc::MalformedDocument, "unknown event kind '" + kind + "'");
    e.subject = detail::string_field(ej, "subject");
    e.seq = detail::integer_field(ej, "seq");
    t.events.push_back(std::move(e));
  }
  if (const json* samples = detail::optional_field(j, "state_samples")) {
    for (const auto& [id, values] : samples->items()) t.state_samples[id] = values.get<std::vector<double>>();
  }
  if (const json* cfg = detail::optional_field(j, "config_echo")) t.config_echo = config_from_json(*cfg);
  return t;
}

}  // namespace ctkg
