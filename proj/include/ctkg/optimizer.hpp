#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctkg/process.hpp"

namespace ctkg {

/// What a parameter controls: an activity's r0, or a control signal's constant.
struct ParamTarget {
  enum class Kind { ActivityRate, ControlConstant };
  Kind kind = Kind::ActivityRate;
  std::string name;  // activity id or signal name
  friend bool operator==(const ParamTarget&, const ParamTarget&) = default;
};

struct Parameter {
  std::string name;
  ParamTarget target;
  std::vector<double> domain;  // strictly ascending
  friend bool operator==(const Parameter&, const Parameter&) = default;
};

struct ParameterSpace {
  std::vector<Parameter> params;
  friend bool operator==(const ParameterSpace&, const ParameterSpace&) = default;
};

enum class Metric { Makespan, WeightedCompletion };

struct Objective {
  Metric metric = Metric::Makespan;
  std::map<std::string, double> weights;  // activity id -> weight, weighted_completion only
  friend bool operator==(const Objective&, const Objective&) = default;
};

using Assignment = std::map<std::string, double>;

struct HistoryEntry {
  Assignment assignment;
  double value = 0.0;  // +infinity for infeasible candidates
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct OptResult {
  Assignment best_assignment;
  double best_value = 0.0;
  std::vector<HistoryEntry> history;
  std::int64_t evaluations_used = 0;
  friend bool operator==(const OptResult&, const OptResult&) = default;
};

struct OptOptions {
  unsigned threads = 1;  // candidate evaluations per coordinate run concurrently when > 1
};

/// Throws BAD_SPACE.
void validate_space(const ProcessModel& process, const ParameterSpace& space);
/// Throws BAD_OBJECTIVE.
void validate_objective(const ProcessModel& process, const Objective& objective);

/// Throws BAD_ASSIGNMENT (missing, extra or out-of-domain values).
ProcessModel apply_assignment(const ProcessModel& process, const ParameterSpace& space,
                              const Assignment& assignment);

/// Objective value of one candidate; +infinity if the simulation exceeds the horizon.
double evaluate_candidate(const ProcessModel& process, const ParameterSpace& space,
                          const Assignment& assignment, const Objective& objective,
                          const SimConfig& config);

/// Memoized coordinate descent with random restarts. Repeated assignments do
/// not consume budget. Stops when the budget is spent or every grid point has
/// been evaluated. Throws BAD_BUDGET, INVALID_PROCESS, BAD_SPACE, BAD_OBJECTIVE.
OptResult optimize(const ProcessModel& process, const ParameterSpace& space,
                   const Objective& objective, std::int64_t budget, std::uint64_t seed,
                   const SimConfig& config, const OptOptions& options = {});

struct OptJob {
  std::string process_ref;
  ParameterSpace space;
  Objective objective;
  std::int64_t budget = 1;
  std::uint64_t seed = 0;
  SimConfig config;
};

OptJob job_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptJob& job);
nlohmann::json to_json(const OptResult& result);

}  // namespace ctkg
