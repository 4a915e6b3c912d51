#include "ctkg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <set>
#include <thread>

#include "ctkg/error.hpp"
#include "json_util.hpp"

namespace ctkg {

namespace {

using nlohmann::json;
using Index = std::vector<std::size_t>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kRandomRedraws = 64;
constexpr double kEnumerableGrid = 1.0e6;

bool controlled_by_some_activity(const ProcessModel& p, const std::string& signal) {
  return std::any_of(p.activities.begin(), p.activities.end(),
                     [&](const auto& kv) { return kv.second.controls.contains(signal); });
}

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double objective_value(const Objective& objective, const SimTrace& trace) {
  if (objective.metric == Metric::Makespan) return makespan(trace);
  double total = 0.0;
  for (const auto& [id, t] : completion_times(trace)) total += objective.weights.at(id) * t;
  return total;
}

class Search {
 public:
  Search(const ProcessModel& p, const ParameterSpace& space, const Objective& objective,
         std::int64_t budget, const SimConfig& config, const OptOptions& options)
      : p_(p), space_(space), objective_(objective), budget_(budget), config_(config),
        threads_(std::max(1u, options.threads)) {}

  Assignment to_assignment(const Index& idx) const {
    Assignment a;
    for (std::size_t i = 0; i < idx.size(); ++i) a[space_.params[i].name] = space_.params[i].domain[idx[i]];
    return a;
  }

  bool exhausted() const { return static_cast<std::int64_t>(history_.size()) >= budget_; }

  // Values for `candidates` in order; stops at the first one the budget cannot cover.
  std::vector<double> evaluate(const std::vector<Index>& candidates) {
    std::vector<Index> fresh;
    std::set<Index> queued;
    auto remaining = budget_ - static_cast<std::int64_t>(history_.size());
    for (const auto& c : candidates) {
      if (memo_.contains(c) || queued.contains(c)) continue;
      if (static_cast<std::int64_t>(fresh.size()) >= remaining) break;
      fresh.push_back(c);
      queued.insert(c);
    }

    std::vector<double> values(fresh.size());
    std::vector<std::exception_ptr> failures(fresh.size());
    auto work = [&](std::size_t i) {
      try {
        values[i] = evaluate_candidate(p_, space_, to_assignment(fresh[i]), objective_, config_);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    };
    if (threads_ > 1 && fresh.size() > 1) {
      std::vector<std::thread> pool;
      std::size_t n = std::min<std::size_t>(threads_, fresh.size());
      for (std::size_t t = 0; t < n; ++t)
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < fresh.size(); i += n) work(i);
        });
      for (auto& th : pool) th.join();
    } else {
      for (std::size_t i = 0; i < fresh.size(); ++i) work(i);
    }
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      memo_.emplace(fresh[i], values[i]);
      history_.push_back({to_assignment(fresh[i]), values[i]});
    }

    std::vector<double> out;
    for (const auto& c : candidates) {
      auto it = memo_.find(c);
      if (it == memo_.end()) break;
      out.push_back(it->second);
    }
    return out;
  }

  bool seen(const Index& idx) const { return memo_.contains(idx); }
  std::size_t evaluated() const { return memo_.size(); }
  std::vector<HistoryEntry> take_history() { return std::move(history_); }

 private:
  const ProcessModel& p_;
  const ParameterSpace& space_;
  const Objective& objective_;
  std::int64_t budget_;
  const SimConfig& config_;
  unsigned threads_;
  std::map<Index, double> memo_;
  std::vector<HistoryEntry> history_;
};

std::optional<Index> first_unevaluated(const ParameterSpace& space, const Search& search) {
  Index idx(space.params.size(), 0);
  while (true) {
    if (!search.seen(idx)) return idx;
    std::size_t i = idx.size();
    while (i > 0) {
      --i;
      if (++idx[i] < space.params[i].domain.size()) break;
      idx[i] = 0;
      if (i == 0) return std::nullopt;
    }
    if (idx.empty()) return std::nullopt;
  }
}

}  // namespace

void validate_space(const ProcessModel& p, const ParameterSpace& space) {
  std::set<std::string> names;
  for (const auto& param : space.params) {
    if (param.name.empty()) throw Error(Errc::BadSpace, "parameter names must be non-empty");
    if (!names.insert(param.name).second)
      throw Error(Errc::BadSpace, "parameter '" + param.name + "' listed twice");
    if (param.domain.empty()) throw Error(Errc::BadSpace, "parameter '" + param.name + "' has an empty domain");
    for (std::size_t i = 0; i < param.domain.size(); ++i) {
      double v = param.domain[i];
      if (!std::isfinite(v)) throw Error(Errc::BadSpace, "parameter '" + param.name + "' has a non-finite value");
      if (i > 0 && !(param.domain[i - 1] < v))
        throw Error(Errc::BadSpace, "domain of '" + param.name + "' must be strictly ascending");
    }
    if (param.target.kind == ParamTarget::Kind::ActivityRate) {
      if (!p.activities.contains(param.target.name))
        throw Error(Errc::BadSpace, "parameter '" + param.name + "' targets unknown activity '" +
                                        param.target.name + "'");
      if (!(param.domain.front() > 0.0))
        throw Error(Errc::BadSpace, "r0 values of '" + param.name + "' must be > 0");
    } else if (!controlled_by_some_activity(p, param.target.name)) {
      throw Error(Errc::BadSpace, "parameter '" + param.name + "' targets unknown control '" +
                                      param.target.name + "'");
    }
  }
}

void validate_objective(const ProcessModel& p, const Objective& objective) {
  if (objective.metric == Metric::Makespan) return;
  for (const auto& [id, w] : objective.weights) {
    if (!p.activities.contains(id)) throw Error(Errc::BadObjective, "weight for unknown activity '" + id + "'");
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::BadObjective, "weights must be finite and >= 0");
  }
  for (const auto& [id, _] : p.activities) {
    if (!objective.weights.contains(id)) throw Error(Errc::BadObjective, "no weight for activity '" + id + "'");
  }
}

ProcessModel apply_assignment(const ProcessModel& p, const ParameterSpace& space, const Assignment& assignment) {
  for (const auto& [name, _] : assignment) {
    bool known = std::any_of(space.params.begin(), space.params.end(),
                             [&](const Parameter& param) { return param.name == name; });
    if (!known) throw Error(Errc::BadAssignment, "assignment names unknown parameter '" + name + "'");
  }
  ProcessModel out = p;
  for (const auto& param : space.params) {
    auto it = assignment.find(param.name);
    if (it == assignment.end()) throw Error(Errc::BadAssignment, "assignment is missing '" + param.name + "'");
    if (std::find(param.domain.begin(), param.domain.end(), it->second) == param.domain.end())
      throw Error(Errc::BadAssignment, "value for '" + param.name + "' is outside its domain");
    if (param.target.kind == ParamTarget::Kind::ActivityRate) {
      out.activities.at(param.target.name).dynamics.r0 = it->second;
    } else {
      out.control_bindings.insert_or_assign(param.target.name, it->second);
    }
  }
  return out;
}

double evaluate_candidate(const ProcessModel& p, const ParameterSpace& space, const Assignment& assignment,
                          const Objective& objective, const SimConfig& config) {
  ProcessModel candidate = apply_assignment(p, space, assignment);
  try {
    return objective_value(objective, simulate(candidate, config, false));
  } catch (const Error& e) {
    if (e.code() == Errc::HorizonExceeded) return kInf;
    throw;
  }
}

OptResult optimize(const ProcessModel& p, const ParameterSpace& space, const Objective& objective,
                   std::int64_t budget, std::uint64_t seed, const SimConfig& config,
                   const OptOptions& options) {
  if (budget < 1) throw Error(Errc::BadBudget, "budget must be at least 1");
  validate_config(config);
  auto report = validate_process(p);
  if (!report.empty())
    throw Error(Errc::InvalidProcess,
                "process is invalid: " + report.front().code + " at '" + report.front().id + "'");
  validate_space(p, space);
  validate_objective(p, objective);

  const std::size_t dims = space.params.size();
  double grid = 1.0;
  for (const auto& param : space.params) grid *= static_cast<double>(param.domain.size());

  std::mt19937_64 rng(seed);
  auto draw = [&] {
    Index idx(dims);
    for (std::size_t i = 0; i < dims; ++i) idx[i] = rng() % space.params[i].domain.size();
    return idx;
  };
  Search search(p, space, objective, budget, config, options);

  auto fresh_start = [&]() -> std::optional<Index> {
    for (int attempt = 0; attempt < kRandomRedraws; ++attempt) {
      Index idx = draw();
      if (!search.seen(idx)) return idx;
    }
    if (grid <= kEnumerableGrid) return first_unevaluated(space, search);
    return std::nullopt;
  };

  while (!search.exhausted() && static_cast<double>(search.evaluated()) < grid) {
    auto start = fresh_start();
    if (!start) break;
    Index cur = *start;
    auto first = search.evaluate({cur});
    if (first.empty()) break;

    std::set<Index> sweep_starts;
    bool out_of_budget = false;
    while (sweep_starts.insert(cur).second) {
      bool changed = false;
      for (std::size_t i = 0; i < dims && !out_of_budget; ++i) {
        std::vector<Index> candidates;
        for (std::size_t j = 0; j < space.params[i].domain.size(); ++j) {
          Index c = cur;
          c[i] = j;
          candidates.push_back(std::move(c));
        }
        auto values = search.evaluate(candidates);
        if (values.size() < candidates.size()) {
          out_of_budget = true;
          break;
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j < values.size(); ++j)
          if (values[j] < values[best]) best = j;
        if (best != cur[i]) {
          cur[i] = best;
          changed = true;
        }
      }
      if (out_of_budget || !changed) break;
    }
    if (out_of_budget) break;
  }

  OptResult result;
  result.history = search.take_history();
  result.evaluations_used = static_cast<std::int64_t>(result.history.size());
  result.best_value = kInf;
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const auto& h = result.history[i];
    if (i == 0 || h.value < result.best_value) {
      result.best_value = h.value;
      result.best_assignment = h.assignment;
    }
  }
  return result;
}

// ---- JSON ----

OptJob job_from_json(const json& j) {
  OptJob job;
  job.process_ref = detail::string_field(j, "process_ref");
  for (const auto& pj : detail::array_field(j, "params")) {
    Parameter param;
    param.name = detail::string_field(pj, "name", Errc::BadSpace);
    const json& target = detail::field(pj, "target", Errc::BadSpace);
    if (const json* activity = detail::optional_field(target, "activity")) {
      if (!activity->is_string()) throw Error(Errc::BadSpace, "target activity must be a string");
      if (const json* f = detail::optional_field(target, "field"); f && *f != "r0")
        throw Error(Errc::BadSpace, "only the r0 field of an activity can be optimized");
      param.target = {ParamTarget::Kind::ActivityRate, activity->get<std::string>()};
    } else if (const json* control = detail::optional_field(target, "control")) {
      if (!control->is_string()) throw Error(Errc::BadSpace, "target control must be a string");
      param.target = {ParamTarget::Kind::ControlConstant, control->get<std::string>()};
    } else {
      throw Error(Errc::BadSpace, "target needs 'activity' or 'control'");
    }
    for (const auto& v : detail::array_field(pj, "domain", Errc::BadSpace)) {
      if (!v.is_number()) throw Error(Errc::BadSpace, "domain values must be numbers");
      param.domain.push_back(v.get<double>());
    }
    job.space.params.push_back(std::move(param));
  }
  const json& oj = detail::field(j, "objective");
  std::string metric = detail::string_field(oj, "metric", Errc::BadObjective);
  if (metric == "makespan") {
    job.objective.metric = Metric::Makespan;
  } else if (metric == "weighted_completion") {
    job.objective.metric = Metric::WeightedCompletion;
  } else {
    throw Error(Errc::BadObjective, "unknown metric '" + metric + "'");
  }
  if (const json* weights = detail::optional_field(oj, "weights")) {
    if (!weights->is_object()) throw Error(Errc::BadObjective, "weights must be an object");
    for (const auto& [id, w] : weights->items()) {
      if (!w.is_number()) throw Error(Errc::BadObjective, "weights must be numbers");
      job.objective.weights[id] = w.get<double>();
    }
  }
  job.budget = detail::integer_field(j, "budget", Errc::BadBudget);
  long long seed = detail::integer_field(j, "seed");
  if (seed < 0) throw Error(Errc::MalformedDocument, "seed must be non-negative");
  job.seed = static_cast<std::uint64_t>(seed);
  if (const json* cfg = detail::optional_field(j, "config")) job.config = config_from_json(*cfg);
  return job;
}

json to_json(const OptJob& job) {
  json params = json::array();
  for (const auto& param : job.space.params) {
    json target = param.target.kind == ParamTarget::Kind::ActivityRate
                      ? json{{"activity", param.target.name}, {"field", "r0"}}
                      : json{{"control", param.target.name}};
    params.push_back({{"name", param.name}, {"target", std::move(target)}, {"domain", param.domain}});
  }
  json objective = {{"metric", job.objective.metric == Metric::Makespan ? "makespan" : "weighted_completion"}};
  if (!job.objective.weights.empty()) objective["weights"] = job.objective.weights;
  return {{"process_ref", job.process_ref}, {"params", std::move(params)},
          {"objective", std::move(objective)}, {"budget", job.budget},
          {"seed", job.seed}, {"config", to_json(job.config)}};
}

json to_json(const OptResult& r) {
  json history = json::array();
  for (const auto& h : r.history) {
    history.push_back({{"assignment", h.assignment}, {"value", number_or_inf(h.value)}});
  }
  return {{"best_assignment", r.best_assignment},
          {"best_value", number_or_inf(r.best_value)},
          {"history", std::move(history)},
          {"evaluations_used", r.evaluations_used}};
}

}  // namespace ctkg
