#pragma once

// Compilation of a requirements table into parallel three-phase monitors and
// their online execution.
//
// Each requirement becomes one machine with phases
//   PRC  checking the precondition (emits +inf),
//   WT   waiting for the duration to elapse while the precondition holds
//        (only for requirements with a duration; emits +inf),
//   POA  postcondition active (emits the postcondition degree and runs the
//        requirement's actions).
// At most one transition fires per machine per step.  The fitness of a run is
// the minimum of all emitted degrees.

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtfalsify/aggregate.hpp"
#include "rtfalsify/expr.hpp"
#include "rtfalsify/sim.hpp"
#include "rtfalsify/table.hpp"

namespace rtfalsify {

enum class Phase { prc, wt, poa };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::prc: return "PRC";
    case Phase::wt: return "WT";
    case Phase::poa: return "POA";
  }
  return "?";
}

class MonitorError : public std::runtime_error {
 public:
  enum class Kind { missing_action, conflicting_action, signal_mismatch, time_not_increasing };

  MonitorError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// One parallel machine, compiled from one requirement.
struct Machine {
  int index = 0;
  std::optional<Bool> guard;       // PRC -> POA/WT; absent means constant true
  std::optional<Bool> exit_guard;  // negated guard: POA -> PRC and WT -> PRC
  std::optional<double> duration;  // present iff the machine has a WT phase
  std::optional<Bool> postcondition;
  std::vector<Assignment> actions;

  [[nodiscard]] bool has_wait() const noexcept { return duration.has_value(); }
};

struct MonitorAutomaton {
  std::vector<Machine> machines;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> prev_signals;  // signals read through prev(...)
  std::map<std::string, double> initial_values;
};

struct MachineState {
  Phase phase       = Phase::prc;
  double entry_time = 0.0;  // time WT was entered
};

struct MonitorState {
  std::vector<MachineState> machines;
  std::unordered_map<std::string, double> prev_buffer;  // values of the previous step
  std::vector<Degree> step_degrees;
  std::map<std::string, double> action_outputs;
  double t          = 0.0;
  std::size_t steps = 0;  // number of steps processed, including the initial one
};

/// Builds the monitor.  The table must be valid; throws TableError otherwise.
inline MonitorAutomaton compile(const RequirementsTable& table) {
  if (auto diags = validate(table); !diags.empty()) throw TableError(std::move(diags.front()));

  MonitorAutomaton a;
  a.inputs         = table.inputs;
  a.outputs        = table.outputs;
  a.initial_values = table.initial_values;

  std::set<std::string> prevs;
  for (const auto& r : table.requirements) {
    Machine m;
    m.index = r.index;
    if (r.precondition) {
      m.guard      = r.precondition;
      m.exit_guard = negate(*r.precondition);
    }
    m.duration      = r.duration;
    m.postcondition = r.postcondition;
    m.actions       = r.actions;

    References refs;
    if (r.precondition) collect(*r.precondition, refs);
    if (r.postcondition) collect(*r.postcondition, refs);
    for (const auto& act : r.actions) collect(act.value, refs);
    prevs.insert(refs.prev.begin(), refs.prev.end());

    a.machines.push_back(std::move(m));
  }
  std::sort(a.machines.begin(), a.machines.end(), [](const Machine& x, const Machine& y) { return x.index < y.index; });
  a.prev_signals.assign(prevs.begin(), prevs.end());
  return a;
}

namespace detail {

inline bool guard_holds(const Machine& m, const Env& env) { return !m.guard || eval_bool(*m.guard, env); }

/// Target of a firing precondition: WT, or straight to POA when there is no
/// positive duration to wait for.
inline Phase armed_phase(const Machine& m) {
  return m.has_wait() && *m.duration > 0.0 ? Phase::wt : Phase::poa;
}

/// Runs the actions of active machines, checks output coverage, evaluates the
/// degrees and advances the prev buffer.  `env.prev` must hold the buffer.
inline void emit(const MonitorAutomaton& a, MonitorState& s, Env& env) {
  s.action_outputs.clear();
  for (std::size_t i = 0; i < a.machines.size(); ++i) {
    if (s.machines[i].phase != Phase::poa) continue;
    for (const auto& act : a.machines[i].actions) {
      const double v        = eval_arith(act.value, env);
      auto [it, inserted]   = s.action_outputs.emplace(act.target, v);
      if (!inserted && it->second != v) {
        throw MonitorError(MonitorError::Kind::conflicting_action,
                           "output '" + act.target + "' assigned " + format_number(it->second) + " and " +
                               format_number(v) + " at t = " + format_number(env.t));
      }
    }
  }
  for (const auto& out : a.outputs) {
    auto it = s.action_outputs.find(out);
    if (it == s.action_outputs.end()) {
      throw MonitorError(MonitorError::Kind::missing_action,
                         "no action assigns output '" + out + "' at t = " + format_number(env.t));
    }
    env.signals[out] = it->second;
  }

  s.step_degrees.assign(a.machines.size(), kTop);
  for (std::size_t i = 0; i < a.machines.size(); ++i) {
    const Machine& m = a.machines[i];
    if (s.machines[i].phase == Phase::poa && m.postcondition) s.step_degrees[i] = degree(*m.postcondition, env);
  }

  for (const auto& sig : a.prev_signals) {
    auto it = env.signals.find(sig);
    if (it == env.signals.end()) {
      throw MonitorError(MonitorError::Kind::signal_mismatch, "no value for '" + sig + "' at t = " + format_number(env.t));
    }
    s.prev_buffer[sig] = it->second;
  }
}

}  // namespace detail

/// Enters every machine through its initial junction and produces the
/// degrees and actions of the first step.  `env0.signals` must bind every
/// input; `env0.t` is the start time.
inline MonitorState monitor_init(const MonitorAutomaton& a, Env env0) {
  MonitorState s;
  s.t     = env0.t;
  s.steps = 1;
  for (const auto& sig : a.prev_signals) s.prev_buffer[sig] = a.initial_values.at(sig);
  env0.prev = s.prev_buffer;

  s.machines.resize(a.machines.size());
  for (std::size_t i = 0; i < a.machines.size(); ++i) {
    const Machine& m = a.machines[i];
    s.machines[i].phase      = detail::guard_holds(m, env0) ? detail::armed_phase(m) : Phase::prc;
    s.machines[i].entry_time = env0.t;
  }
  detail::emit(a, s, env0);
  return s;
}

/// Fires at most one transition per machine at time `t`, then emits the
/// step's degrees (returned in `s.step_degrees`) and outputs.
inline const std::vector<Degree>& monitor_step(const MonitorAutomaton& a, MonitorState& s, Env env, double t) {
  if (!(t > s.t)) {
    throw MonitorError(MonitorError::Kind::time_not_increasing,
                       "time must increase: " + format_number(s.t) + " -> " + format_number(t));
  }
  const double dt = t - s.t;
  env.t           = t;
  env.prev        = s.prev_buffer;

  for (std::size_t i = 0; i < a.machines.size(); ++i) {
    const Machine& m  = a.machines[i];
    MachineState& ms  = s.machines[i];
    switch (ms.phase) {
      case Phase::prc:
        if (detail::guard_holds(m, env)) {
          ms.phase      = detail::armed_phase(m);
          ms.entry_time = t;
        }
        break;
      case Phase::wt:
        if (m.exit_guard && eval_bool(*m.exit_guard, env)) {
          ms.phase = Phase::prc;
        } else if (t - ms.entry_time >= *m.duration - 1e-9 * dt) {
          ms.phase = Phase::poa;
        }
        break;
      case Phase::poa:
        if (m.exit_guard && eval_bool(*m.exit_guard, env)) ms.phase = Phase::prc;
        break;
    }
  }
  s.t = t;
  ++s.steps;
  detail::emit(a, s, env);
  return s.step_degrees;
}

struct MonitorRun {
  Degree fitness = kTop;
  std::vector<std::vector<Degree>> degrees;  // [step][machine]
  std::vector<std::vector<Phase>> phases;    // [step][machine]
  std::vector<Degree> running;               // running minimum after each step
  Trace outputs;                             // action outputs per step
  std::vector<int> indexes;                  // requirement index of each machine column
};

/// Monitors a recorded trace from start to end.
inline MonitorRun run_monitor(const MonitorAutomaton& a, const Trace& trace) {
  for (const auto& in : a.inputs) {
    if (!trace.has(in)) throw MonitorError(MonitorError::Kind::signal_mismatch, "trace lacks input '" + in + "'");
  }

  MonitorRun run;
  for (const auto& m : a.machines) run.indexes.push_back(m.index);
  std::vector<std::vector<double>> outs(a.outputs.size(), std::vector<double>(trace.size()));
  std::vector<const std::vector<double>*> columns;
  for (const auto& in : a.inputs) columns.push_back(&trace[in]);

  RunningMin agg;
  MonitorState s;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    Env env;
    env.t = trace.time(k);
    for (std::size_t i = 0; i < a.inputs.size(); ++i) env.signals.emplace(a.inputs[i], (*columns[i])[k]);

    if (k == 0) {
      s = monitor_init(a, std::move(env));
    } else {
      monitor_step(a, s, std::move(env), trace.time(k));
    }
    agg.update(s.step_degrees);
    run.degrees.push_back(s.step_degrees);
    std::vector<Phase> ph;
    ph.reserve(s.machines.size());
    for (const auto& ms : s.machines) ph.push_back(ms.phase);
    run.phases.push_back(std::move(ph));
    run.running.push_back(agg.current());
    for (std::size_t j = 0; j < a.outputs.size(); ++j) outs[j][k] = s.action_outputs.at(a.outputs[j]);
  }

  run.fitness = finalize(agg);
  run.outputs = Trace(trace.dt(), trace.horizon());
  for (std::size_t j = 0; j < a.outputs.size(); ++j) run.outputs.set(a.outputs[j], std::move(outs[j]));
  return run;
}

/// Requirements whose degree reached the (negative) fitness at some step.
inline std::vector<int> violated_requirements(const MonitorRun& run) {
  std::vector<int> out;
  if (!(run.fitness < 0.0)) return out;
  for (std::size_t i = 0; i < run.indexes.size(); ++i) {
    for (const auto& row : run.degrees) {
      if (row[i] == run.fitness) {
        out.push_back(run.indexes[i]);
        break;
      }
    }
  }
  return out;
}

/// Columns `t, ff_1..ff_n, ff_total_running`.
inline void write_degree_csv(std::ostream& os, const MonitorRun& run, double dt) {
  os << 't';
  for (int idx : run.indexes) os << ",ff_" << idx;
  os << ",ff_total_running\n";
  for (std::size_t k = 0; k < run.degrees.size(); ++k) {
    os << format_number(static_cast<double>(k) * dt);
    for (Degree d : run.degrees[k]) os << ',' << format_number(d);
    os << ',' << format_number(run.running[k]) << '\n';
  }
}

}  // namespace rtfalsify
