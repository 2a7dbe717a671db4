#pragma once

// Falsification loop: piecewise-constant parameterized inputs, one-shot
// evaluation (instantiate -> simulate -> monitor) and the two search
// strategies, uniform random sampling and simulated annealing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtfalsify/monitor.hpp"
#include "rtfalsify/sim.hpp"
#include "rtfalsify/table.hpp"

namespace rtfalsify {

class SearchError : public std::runtime_error {
 public:
  enum class Kind { arity_mismatch, out_of_bounds, invalid_config, signal_mismatch };

  SearchError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Range of one input signal and its number of discontinuities.
struct SignalSpec {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  int discontinuities = 1;
};

struct ParamSpec {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

/// Piecewise-constant input family.  A signal with k discontinuities has
/// k + 1 level parameters (in the signal range) followed by k switch-time
/// parameters (in [0, horizon]).
class ParameterizedInput {
 public:
  ParameterizedInput(std::vector<SignalSpec> signals, double horizon, double dt)
      : signals_(std::move(signals)), horizon_(horizon), dt_(dt) {
    Trace probe(dt, horizon);  // validates the grid
    std::set<std::string> seen;
    for (const auto& s : signals_) {
      if (!seen.insert(s.name).second) {
        throw SearchError(SearchError::Kind::invalid_config, "signal '" + s.name + "' listed twice");
      }
      if (!(s.lo <= s.hi) || !std::isfinite(s.lo) || !std::isfinite(s.hi)) {
        throw SearchError(SearchError::Kind::invalid_config, "signal '" + s.name + "' has an empty range");
      }
      if (s.discontinuities < 0) {
        throw SearchError(SearchError::Kind::invalid_config, "negative discontinuity count for '" + s.name + "'");
      }
      for (int j = 0; j <= s.discontinuities; ++j) {
        params_.push_back({s.name + ".level" + std::to_string(j), s.lo, s.hi});
      }
      for (int j = 1; j <= s.discontinuities; ++j) {
        params_.push_back({s.name + ".switch" + std::to_string(j), 0.0, horizon});
      }
    }
  }

  [[nodiscard]] const std::vector<SignalSpec>& signals() const noexcept { return signals_; }
  [[nodiscard]] const std::vector<ParamSpec>& parameters() const noexcept { return params_; }
  [[nodiscard]] std::size_t arity() const noexcept { return params_.size(); }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }

  void check(std::span<const double> params) const {
    if (params.size() != params_.size()) {
      throw SearchError(SearchError::Kind::arity_mismatch, "expected " + std::to_string(params_.size()) +
                                                               " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!(params[i] >= params_[i].lo && params[i] <= params_[i].hi)) {
        throw SearchError(SearchError::Kind::out_of_bounds, params_[i].name + " = " + format_number(params[i]) +
                                                                " outside [" + format_number(params_[i].lo) + ", " +
                                                                format_number(params_[i].hi) + "]");
      }
    }
  }

  /// Signal value on [switch_j, switch_{j+1}) is level_j, switches sorted.
  [[nodiscard]] Trace instantiate(std::span<const double> params) const {
    check(params);
    Trace trace(dt_, horizon_);
    std::size_t p = 0;
    for (const auto& s : signals_) {
      const auto k = static_cast<std::size_t>(s.discontinuities);
      std::span<const double> levels = params.subspan(p, k + 1);
      std::vector<double> switches(params.begin() + static_cast<std::ptrdiff_t>(p + k + 1),
                                   params.begin() + static_cast<std::ptrdiff_t>(p + 2 * k + 1));
      std::sort(switches.begin(), switches.end());
      p += 2 * k + 1;

      std::vector<double> values(trace.size());
      std::size_t seg = 0;
      for (std::size_t i = 0; i < trace.size(); ++i) {
        const double t = trace.time(i);
        while (seg < k && switches[seg] <= t) ++seg;
        values[i] = levels[seg];
      }
      trace.set(s.name, std::move(values));
    }
    return trace;
  }

 private:
  std::vector<SignalSpec> signals_;
  std::vector<ParamSpec> params_;
  double horizon_;
  double dt_;
};

enum class Algorithm { uniform_random, simulated_annealing };

inline const char* to_string(Algorithm a) {
  return a == Algorithm::uniform_random ? "uniform-random" : "simulated-annealing";
}

struct AnnealingConfig {
  double initial_temperature = 1.0;  // fitness units
  double cooling             = 0.97;  // geometric, per iteration
  double proposal_scale      = 0.1;   // std-dev as a fraction of each range
};

struct SearchConfig {
  Algorithm algorithm = Algorithm::simulated_annealing;
  std::size_t budget  = 1500;
  std::uint64_t seed  = 0;
  AnnealingConfig annealing;

  void validate() const {
    auto bad = [](const std::string& m) { throw SearchError(SearchError::Kind::invalid_config, m); };
    if (budget < 1) bad("budget must be >= 1");
    if (!(annealing.initial_temperature > 0.0)) bad("initial temperature must be > 0");
    if (!(annealing.cooling > 0.0 && annealing.cooling < 1.0)) bad("cooling factor must be in (0, 1)");
    if (!(annealing.proposal_scale > 0.0 && annealing.proposal_scale <= 1.0)) bad("proposal scale must be in (0, 1]");
  }
};

enum class Verdict { tc, nff };

inline const char* to_string(Verdict v) { return v == Verdict::tc ? "TC" : "NFF"; }

struct FalsificationResult {
  Verdict verdict = Verdict::nff;
  std::vector<double> best_params;
  Degree best_fitness    = kTop;
  std::size_t iterations = 0;
  std::vector<int> violated;    // requirement indexes, TC only
  std::vector<Degree> history;  // fitness of every iteration
};

struct Evaluation {
  Degree fitness = kTop;
  Trace trace;  // inputs and model outputs
  MonitorRun run;
};

/// Model, monitor and input family checked for signal compatibility once.
class Problem {
 public:
  Problem(const SystemModel& model, MonitorAutomaton monitor, ParameterizedInput input)
      : model_(model), monitor_(std::move(monitor)), input_(std::move(input)) {
    const auto& ins = model_.inputs();
    std::set<std::string> declared;
    for (const auto& s : input_.signals()) {
      if (std::find(ins.begin(), ins.end(), s.name) == ins.end()) {
        throw SearchError(SearchError::Kind::signal_mismatch,
                          "'" + s.name + "' is not an input of model " + model_.name());
      }
      declared.insert(s.name);
    }
    for (const auto& n : ins) {
      if (!declared.count(n)) throw SearchError(SearchError::Kind::signal_mismatch, "no input range for '" + n + "'");
    }
    const auto& outs = model_.outputs();
    for (const auto& n : monitor_.inputs) {
      if (!declared.count(n) && std::find(outs.begin(), outs.end(), n) == outs.end()) {
        throw SearchError(SearchError::Kind::signal_mismatch,
                          "table input '" + n + "' is neither an input nor an output of model " + model_.name());
      }
    }
  }

  [[nodiscard]] const SystemModel& model() const noexcept { return model_; }
  [[nodiscard]] const MonitorAutomaton& monitor() const noexcept { return monitor_; }
  [[nodiscard]] const ParameterizedInput& input() const noexcept { return input_; }

  [[nodiscard]] Evaluation evaluate(std::span<const double> params) const {
    Evaluation e;
    e.trace   = simulate(model_, input_.instantiate(params));
    e.run     = run_monitor(monitor_, e.trace);
    e.fitness = e.run.fitness;
    return e;
  }

 private:
  const SystemModel& model_;
  MonitorAutomaton monitor_;
  ParameterizedInput input_;
};

inline Evaluation evaluate(const SystemModel& model, const RequirementsTable& table, const ParameterizedInput& input,
                           std::span<const double> params) {
  return Problem(model, compile(table), input).evaluate(params);
}

/// Finite stand-in for +inf (and -inf) in Metropolis arithmetic.
inline constexpr double kInfinitePenalty = 1e15;

inline double penalized(Degree f) {
  if (f == kTop) return kInfinitePenalty;
  if (f == kBottom) return -kInfinitePenalty;
  return f;
}

/// Metropolis acceptance probability of moving from `current` to `proposal`.
inline double acceptance_probability(Degree current, Degree proposal, double temperature) {
  const double delta = penalized(proposal) - penalized(current);
  if (delta <= 0.0) return 1.0;
  return std::exp(-delta / temperature);
}

struct AnnealingStep {
  std::vector<double> params;   // next chain state
  Degree fitness = kTop;        // fitness of the next chain state
  std::vector<double> proposal;
  Degree proposal_fitness = kTop;
  bool accepted = false;
};

/// One annealing move: Gaussian proposal clamped to the box, evaluated with
/// `objective`, accepted by the Metropolis rule.
template <class Objective, class Rng>
AnnealingStep sa_step(std::span<const ParamSpec> bounds, std::span<const double> current, Degree current_fitness,
                      double temperature, double proposal_scale, Rng& rng, Objective&& objective) {
  AnnealingStep step;
  step.proposal.resize(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) {
    const double range = bounds[i].hi - bounds[i].lo;
    double x           = current[i];
    if (range > 0.0) {
      std::normal_distribution<double> noise(0.0, proposal_scale * range);
      x = std::clamp(x + noise(rng), bounds[i].lo, bounds[i].hi);
    }
    step.proposal[i] = x;
  }
  step.proposal_fitness = objective(std::span<const double>(step.proposal));

  const double p = acceptance_probability(current_fitness, step.proposal_fitness, temperature);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  step.accepted = p >= 1.0 || (p > 0.0 && coin(rng) < p);
  if (step.accepted) {
    step.params  = step.proposal;
    step.fitness = step.proposal_fitness;
  } else {
    step.params.assign(current.begin(), current.end());
    step.fitness = current_fitness;
  }
  return step;
}

/// Independent uniform draw inside the parameter box.
template <class Rng>
std::vector<double> sample_uniform(std::span<const ParamSpec> bounds, Rng& rng) {
  std::vector<double> x(bounds.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    x[i] = std::uniform_real_distribution<double>(bounds[i].lo, bounds[i].hi)(rng);
  }
  return x;
}

/// Searches for parameters with negative fitness.  Stops at the first one
/// (TC) or when the budget is exhausted (NFF).  Deterministic given the seed.
inline FalsificationResult falsify(const Problem& problem, const SearchConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const auto& bounds = problem.input().parameters();

  FalsificationResult result;
  MonitorRun best_run;
  auto objective = [&](std::span<const double> params) {
    Evaluation e = problem.evaluate(params);
    result.history.push_back(e.fitness);
    ++result.iterations;
    if (result.best_params.empty() || e.fitness < result.best_fitness) {
      result.best_fitness = e.fitness;
      result.best_params.assign(params.begin(), params.end());
      best_run = std::move(e.run);
    }
    return e.fitness;
  };
  auto sample = [&] { return sample_uniform(bounds, rng); };

  std::vector<double> current = sample();
  Degree current_fitness      = objective(current);
  double temperature          = cfg.annealing.initial_temperature;
  while (!(result.best_fitness < 0.0) && result.iterations < cfg.budget) {
    if (cfg.algorithm == Algorithm::uniform_random) {
      objective(sample());
      continue;
    }
    auto step = sa_step(bounds, current, current_fitness, temperature, cfg.annealing.proposal_scale, rng, objective);
    current         = std::move(step.params);
    current_fitness = step.fitness;
    temperature *= cfg.annealing.cooling;
  }

  if (result.best_fitness < 0.0) {
    result.verdict  = Verdict::tc;
    result.violated = violated_requirements(best_run);
  }
  return result;
}

inline FalsificationResult falsify(const SystemModel& model, const RequirementsTable& table,
                                   const ParameterizedInput& input, const SearchConfig& cfg) {
  cfg.validate();
  return falsify(Problem(model, compile(table), input), cfg);
}

}  // namespace rtfalsify
