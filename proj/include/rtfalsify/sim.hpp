#pragma once

// Discrete-time simulation harness: uniformly sampled traces, the model
// interface and the built-in benchmark models.

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtfalsify/expr.hpp"

namespace rtfalsify {

class SimError : public std::runtime_error {
 public:
  enum class Kind { signal_mismatch, non_finite_output, invalid_trace, unknown_model };

  SimError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Number of samples of a uniform grid 0, dt, ..., covering [0, horizon].
inline std::size_t sample_count(double horizon, double dt) {
  return static_cast<std::size_t>(std::floor(horizon / dt + 1e-9)) + 1;
}

/// Multi-signal time series on the grid t_k = k * dt.
class Trace {
 public:
  Trace() = default;
  Trace(double dt, double horizon) : dt_(dt), horizon_(horizon) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw SimError(SimError::Kind::invalid_trace, "dt must be > 0");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
      throw SimError(SimError::Kind::invalid_trace, "horizon must be >= 0");
    }
    size_ = sample_count(horizon, dt);
  }

  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }

  /// Signal names in insertion order.
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] bool has(const std::string& name) const { return samples_.count(name) != 0; }

  void set(const std::string& name, std::vector<double> values) {
    if (values.size() != size_) {
      throw SimError(SimError::Kind::invalid_trace, "signal '" + name + "' has " + std::to_string(values.size()) +
                                                        " samples, expected " + std::to_string(size_));
    }
    auto [it, inserted] = samples_.insert_or_assign(name, std::move(values));
    if (inserted) names_.push_back(name);
  }

  [[nodiscard]] const std::vector<double>& operator[](const std::string& name) const {
    auto it = samples_.find(name);
    if (it == samples_.end()) throw SimError(SimError::Kind::signal_mismatch, "trace has no signal '" + name + "'");
    return it->second;
  }

 private:
  double dt_       = 1.0;
  double horizon_  = 0.0;
  std::size_t size_ = 1;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::vector<double>> samples_;
};

/// CSV with a `t` column first, then signals in declared order.
inline void write_csv(std::ostream& os, const Trace& trace) {
  os << 't';
  for (const auto& n : trace.names()) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    os << format_number(trace.time(k));
    for (const auto& n : trace.names()) os << ',' << format_number(trace[n][k]);
    os << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_cell(const std::string& s, std::size_t row) {
  if (s == "inf") return kTop;
  if (s == "-inf") return kBottom;
  double v   = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
    throw SimError(SimError::Kind::invalid_trace, "row " + std::to_string(row) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Reads a CSV trace.  The `t` column must start at 0 and be uniformly spaced;
/// a single-row file yields a one-sample trace with dt = 1.
inline Trace read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SimError(SimError::Kind::invalid_trace, "empty trace file");
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header.front() != "t") {
    throw SimError(SimError::Kind::invalid_trace, "first CSV column must be 't'");
  }
  std::vector<std::vector<double>> columns(header.size());
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SimError(SimError::Kind::invalid_trace, "row " + std::to_string(row) + ": expected " +
                                                        std::to_string(header.size()) + " columns");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) columns[c].push_back(detail::parse_cell(cells[c], row));
  }
  const auto& t = columns.front();
  if (t.empty()) throw SimError(SimError::Kind::invalid_trace, "trace has no samples");
  if (t.front() != 0.0) throw SimError(SimError::Kind::invalid_trace, "trace must start at t = 0");
  const double dt      = t.size() > 1 ? t[1] - t[0] : 1.0;
  const double horizon = t.back();
  if (!(dt > 0.0)) throw SimError(SimError::Kind::invalid_trace, "time column must be increasing");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (std::fabs(t[k] - static_cast<double>(k) * dt) > 1e-6 * dt) {
      throw SimError(SimError::Kind::invalid_trace, "non-uniform sampling at row " + std::to_string(k + 2));
    }
  }
  Trace trace(dt, horizon);
  if (trace.size() != t.size()) throw SimError(SimError::Kind::invalid_trace, "inconsistent sample count");
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty() || trace.has(header[c])) {
      throw SimError(SimError::Kind::invalid_trace, "bad or duplicate column name '" + header[c] + "'");
    }
    trace.set(header[c], std::move(columns[c]));
  }
  return trace;
}

/// Deterministic discrete-time system.  A model object is immutable; all
/// run-specific data lives in the state vector returned by reset().
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual const std::vector<std::string>& inputs() const = 0;
  [[nodiscard]] virtual const std::vector<std::string>& outputs() const = 0;

  [[nodiscard]] virtual std::vector<double> reset() const = 0;

  /// Produces the outputs at the current step from `state` and `u`, then
  /// advances `state` by dt.
  virtual std::vector<double> step(std::vector<double>& state, std::span<const double> u, double dt) const = 0;
};

struct GainCrossParams {
  double g11 = 1.0;
  double g22 = 1.0;
  double g12 = 0.0;  // input 1 -> output 2
  double g21 = 0.0;  // input 2 -> output 1
  double lo  = -0.49;
  double hi  = 10.2;
};

/// Memoryless two-channel model with cross contamination and output clamp:
///   y1 = clamp(g11 u1 + g21 u2),  y2 = clamp(g22 u2 + g12 u1).
class GainCrossModel final : public SystemModel {
 public:
  explicit GainCrossModel(GainCrossParams p, std::string name = "gain-cross") : p_(p), name_(std::move(name)) {}

  [[nodiscard]] std::string name() const override { return name_; }
  [[nodiscard]] const std::vector<std::string>& inputs() const override { return inputs_; }
  [[nodiscard]] const std::vector<std::string>& outputs() const override { return outputs_; }
  [[nodiscard]] const GainCrossParams& params() const noexcept { return p_; }

  [[nodiscard]] std::vector<double> reset() const override { return {}; }

  std::vector<double> step(std::vector<double>&, std::span<const double> u, double) const override {
    return {std::clamp(p_.g11 * u[0] + p_.g21 * u[1], p_.lo, p_.hi),
            std::clamp(p_.g22 * u[1] + p_.g12 * u[0], p_.lo, p_.hi)};
  }

 private:
  GainCrossParams p_;
  std::string name_;
  std::vector<std::string> inputs_{"u1", "u2"};
  std::vector<std::string> outputs_{"y1", "y2"};
};

/// Observer-mode benchmark versions: v0 without cross terms, v1 adds 0.01 from
/// input 1 to output 2, v2 also 0.01 from input 2 to output 1, v3 raises the
/// latter to 0.1.
inline GainCrossParams omm_preset(int version) {
  GainCrossParams p;
  switch (version) {
    case 0: break;
    case 1: p.g12 = 0.01; break;
    case 2:
      p.g12 = 0.01;
      p.g21 = 0.01;
      break;
    case 3:
      p.g12 = 0.01;
      p.g21 = 0.1;
      break;
    default: throw SimError(SimError::Kind::unknown_model, "no OMM version " + std::to_string(version));
  }
  return p;
}

struct PlantDemoParams {
  double time_constant = 2.0;   // s
  double ambient       = 80.0;  // pressure with no steam and no cooling
  double steam_gain    = 2.0;
  double setpoint      = 87.25;
  double kp            = 0.8;
  double ki            = 0.4;
  double cooling_max   = 10.0;
  double temp_base     = 79.6;
  double temp_gain     = 0.4;
  double nominal_flow  = 4.0;
};

/// First-order pressure plant regulated by a PI controller acting on the
/// cooling flow.  Input F_s (steam flow); outputs T_s, P_s, F_cw.
/// State: [pressure, integrator].  Explicit Euler.
class PlantDemoModel final : public SystemModel {
 public:
  explicit PlantDemoModel(PlantDemoParams p = {}) : p_(p) {}

  [[nodiscard]] std::string name() const override { return "plant-demo"; }
  [[nodiscard]] const std::vector<std::string>& inputs() const override { return inputs_; }
  [[nodiscard]] const std::vector<std::string>& outputs() const override { return outputs_; }

  [[nodiscard]] std::vector<double> reset() const override {
    // Equilibrium at the nominal flow.
    const double integ = p_.steam_gain * p_.nominal_flow - (p_.setpoint - p_.ambient);
    return {p_.setpoint, integ};
  }

  std::vector<double> step(std::vector<double>& state, std::span<const double> u, double dt) const override {
    const double pressure = state[0];
    const double err      = pressure - p_.setpoint;
    const double cooling  = std::clamp(p_.kp * err + state[1], 0.0, p_.cooling_max);
    const double temp     = p_.temp_base + p_.temp_gain * err;

    const double dp = (-(pressure - p_.ambient) + p_.steam_gain * u[0] - cooling) / p_.time_constant;
    state[0]        = pressure + dt * dp;
    state[1]        = std::clamp(state[1] + dt * p_.ki * err, 0.0, p_.cooling_max);
    return {temp, pressure, cooling};
  }

 private:
  PlantDemoParams p_;
  std::vector<std::string> inputs_{"F_s"};
  std::vector<std::string> outputs_{"T_s", "P_s", "F_cw"};
};

inline std::vector<std::string> builtin_models() { return {"omm-v0", "omm-v1", "omm-v2", "omm-v3", "plant-demo"}; }

inline std::unique_ptr<SystemModel> make_model(const std::string& name) {
  if (name.size() == 6 && name.rfind("omm-v", 0) == 0 && name[5] >= '0' && name[5] <= '3') {
    return std::make_unique<GainCrossModel>(omm_preset(name[5] - '0'), name);
  }
  if (name == "plant-demo") return std::make_unique<PlantDemoModel>();
  throw SimError(SimError::Kind::unknown_model, "unknown model '" + name + "'");
}

/// Runs `model` on `inputs`; the result holds the inputs followed by the
/// model outputs on the same grid.
inline Trace simulate(const SystemModel& model, const Trace& inputs) {
  const auto& in_names  = model.inputs();
  const auto& out_names = model.outputs();
  for (const auto& n : in_names) {
    if (!inputs.has(n)) throw SimError(SimError::Kind::signal_mismatch, "input trace lacks '" + n + "'");
  }
  for (const auto& n : out_names) {
    if (inputs.has(n)) throw SimError(SimError::Kind::signal_mismatch, "input trace already has output '" + n + "'");
  }

  const std::size_t n = inputs.size();
  std::vector<std::vector<double>> outs(out_names.size(), std::vector<double>(n));
  std::vector<double> state = model.reset();
  std::vector<double> u(in_names.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < in_names.size(); ++i) u[i] = inputs[in_names[i]][k];
    const auto y = model.step(state, u, inputs.dt());
    for (std::size_t j = 0; j < out_names.size(); ++j) {
      if (!std::isfinite(y[j])) {
        throw SimError(SimError::Kind::non_finite_output,
                       "model output '" + out_names[j] + "' is not finite at t = " + format_number(inputs.time(k)));
      }
      outs[j][k] = y[j];
    }
  }

  Trace result = inputs;
  for (std::size_t j = 0; j < out_names.size(); ++j) result.set(out_names[j], std::move(outs[j]));
  return result;
}

}  // namespace rtfalsify
