#pragma once

// Command implementations behind the `rtfalsify` executable.  Each command
// writes human-readable text to `out`, diagnostics to `err`, and returns the
// process exit code.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtfalsify/monitor.hpp"
#include "rtfalsify/search.hpp"
#include "rtfalsify/sim.hpp"
#include "rtfalsify/table.hpp"

namespace rtfalsify::cli {

// Exit codes.
inline constexpr int kFound      = 0;   // TC, or check/monitor success
inline constexpr int kInvalid    = 1;   // table validation failure
inline constexpr int kParse      = 2;   // table syntax error
inline constexpr int kRuntime    = 3;   // I/O, signal mismatch, monitor errors
inline constexpr int kNotFound   = 10;  // NFF
inline constexpr int kUsage      = 64;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunSpec {
  std::string table_path;
  std::string model;
  std::vector<SignalSpec> inputs;  // empty: model defaults
  std::optional<double> horizon;   // unset: model default
  std::optional<double> dt;
  SearchConfig search;
  std::size_t runs = 1;
  std::string out_dir = "out";
};

struct ModelDefaults {
  double horizon;
  double dt;
  std::vector<SignalSpec> inputs;
};

inline ModelDefaults model_defaults(const std::string& model) {
  if (model == "plant-demo") return {40.0, 0.01, {{"F_s", 3.5, 4.5, 1}}};
  return {10.0, 0.1, {{"u1", -100.0, 100.0, 1}, {"u2", -100.0, 100.0, 1}}};
}

/// Parses `name:lo:hi[:k]`.
inline SignalSpec parse_input_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() < 3 || parts.size() > 4 || parts[0].empty()) {
    throw UsageError("--input expects <name>:<lo>:<hi>[:k], got '" + text + "'");
  }
  auto number = [&](const std::string& s) {
    double v   = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
      throw UsageError("bad number '" + s + "' in --input " + text);
    }
    return v;
  };
  SignalSpec spec{parts[0], number(parts[1]), number(parts[2]), 1};
  if (parts.size() == 4) {
    const double k = number(parts[3]);
    if (k < 0 || k != static_cast<int>(k)) throw UsageError("discontinuity count must be a non-negative integer");
    spec.discontinuities = static_cast<int>(k);
  }
  if (!(spec.lo <= spec.hi)) throw UsageError("empty range in --input " + text);
  return spec;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json degree_json(Degree d) {
  if (d == kTop) return "inf";
  if (d == kBottom) return "-inf";
  return d;
}

/// Loads a table, printing diagnostics.  Returns the exit code on failure.
inline std::optional<RequirementsTable> load_table(const std::string& path, std::ostream& err, int& code) {
  RequirementsTable table;
  try {
    table = parse_table_syntax(read_file(path));
  } catch (const TableError& e) {
    err << path << ':' << format(e.diagnostic()) << '\n';
    code = kParse;
    return std::nullopt;
  }
  if (auto diags = validate(table); !diags.empty()) {
    for (const auto& d : diags) err << path << ':' << format(d) << '\n';
    code = kInvalid;
    return std::nullopt;
  }
  return table;
}

inline int cmd_check(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    int code = 0;
    auto table = load_table(path, err, code);
    if (!table) return code;
    out << path << ": ok (" << table->requirements.size() << " requirements)\n";
    return kFound;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

/// Offline monitoring of a recorded trace.  Prints the fitness and writes the
/// per-step degree CSV to `degrees_path` (skipped when empty).
inline int cmd_monitor(const std::string& table_path, const std::string& trace_path, const std::string& degrees_path,
                       std::ostream& out, std::ostream& err) {
  try {
    int code = 0;
    auto table = load_table(table_path, err, code);
    if (!table) return code;
    std::ifstream in(trace_path);
    if (!in) throw std::runtime_error("cannot open '" + trace_path + "'");
    const Trace trace      = read_csv(in);
    const MonitorRun run   = run_monitor(compile(*table), trace);
    if (!degrees_path.empty()) {
      std::ofstream os(degrees_path);
      if (!os) throw std::runtime_error("cannot write '" + degrees_path + "'");
      write_degree_csv(os, run, trace.dt());
    }
    out << "fitness " << format_number(run.fitness) << '\n';
    const auto violated = violated_requirements(run);
    if (!violated.empty()) {
      out << "violated";
      for (int idx : violated) out << ' ' << idx;
      out << '\n';
    }
    return kFound;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

/// Result document of one falsification run; contains everything needed to
/// reproduce it and nothing run-environment specific.
inline nlohmann::json result_json(const RunSpec& spec, const ParameterizedInput& input, const SearchConfig& cfg,
                                  const FalsificationResult& r) {
  using nlohmann::json;
  json inputs = json::array();
  for (const auto& s : input.signals()) {
    inputs.push_back({{"name", s.name}, {"lo", s.lo}, {"hi", s.hi}, {"discontinuities", s.discontinuities}});
  }
  json params = json::array();
  for (std::size_t i = 0; i < r.best_params.size(); ++i) {
    params.push_back({{"name", input.parameters()[i].name}, {"value", r.best_params[i]}});
  }
  json history = json::array();
  for (Degree d : r.history) history.push_back(degree_json(d));

  json doc;
  doc["verdict"] = to_string(r.verdict);
  doc["seed"]    = cfg.seed;
  doc["config"]  = {
      {"model", spec.model},
      {"table", spec.table_path},
      {"algorithm", to_string(cfg.algorithm)},
      {"budget", cfg.budget},
      {"annealing",
        {{"initial_temperature", cfg.annealing.initial_temperature},
         {"cooling", cfg.annealing.cooling},
         {"proposal_scale", cfg.annealing.proposal_scale}}},
      {"horizon", input.horizon()},
      {"dt", input.dt()},
      {"inputs", inputs},
  };
  doc["best_parameters"] = params;
  doc["best_fitness"]    = degree_json(r.best_fitness);
  doc["iterations"]      = r.iterations;
  doc["violated"]        = r.violated;
  doc["history"]         = history;
  return doc;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << text;
}

/// Runs the search `spec.runs` times with seeds seed, seed+1, ...  Writes
/// result.json, best_trace.csv and best_degrees.csv per run (in run_<i>/
/// subdirectories plus summary.json when runs > 1).
inline int cmd_falsify(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    if (spec.runs < 1) throw UsageError("--runs must be >= 1");
    try {
      spec.search.validate();
    } catch (const SearchError& e) {
      throw UsageError(e.what());
    }

    int code = 0;
    auto table = load_table(spec.table_path, err, code);
    if (!table) return code;

    const auto model    = make_model(spec.model);
    const auto defaults = model_defaults(spec.model);
    ParameterizedInput input(spec.inputs.empty() ? defaults.inputs : spec.inputs, spec.horizon.value_or(defaults.horizon),
                             spec.dt.value_or(defaults.dt));
    const Problem problem(*model, compile(*table), input);

    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);
    nlohmann::json summary = {{"runs", nlohmann::json::array()}};
    std::size_t found = 0;

    for (std::size_t i = 0; i < spec.runs; ++i) {
      SearchConfig cfg = spec.search;
      cfg.seed         = spec.search.seed + i;
      const FalsificationResult r = falsify(problem, cfg);
      if (r.verdict == Verdict::tc) ++found;

      const fs::path dir = spec.runs == 1 ? fs::path(spec.out_dir) : fs::path(spec.out_dir) / ("run_" + std::to_string(i + 1));
      fs::create_directories(dir);
      write_text(dir / "result.json", result_json(spec, input, cfg, r).dump(2) + "\n");

      const Evaluation best = problem.evaluate(r.best_params);
      std::ostringstream trace_csv, degree_csv;
      write_csv(trace_csv, best.trace);
      write_degree_csv(degree_csv, best.run, input.dt());
      write_text(dir / "best_trace.csv", trace_csv.str());
      write_text(dir / "best_degrees.csv", degree_csv.str());

      out << "run " << (i + 1) << " seed " << cfg.seed << ": " << to_string(r.verdict) << " fitness "
          << format_number(r.best_fitness) << " after " << r.iterations << " iterations";
      if (!r.violated.empty()) {
        out << " violated";
        for (int idx : r.violated) out << ' ' << idx;
      }
      out << '\n';
      summary["runs"].push_back({{"seed", cfg.seed},
                                 {"verdict", to_string(r.verdict)},
                                 {"best_fitness", degree_json(r.best_fitness)},
                                 {"iterations", r.iterations}});
    }
    if (spec.runs > 1) {
      summary["tc_runs"] = found;
      write_text(fs::path(spec.out_dir) / "summary.json", summary.dump(2) + "\n");
    }
    return found > 0 ? kFound : kNotFound;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace rtfalsify::cli
