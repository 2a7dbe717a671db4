#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "rtfalsify/monitor.hpp"
#include "support/oracle.hpp"

namespace rtfalsify {
namespace {

RequirementsTable sc_table() {
  std::ifstream in(std::string(RTFALSIFY_DATA_DIR) + "/sc.rt");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_table(ss.str());
}

Env sc_env(double t, double f_s, double t_s = 80.0, double p_s = 87.25) {
  Env env;
  env.t       = t;
  env.signals = {{"F_s", f_s}, {"T_s", t_s}, {"P_s", p_s}};
  return env;
}

Trace constant_trace(double dt, double horizon, std::initializer_list<std::pair<std::string, double>> values) {
  Trace tr(dt, horizon);
  for (const auto& [name, v] : values) tr.set(name, std::vector<double>(tr.size(), v));
  return tr;
}

MonitorError::Kind monitor_error_kind(const MonitorAutomaton& a, const Trace& tr) {
  try {
    run_monitor(a, tr);
  } catch (const MonitorError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected MonitorError";
  return MonitorError::Kind::signal_mismatch;
}

TEST(Compile, SteamCondenserStructure) {
  const MonitorAutomaton a = compile(sc_table());
  ASSERT_EQ(a.machines.size(), 3u);
  EXPECT_FALSE(a.machines[0].has_wait());
  EXPECT_FALSE(a.machines[1].has_wait());
  EXPECT_TRUE(a.machines[2].has_wait());
  EXPECT_EQ(*a.machines[2].duration, 5.0);
  EXPECT_EQ(a.prev_signals, (std::vector<std::string>{"F_s"}));
  EXPECT_FALSE(a.machines[0].guard);
  EXPECT_EQ(*a.machines[1].exit_guard, ~((time_var() >= 30) & (time_var() <= 35)));
}

TEST(Compile, UnconditionedRequirementHasConstantGuard) {
  const auto a = compile(parse_table("table T\ninputs x\nreq 1\n post x > 0\n"));
  ASSERT_EQ(a.machines.size(), 1u);
  EXPECT_FALSE(a.machines[0].guard);
  EXPECT_FALSE(a.machines[0].has_wait());
}

TEST(Compile, RejectsInvalidTable) {
  EXPECT_THROW(compile(parse_table_syntax("table T\ninputs x\nreq 1\n post y > 0\n")), TableError);
}

TEST(MonitorInit, SteamCondenserHighFlow) {
  const auto a = compile(sc_table());
  const auto s = monitor_init(a, sc_env(0, 5));
  EXPECT_EQ(s.machines[0].phase, Phase::poa);
  EXPECT_EQ(s.machines[1].phase, Phase::prc);
  EXPECT_EQ(s.machines[2].phase, Phase::wt);
  EXPECT_EQ(s.machines[2].entry_time, 0.0);
  // Entry step already emits: R1 active, R2/R3 inactive.
  EXPECT_EQ(s.step_degrees[0], 1.0);  // min(80 - 79, 90.5 - 87.25)
  EXPECT_EQ(s.step_degrees[1], kTop);
  EXPECT_EQ(s.step_degrees[2], kTop);
  EXPECT_EQ(s.action_outputs.at("F_diff"), 5.0);  // 5 - init 0
}

TEST(MonitorInit, SteamCondenserNoFlow) {
  const auto s = monitor_init(compile(sc_table()), sc_env(0, 0));
  EXPECT_EQ(s.machines[2].phase, Phase::prc);
}

TEST(MonitorInit, GuardTrueAtStart) {
  const auto a = compile(parse_table("table T\ninputs x\nreq 1\n pre t >= 0\n post x > 0\n"));
  Env env;
  env.signals = {{"x", 1.0}};
  EXPECT_EQ(monitor_init(a, env).machines[0].phase, Phase::poa);
}

TEST(MonitorStep, PressureWindowOpens) {
  const auto a = compile(sc_table());
  auto s       = monitor_init(a, sc_env(29.9, 0));
  ASSERT_EQ(s.machines[1].phase, Phase::prc);
  const auto& d = monitor_step(a, s, sc_env(0, 0, 80.0, 87.25), 30.0);
  EXPECT_EQ(s.machines[1].phase, Phase::poa);
  EXPECT_EQ(d[1], 0.25);
}

TEST(MonitorStep, WaitElapsesAtDuration) {
  const auto a = compile(sc_table());
  auto s       = monitor_init(a, sc_env(0, 5));
  for (int k = 1; k <= 4; ++k) {
    monitor_step(a, s, sc_env(0, 5), k);
    EXPECT_EQ(s.machines[2].phase, Phase::wt) << "t=" << k;
    EXPECT_EQ(s.step_degrees[2], kTop);
  }
  monitor_step(a, s, sc_env(0, 5), 5.0);
  EXPECT_EQ(s.machines[2].phase, Phase::poa);
  EXPECT_EQ(s.step_degrees[2], 80.0 - 79.3);
}

TEST(MonitorStep, WaitAbortsWhenGuardDrops) {
  const auto a = compile(sc_table());
  auto s       = monitor_init(a, sc_env(0, 5));
  monitor_step(a, s, sc_env(0, 5), 1.0);
  monitor_step(a, s, sc_env(0, 3), 2.0);
  EXPECT_EQ(s.machines[2].phase, Phase::prc);
  EXPECT_EQ(s.step_degrees[2], kTop);
  // Re-arming restarts the timer.
  monitor_step(a, s, sc_env(0, 5), 3.0);
  EXPECT_EQ(s.machines[2].phase, Phase::wt);
  EXPECT_EQ(s.machines[2].entry_time, 3.0);
}

TEST(MonitorStep, PostconditionPhaseExitsOnNegatedGuard) {
  const auto a = compile(sc_table());
  auto s       = monitor_init(a, sc_env(30, 0));
  ASSERT_EQ(s.machines[1].phase, Phase::poa);
  monitor_step(a, s, sc_env(0, 0), 35.5);
  EXPECT_EQ(s.machines[1].phase, Phase::prc);
}

TEST(MonitorStep, TimeMustIncrease) {
  const auto a = compile(sc_table());
  auto s       = monitor_init(a, sc_env(1, 0));
  try {
    monitor_step(a, s, sc_env(0, 0), 1.0);
    FAIL();
  } catch (const MonitorError& e) {
    EXPECT_EQ(e.kind(), MonitorError::Kind::time_not_increasing);
  }
}

TEST(RunMonitor, InactiveRequirementEmitsTop) {
  const auto run = run_monitor(compile(sc_table()), constant_trace(1.0, 20.0, {{"F_s", 0}, {"T_s", 80}, {"P_s", 87.25}}));
  for (const auto& row : run.degrees) EXPECT_EQ(row[1], kTop);
}

TEST(RunMonitor, PressureExcursionInWindowViolates) {
  Trace tr(0.5, 40.0);
  std::vector<double> p(tr.size(), 87.25);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.time(k) >= 31.0 && tr.time(k) <= 33.0) p[k] = 87.9;
  }
  tr.set("F_s", std::vector<double>(tr.size(), 3.0));
  tr.set("T_s", std::vector<double>(tr.size(), 80.0));
  tr.set("P_s", p);
  const auto run = run_monitor(compile(sc_table()), tr);
  EXPECT_LT(run.fitness, 0.0);
  EXPECT_NEAR(run.fitness, 87.5 - 87.9, 1e-12);
  EXPECT_EQ(violated_requirements(run), (std::vector<int>{2}));
}

TEST(RunMonitor, ConstantTraceMargins) {
  const auto a = compile(parse_table("table T\ninputs x, y\nreq 1\n post x > 1\nreq 2\n post y < 3\n"));
  const auto run = run_monitor(a, constant_trace(0.1, 5.0, {{"x", 1.2}, {"y", 2.3}}));
  EXPECT_DOUBLE_EQ(run.fitness, 0.2);
  EXPECT_DOUBLE_EQ(run.degrees.back()[1], 0.7);
  EXPECT_TRUE(violated_requirements(run).empty());
}

TEST(RunMonitor, EmptyTableIsVacuous) {
  const auto run = run_monitor(compile(parse_table("table T\ninputs x\n")), constant_trace(1, 5, {{"x", 0}}));
  EXPECT_EQ(run.fitness, kTop);
}

TEST(RunMonitor, MissingInputColumn) {
  EXPECT_EQ(monitor_error_kind(compile(sc_table()), constant_trace(1, 5, {{"F_s", 0}, {"T_s", 80}})),
            MonitorError::Kind::signal_mismatch);
}

TEST(RunMonitor, MissingActionStopsTheRun) {
  const auto a = compile(parse_table(
      "table T\ninputs x\noutputs y\ninit y = 0\nreq 1\n pre x > 0\n action y = x\n"));
  Trace tr(1.0, 3.0);
  tr.set("x", {1, 1, -1, 1});
  EXPECT_EQ(monitor_error_kind(a, tr), MonitorError::Kind::missing_action);
}

TEST(RunMonitor, ConflictingActions) {
  const auto a = compile(parse_table(
      "table T\ninputs x\noutputs y\ninit y = 0\nreq 1\n action y = x\nreq 2\n pre x > 2\n action y = x + 1\n"));
  Trace tr(1.0, 2.0);
  tr.set("x", {1, 2, 3});
  EXPECT_EQ(monitor_error_kind(a, tr), MonitorError::Kind::conflicting_action);

  // Agreeing writers are fine.
  const auto b = compile(parse_table(
      "table T\ninputs x\noutputs y\ninit y = 0\nreq 1\n action y = x\nreq 2\n pre x > 2\n action y = x * 1\n"));
  EXPECT_NO_THROW(run_monitor(b, tr));
}

TEST(RunMonitor, PostconditionReadsActionOutput) {
  const auto a = compile(parse_table(
      "table T\ninputs x\noutputs d\ninit x = 0\ninit d = 0\nreq 1\n post d < 2\n action d = x - prev(x)\n"));
  Trace tr(1.0, 3.0);
  tr.set("x", {0, 1, 4, 4.5});
  const auto run = run_monitor(a, tr);
  EXPECT_EQ(run.degrees[2][0], -1.0);  // d = 3
  EXPECT_EQ(run.fitness, -1.0);
}

TEST(RunMonitor, PrevReproducesFirstDifference) {
  const auto a = compile(sc_table());
  testing::Generator gen(21);
  for (int i = 0; i < 50; ++i) {
    Trace tr = gen.trace({"F_s", "T_s", "P_s"}, static_cast<std::size_t>(gen.uniform_int(2, 100)), 0.5);
    const auto run = run_monitor(a, tr);
    const auto& f  = tr["F_s"];
    const auto& d  = run.outputs["F_diff"];
    EXPECT_EQ(d[0], f[0] - 0.0);
    for (std::size_t k = 1; k < f.size(); ++k) EXPECT_EQ(d[k], f[k] - f[k - 1]);
  }
}

TEST(RunMonitor, DegreeCsvLayout) {
  const auto a   = compile(parse_table("table T\ninputs x\nreq 1\n post x > 0\nreq 2\n pre x > 5\n post x < 9\n"));
  Trace tr(0.5, 1.0);
  tr.set("x", {1, 2, 6});
  std::ostringstream os;
  write_degree_csv(os, run_monitor(a, tr), tr.dt());
  EXPECT_EQ(os.str(),
            "t,ff_1,ff_2,ff_total_running\n"
            "0,1,inf,1\n"
            "0.5,2,inf,1\n"
            "1,6,3,1\n");
}

class RandomRuns : public ::testing::Test {
 protected:
  testing::Generator gen_{1234};
};

TEST_F(RandomRuns, PhaseInvariantsAndOracleAgreement) {
  int compared = 0, violated = 0;
  for (int i = 0; i < 300; ++i) {
    const double dt   = 0.5;
    const auto table  = gen_.table(5, dt, gen_.coin());
    const auto a      = compile(table);
    const Trace tr    = gen_.trace(table.inputs, static_cast<std::size_t>(gen_.uniform_int(50, 200)), dt);
    const auto run    = run_monitor(a, tr);
    const auto oracle = testing::phase_oracle(table, tr);

    bool any_duration = false;
    for (const auto& r : table.requirements) any_duration = any_duration || r.duration.has_value();

    Degree last = kTop;
    for (std::size_t k = 0; k < run.phases.size(); ++k) {
      EXPECT_LE(run.running[k], last);
      last = run.running[k];
      for (std::size_t m = 0; m < run.phases[k].size(); ++m) {
        const Phase p = run.phases[k][m];
        if (!any_duration) {
          EXPECT_NE(p, Phase::wt);
        }
        // Same phase as the oracle's replay.
        EXPECT_EQ(static_cast<int>(p), static_cast<int>(oracle.phases[k][m]));
        if (p != Phase::poa) {
          EXPECT_EQ(run.degrees[k][m], kTop);
        }
      }
    }
    if (testing::touches_boundary(run)) continue;
    ++compared;
    violated += oracle.violated;
    EXPECT_EQ(run.fitness < 0.0, oracle.violated) << to_text(table);
  }
  EXPECT_GT(compared, 200);
  EXPECT_GT(violated, 20);
  EXPECT_GT(compared - violated, 20);
}

TEST(Duration, ZeroDurationMatchesNoDuration) {
  testing::Generator gen(77);
  for (int i = 0; i < 100; ++i) {
    const Bool pre  = gen.boolean({"x0", "x1"}, {}, 1, true);
    const Bool post = gen.boolean({"x0", "x1"}, {}, 1);
    RequirementsTable with, without;
    with.name = without.name = "T";
    with.inputs = without.inputs = {"x0", "x1"};
    without.requirements.push_back(Requirement{1, pre, std::nullopt, post, {}, 0});
    with.requirements.push_back(Requirement{1, pre, 0.0, post, {}, 0});
    const Trace tr = gen.trace({"x0", "x1"}, 60, 0.5);
    const auto r1  = run_monitor(compile(with), tr);
    const auto r2  = run_monitor(compile(without), tr);
    EXPECT_EQ(r1.degrees, r2.degrees);
    EXPECT_EQ(r1.phases, r2.phases);
  }
}

}  // namespace
}  // namespace rtfalsify
