#include <gtest/gtest.h>

#include <sstream>

#include "rtfalsify/sim.hpp"

namespace rtfalsify {
namespace {

Trace inputs(double dt, double horizon, double u1, double u2) {
  Trace tr(dt, horizon);
  tr.set("u1", std::vector<double>(tr.size(), u1));
  tr.set("u2", std::vector<double>(tr.size(), u2));
  return tr;
}

TEST(Trace, SampleCount) {
  EXPECT_EQ(Trace(0.1, 10.0).size(), 101u);
  EXPECT_EQ(Trace(0.01, 40.0).size(), 4001u);
  EXPECT_EQ(Trace(1.0, 0.0).size(), 1u);
  EXPECT_EQ(Trace(0.3, 1.0).size(), 4u);
  EXPECT_THROW(Trace(0.0, 1.0), SimError);
  EXPECT_THROW(Trace(1.0, -1.0), SimError);
}

TEST(Trace, LengthMismatchRejected) {
  Trace tr(1.0, 3.0);
  EXPECT_THROW(tr.set("x", {1, 2}), SimError);
}

TEST(Simulate, IdentityGainsReproduceInputs) {
  const GainCrossModel m(GainCrossParams{1, 1, 0, 0, -0.49, 10.2});
  const Trace out = simulate(m, inputs(0.1, 2.0, 0.5, 0.5));
  for (std::size_t k = 0; k < out.size(); ++k) {
    EXPECT_EQ(out["y1"][k], 0.5);
    EXPECT_EQ(out["y2"][k], 0.5);
  }
  EXPECT_EQ(out.names(), (std::vector<std::string>{"u1", "u2", "y1", "y2"}));
}

TEST(Simulate, CrossContaminationHitsLowerClamp) {
  const GainCrossModel m(omm_preset(1));
  const Trace out = simulate(m, inputs(0.1, 1.0, -100.0, 0.5));
  EXPECT_EQ(out["y2"][0], -0.49);  // clamp(0.5 - 1.0)
  EXPECT_EQ(out["y1"][0], -0.49);
}

TEST(Simulate, ZeroHorizon) {
  const Trace out = simulate(GainCrossModel(omm_preset(0)), inputs(0.1, 0.0, 1.0, 2.0));
  EXPECT_EQ(out.size(), 1u);
  EXPECT_EQ(out["y2"][0], 2.0);
}

TEST(Simulate, MissingInput) {
  Trace tr(1.0, 1.0);
  tr.set("u1", {0, 0});
  try {
    simulate(GainCrossModel(omm_preset(0)), tr);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.kind(), SimError::Kind::signal_mismatch);
  }
}

TEST(Simulate, NonFiniteOutput) {
  const GainCrossModel m(GainCrossParams{1, 1, 0, 0, -kTop, kTop});
  try {
    simulate(m, inputs(1.0, 1.0, 1e308, 1e308 * 10));
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.kind(), SimError::Kind::non_finite_output);
  }
}

TEST(OmmPresets, CrossGainLadder) {
  EXPECT_EQ(omm_preset(0).g12, 0.0);
  EXPECT_EQ(omm_preset(0).g21, 0.0);
  EXPECT_EQ(omm_preset(1).g12, 0.01);
  EXPECT_EQ(omm_preset(1).g21, 0.0);
  EXPECT_EQ(omm_preset(2).g12, 0.01);
  EXPECT_EQ(omm_preset(2).g21, 0.01);
  EXPECT_EQ(omm_preset(3).g12, 0.01);
  EXPECT_EQ(omm_preset(3).g21, 0.1);
  EXPECT_THROW(omm_preset(4), SimError);
}

TEST(OmmPresets, OutputsStayAboveMinusHalf) {
  for (int v = 0; v <= 3; ++v) {
    const GainCrossModel m(omm_preset(v));
    std::vector<double> state;
    for (double u1 = -100; u1 <= 100; u1 += 12.5) {
      for (double u2 = -100; u2 <= 100; u2 += 12.5) {
        const double in[] = {u1, u2};
        for (double y : m.step(state, in, 0.1)) {
          EXPECT_GT(y, -0.5);
          EXPECT_LE(y, 10.2);
        }
      }
    }
  }
}

TEST(PlantDemo, BoundedAndReproducible) {
  const auto m = make_model("plant-demo");
  Trace tr(0.01, 40.0);
  std::vector<double> f(tr.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = tr.time(k) < 20 ? 3.5 : 4.5;
  tr.set("F_s", f);
  const Trace a = simulate(*m, tr);
  const Trace b = simulate(*m, tr);
  for (const auto& name : {"T_s", "P_s", "F_cw"}) {
    EXPECT_EQ(a[name], b[name]);
    for (double v : a[name]) {
      EXPECT_GT(v, -1.0);
      EXPECT_LT(v, 200.0);
    }
  }
  // Starts at equilibrium for the nominal flow.
  Trace nominal(0.01, 5.0);
  nominal.set("F_s", std::vector<double>(nominal.size(), 4.0));
  const Trace n = simulate(*m, nominal);
  EXPECT_NEAR(n["P_s"].back(), 87.25, 1e-9);
}

TEST(Registry, BuiltinModels) {
  for (const auto& name : builtin_models()) EXPECT_EQ(make_model(name)->name(), name);
  EXPECT_THROW(make_model("omm-v9"), SimError);
}

TEST(Csv, RoundTrip) {
  Trace tr(0.1, 0.5);
  tr.set("a", {0, 0.1, -2.5, 1e-7, 3, kTop});
  tr.set("b", {1, 2, 3, 4, 5, 6});
  std::stringstream ss;
  write_csv(ss, tr);
  const Trace back = read_csv(ss);
  EXPECT_EQ(back.names(), tr.names());
  EXPECT_EQ(back.size(), tr.size());
  EXPECT_EQ(back.dt(), tr.dt());
  EXPECT_EQ(back["a"], tr["a"]);
  EXPECT_EQ(back["b"], tr["b"]);
}

TEST(Csv, Rejects) {
  for (const char* text : {"", "x,y\n0,1\n", "t,x\n0,1\n1,2\n3,4\n", "t,x\n0,1\n1\n", "t,x\n0,abc\n", "t,x,x\n0,1,2\n",
                           "t,x\n1,1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_csv(in), SimError) << text;
  }
}

}  // namespace
}  // namespace rtfalsify
