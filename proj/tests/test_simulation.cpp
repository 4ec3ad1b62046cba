#include <gtest/gtest.h>

#include "support.hpp"

using namespace rotec;

namespace {

BuiltScenario with(const std::string& name, std::initializer_list<std::pair<const char*, const char*>> overrides) {
  Config cfg = Config::load(rotec::testing::scenario_path(name));
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  return build_scenario(cfg);
}

}  // namespace

TEST(PerformanceIndex, ConstantOffset) {
  std::vector<Vector> v(10, Vector::Constant(1, 2.0)), r(10, Vector::Zero(1));
  EXPECT_NEAR(performance_index(v, r, 0.1), 4.0, 1e-14);
  std::vector<Vector> v2(4, Vector::Ones(2)), r2(4, Vector::Zero(2));
  EXPECT_NEAR(performance_index(v2, r2, 0.5), 4.0, 1e-14);
  EXPECT_THROW(performance_index(v, r2, 0.1), Error);
}

TEST(Simulate, ZeroBudgetHoldsTheInitialCommand) {
  const auto b = with("deadbeat", {{"budget.override_us", "0"}});
  const auto tr = simulate(b.scenario, 1);
  for (const auto& rec : tr.records) {
    EXPECT_EQ(rec.v(0), 0.0);
    EXPECT_EQ(rec.flow_steps, 0);
    EXPECT_FALSE(rec.rejected);
  }
  EXPECT_NEAR(tr.pi, 0.25 * b.scenario.duration, 1e-12);
  EXPECT_NEAR(performance_index(tr, b.scenario.period), tr.pi, 1e-12);
  EXPECT_EQ(tr.violations, 0);
}

TEST(Simulate, DeadbeatConvergesToReference) {
  const auto b = load_scenario(rotec::testing::scenario_path("deadbeat"));
  const auto tr = simulate(b.scenario, 1);
  EXPECT_NEAR(tr.records.back().v(0), 0.5, 1e-6);
  EXPECT_NEAR(tr.records.back().y(0), 0.5, 1e-5);
  EXPECT_EQ(tr.violations, 0);
}

TEST(Simulate, SameSeedSameTrace) {
  const auto b = load_scenario(rotec::testing::scenario_path("vehicle_case3"));
  const auto a = simulate(b.scenario, 3), c = simulate(b.scenario, 3), d = simulate(b.scenario, 4);
  ASSERT_EQ(a.records.size(), c.records.size());
  bool budgets_differ = false;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].v, c.records[k].v);
    EXPECT_EQ(a.records[k].z, c.records[k].z);
    EXPECT_EQ(a.records[k].budget, c.records[k].budget);
    budgets_differ = budgets_differ || a.records[k].budget != d.records[k].budget;
  }
  EXPECT_EQ(a.pi, c.pi);
  EXPECT_TRUE(budgets_differ);
}

TEST(Simulate, MoreBudgetNeverHurtsOnTheStressRun) {
  double prev = 1e300;
  for (const char* us : {"10", "100", "10000", "100000"}) {
    const auto b = with("vehicle_stress", {{"budget.override_us", us}});
    const auto tr = simulate(b.scenario, 1);
    EXPECT_EQ(tr.violations, 0) << us;
    EXPECT_LE(tr.pi, prev) << us;
    prev = tr.pi;
  }
}

TEST(Simulate, ExactGovernorsRespectConstraints) {
  for (const char* name : {"vehicle_case1", "vehicle_case2"}) {
    const auto b = load_scenario(rotec::testing::scenario_path(name));
    const auto tr = simulate(b.scenario, 1);
    EXPECT_EQ(tr.violations, 0) << name;
    EXPECT_LE(tr.max_output_ratio, 1.0 + 1e-9) << name;
    EXPECT_EQ(tr.flow_steps, 0);
  }
  const auto t = with("vehicle_case3", {{"governor.mode", "oracle_tightened"}});
  EXPECT_EQ(simulate(t.scenario, 1).violations, 0);
}

TEST(Simulate, WallClockBudgetStaysSafe) {
  const auto b = with("vehicle_case3", {{"budget.deterministic", "false"}});
  const auto tr = simulate(b.scenario, 1);
  EXPECT_EQ(tr.violations, 0);
  EXPECT_GT(tr.flow_steps, 0);
}

TEST(Simulate, ObserverSeesEveryAdvancedStep) {
  const auto b = load_scenario(rotec::testing::scenario_path("vehicle_fishhook"));
  long long seen = 0;
  const auto tr = simulate(b.scenario, 2, [&](const Vector& z, const FlowState& s) {
    ++seen;
    ASSERT_TRUE(contains(b.nominal, z, s.v_hat));
  });
  EXPECT_EQ(seen, tr.flow_steps - tr.stalls);
}

TEST(Simulate, FishhookSwitchesOnce) {
  const auto b = load_scenario(rotec::testing::scenario_path("vehicle_fishhook"));
  const auto tr = simulate(b.scenario, 1);
  ASSERT_TRUE(tr.switch_time.has_value());
  EXPECT_GT(*tr.switch_time, 0.5);
  int changes = 0;
  for (std::size_t k = 1; k < tr.records.size(); ++k) changes += tr.records[k].r != tr.records[k - 1].r ? 1 : 0;
  EXPECT_EQ(changes, 2);
  EXPECT_EQ(tr.violations, 0);
}

TEST(Reference, StepAndSinusoid) {
  StepReference s;
  s.breakpoints = {{0.0, Vector::Constant(1, 1.0)}, {2.0, Vector::Constant(1, -3.0)}};
  ReferenceTracker st(s);
  const Vector z = Vector::Zero(2);
  EXPECT_EQ(st.at_sample(1.9, z)(0), 1.0);
  EXPECT_EQ(st.at_sample(2.0, z)(0), -3.0);
  SinusoidReference w{Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), 0.25, 0.0};
  ReferenceTracker sw(w);
  EXPECT_NEAR(sw.at_sample(1.0, z)(0), 3.0, 1e-14);
  EXPECT_NEAR(sw.between(2.0, Vector::Zero(1))(0), 1.0, 1e-14);
}

TEST(Reference, FishhookWaitsForSignChange) {
  FishhookReference f{Vector::Constant(1, 5.0), Vector::Constant(1, -5.0), 1.0, 1};
  ReferenceTracker tr(f);
  Vector z = Vector::Zero(2);
  EXPECT_EQ(tr.at_sample(0.5, z)(0), 0.0);
  z(1) = 0.3;
  EXPECT_EQ(tr.at_sample(1.0, z)(0), 5.0);
  z(1) = 0.0;
  EXPECT_EQ(tr.at_sample(1.1, z)(0), 5.0);
  z(1) = 0.1;
  EXPECT_EQ(tr.at_sample(1.2, z)(0), 5.0);
  z(1) = -0.1;
  EXPECT_EQ(tr.at_sample(1.3, z)(0), -5.0);
  EXPECT_NEAR(*tr.switch_time(), 1.3, 1e-15);
  z(1) = 0.2;
  EXPECT_EQ(tr.at_sample(1.4, z)(0), -5.0);
  EXPECT_EQ(tr.between(1.45, Vector::Constant(1, -5.0))(0), -5.0);
}

TEST(Scenario, ValidationErrorsAreConfigErrors) {
  Config cfg = Config::load(rotec::testing::scenario_path("deadbeat"));
  cfg.set("run.z0", "[1 2 3]");
  try {
    (void)build_scenario(cfg);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  Config bad = Config::load(rotec::testing::scenario_path("deadbeat"));
  bad.set("reference.kind", "ramp");
  EXPECT_THROW(build_scenario(bad), Error);
  Config far = Config::load(rotec::testing::scenario_path("deadbeat"));
  far.set("run.v0", "5");
  EXPECT_THROW(build_scenario(far), Error);
}

TEST(Scenario, DefaultDiscretizationMarginScalesWithBeta) {
  const auto b = load_scenario(rotec::testing::scenario_path("vehicle_base"));
  EXPECT_NEAR(b.scenario.problem.set.vartheta(), 0.1, 1e-15);
  const auto d = load_scenario(rotec::testing::scenario_path("deadbeat"));
  EXPECT_NEAR(d.scenario.problem.set.vartheta(), 0.01, 1e-15);
}
