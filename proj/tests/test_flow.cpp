#include <gtest/gtest.h>

#include "support.hpp"

using namespace rotec;

namespace {

const BuiltScenario& vehicle() {
  static const BuiltScenario b = load_scenario(rotec::testing::scenario_path("vehicle_base"));
  return b;
}

FlowParams params(Integrator integ = Integrator::LinearlyImplicitEuler) {
  FlowParams p;
  p.integrator = integ;
  return p;
}

}  // namespace

TEST(Psi, CancelsOutwardDriftOnlyAtZero) {
  EXPECT_EQ(psi(0.0, -0.3), 0.3);
  EXPECT_EQ(psi(0.0, 0.3), 0.0);
  EXPECT_EQ(psi(0.2, -0.3), 0.0);
  EXPECT_EQ(psi(0.0, 0.0), 0.0);
}

TEST(Acceptance, ImprovementTest) {
  const Matrix q = Matrix::Identity(1, 1);
  const Vector r = Vector::Constant(1, 1.0);
  const Vector prev = Vector::Zero(1);
  EXPECT_TRUE(acceptance(prev, prev, r, q));
  EXPECT_TRUE(acceptance(Vector::Constant(1, 0.5), prev, r, q));
  EXPECT_TRUE(acceptance(r, prev, r, q));
  EXPECT_FALSE(acceptance(Vector::Constant(1, 1.5), prev, r, q));
  EXPECT_FALSE(acceptance(Vector::Constant(1, -0.1), prev, r, q));
}

TEST(Acceptance, UsesTheWeightedNorm) {
  Matrix q(2, 2);
  q << 4, 0, 0, 1;
  const Vector r = Vector::Zero(2);
  Vector prev(2), cand(2);
  prev << 1, 1;
  cand << 0, 1.4;
  // ||c-r||_Q^2 + ||c-p||_Q^2 = 1.96 + (4 + 0.16) = 6.12 > ||p-r||_Q^2 = 5
  EXPECT_FALSE(acceptance(cand, prev, r, q));
  cand << 0.5, 0.5;
  // 1 + 0.25 + 1 + 0.25 = 2.5 <= 5
  EXPECT_TRUE(acceptance(cand, prev, r, q));
}

TEST(WarmStart, ShiftsEachOutputBlock) {
  Vector l(8);
  l << 1, 2, 3, 9, 11, 12, 13, 19;
  Vector want(8);
  want << 2, 3, 3, 9, 12, 13, 13, 19;
  EXPECT_EQ(warm_start_lambda(l, 2, 2), want);
  Vector l0(2);
  l0 << 5, 7;
  EXPECT_EQ(warm_start_lambda(l0, 1, 0), l0);
  EXPECT_THROW(warm_start_lambda(l, 3, 2), Error);
}

TEST(FlowStep, OracleIsAFixedPoint) {
  SplitMix64 rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = rotec::testing::random_instance(rng, 2 + trial % 2, 1 + trial % 2, 1 + trial % 2, 1e4, 0.05);
    const auto pair = rotec::testing::feasible_pair(rng, inst);
    const Vector r = pair.v + rotec::testing::random_vector(rng, inst.sys.nv(), -5.0, 5.0);
    const auto sol = solve_tightened_oracle(inst.prob, pair.z, r);
    for (auto integ : {Integrator::LinearlyImplicitEuler, Integrator::ForwardEuler}) {
      const auto out = flow_step(inst.prob, pair.z, r, FlowState{sol.v, sol.lambda, 0.0}, params(integ));
      ASSERT_FALSE(out.stalled);
      EXPECT_LE((out.state.v_hat - sol.v).norm(), 1e-9 * std::max(1.0, sol.v.norm())) << "trial " << trial;
      EXPECT_LE((out.state.lambda_hat - sol.lambda).norm(), 1e-9 * std::max(1.0, sol.lambda.norm()))
          << "trial " << trial;
    }
  }
}

TEST(FlowStep, RejectsBadState) {
  const auto& prob = vehicle().scenario.problem;
  const Vector z = Vector::Zero(5);
  FlowState s{Vector::Zero(1), Vector::Zero(prob.set.size()), 0.0};
  EXPECT_NO_THROW(flow_step(prob, z, Vector::Zero(1), s, params()));
  s.lambda_hat(0) = -1.0;
  EXPECT_THROW(flow_step(prob, z, Vector::Zero(1), s, params()), Error);
  FlowState wrong{Vector::Zero(2), Vector::Zero(prob.set.size()), 0.0};
  EXPECT_THROW(flow_step(prob, z, Vector::Zero(1), wrong, params()), Error);
  FlowParams bad;
  bad.sigma = 0.0;
  EXPECT_THROW(flow_step(prob, z, Vector::Zero(1), FlowState{Vector::Zero(1), Vector::Zero(prob.set.size()), 0.0}, bad),
               Error);
  bad = FlowParams{};
  bad.boundary_fraction = 1.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(RotecStep, ZeroBudgetKeepsPreviousCommand) {
  const auto& prob = vehicle().scenario.problem;
  const Vector z = Vector::Zero(5);
  const Vector prev = Vector::Constant(1, 3.0);
  Vector lambda = Vector::Zero(prob.set.size());
  lambda(1) = 0.5;
  const auto res = rotec_step(prob, z, Vector::Constant(1, 10.0), prev, lambda, Budget::of_steps(0), params());
  EXPECT_EQ(res.v_applied, prev);
  EXPECT_EQ(res.flow_steps, 0);
  EXPECT_FALSE(res.accepted);
  EXPECT_EQ(res.u, control(prob.sys, z, prev));
  EXPECT_EQ(res.lambda_out, warm_start_lambda(lambda, prob.set.n_outputs(), prob.set.s_star()));
  const auto late = rotec_step(prob, z, Vector::Constant(1, 10.0), prev, lambda,
                               Budget::until(std::chrono::steady_clock::now() - std::chrono::seconds(1)), params());
  EXPECT_EQ(late.flow_steps, 0);
  EXPECT_THROW(Budget::of_steps(-1), Error);
}

TEST(RotecStep, InfeasiblePreviousCommandRaises) {
  const auto& prob = vehicle().scenario.problem;
  const Vector z = Vector::Zero(5);
  try {
    (void)rotec_step(prob, z, Vector::Zero(1), Vector::Constant(1, 1e4), Vector::Zero(prob.set.size()),
                     Budget::of_steps(5), params());
    FAIL() << "expected InvarianceViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvarianceViolation);
  }
}

TEST(RotecStep, AcceptedCommandsImproveOnThePrevious) {
  SplitMix64 rng(67);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = rotec::testing::random_instance(rng, 2, 1 + trial % 2, 1, 1e4, 0.05);
    const auto pair = rotec::testing::feasible_pair(rng, inst);
    const Vector r = pair.v + rotec::testing::random_vector(rng, inst.sys.nv(), -5.0, 5.0);
    const auto res = rotec_step(inst.prob, pair.z, r, pair.v, Vector::Zero(inst.prob.set.size()),
                                Budget::of_steps(1 + trial * 7), params());
    if (res.accepted) {
      EXPECT_TRUE(acceptance(res.v_applied, pair.v, r, inst.prob.Q));
      EXPECT_TRUE(contains(inst.prob.set, pair.z, res.v_applied, 0.0));
    } else {
      EXPECT_EQ(res.v_applied, pair.v);
    }
    EXPECT_LE((res.u - control(inst.sys, pair.z, res.v_applied)).norm(), 1e-12);
  }
}

TEST(RotecStep, ExposedStatesStayInTheDomain) {
  SplitMix64 rng(71);
  long long seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = rotec::testing::random_instance(rng, 2 + trial % 2, 1 + trial % 2, 1 + trial % 2, 1e4, 0.05);
    const auto pair = rotec::testing::feasible_pair(rng, inst);
    const Vector r = pair.v + rotec::testing::random_vector(rng, inst.sys.nv(), -20.0, 20.0);
    const auto integ = trial % 3 == 0 ? Integrator::ForwardEuler : Integrator::LinearlyImplicitEuler;
    (void)rotec_step(inst.prob, pair.z, r, pair.v, Vector::Zero(inst.prob.set.size()), Budget::of_steps(2000),
                     params(integ), [&](const FlowState& s) {
                       ++seen;
                       ASSERT_TRUE(contains(inst.nominal, pair.z, s.v_hat));
                       ASSERT_GE(s.lambda_hat.minCoeff(), 0.0);
                     });
  }
  EXPECT_GT(seen, 100000);
}

TEST(RotecStep, GenerousBudgetConverges) {
  SplitMix64 rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = rotec::testing::random_instance(rng, 2, 1 + trial % 2, 1, 1e4, 0.05);
    const auto pair = rotec::testing::feasible_pair(rng, inst);
    const Vector r = pair.v + rotec::testing::random_vector(rng, inst.sys.nv(), -5.0, 5.0);
    const auto sol = solve_tightened_oracle(inst.prob, pair.z, r);
    FlowState s{pair.v, Vector::Zero(inst.prob.set.size()), 0.0};
    for (int k = 0; k < 50000; ++k) s = flow_step(inst.prob, pair.z, r, s, params()).state;
    EXPECT_LE((s.v_hat - sol.v).norm(), 1e-6 * std::max(1.0, sol.v.norm())) << "trial " << trial;
  }
}

TEST(InBarrierDomain, StrictNominalFeasibility) {
  const auto& prob = vehicle().scenario.problem;
  const Vector z = Vector::Zero(5);
  EXPECT_TRUE(in_barrier_domain(prob, z, Vector::Zero(1)));
  EXPECT_FALSE(in_barrier_domain(prob, z, Vector::Constant(1, 1e4)));
}
