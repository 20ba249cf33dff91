#include <gtest/gtest.h>

#include <random>

#include "ctpc/solver.hpp"
#include "ctpc/verify.hpp"
#include "oracles.hpp"

using namespace ctpc;

namespace {

NetworkInstance sample(bool with_cap = false) {
  NetworkInstance inst;
  inst.G = (Mat(2, 2) << 0.42, 0.89, 0.63, 0.15).finished();
  inst.N = Vec::Ones(2);
  inst.Pmax = Vec::Ones(2);
  inst.L = Vec::Constant(2, 10.0);
  if (with_cap) inst.Tmax = Vec::Constant(2, 1000.0);
  return inst;
}

void expect_consistent(const NetworkInstance& inst, const Solution& s) {
  const LinkState st = link_state(inst, {s.P});
  for (int i = 0; i < inst.M(); ++i) EXPECT_LT(oracle::rel(s.T(i), st.T(i)), 1e-9);
  EXPECT_LE(s.certificate.max_violation, 1e-9);
  EXPECT_EQ(s.certificate.status, "optimal");
  EXPECT_LE(s.certificate.gap, 1e-8);
  EXPECT_TRUE((s.P.array() <= inst.Pmax.array()).all());
  EXPECT_TRUE((s.P.array() >= 0).all());
}

}  // namespace

TEST(Solver, SampleInstanceAllCostsAgainstGrid) {
  const NetworkInstance inst = sample();
  struct Case {
    CostSpec spec;
    double tol;  // grid error is first order at a kink
  };
  const std::vector<Case> cases{{CostSpec::weighted_sum(Vec::Constant(2, 0.5)), 1e-4},
                                {CostSpec::max(), 1e-2},
                                {CostSpec::sum_r_largest(1), 1e-2},
                                {CostSpec::sum_r_largest(2), 1e-4},
                                {CostSpec::p_norm(2), 1e-3},
                                {CostSpec::p_norm(1), 1e-4}};
  for (const auto& c : cases) {
    const Solution s = solve_perfect_csi(inst, c.spec);
    const Solution o = brute_force_oracle(inst, c.spec, 400);
    expect_consistent(inst, s);
    EXPECT_LE(s.cost, o.cost * (1 + 1e-9)) << kind_name(c.spec);
    EXPECT_LT(oracle::rel(s.cost, o.cost), c.tol) << kind_name(c.spec);
  }
}

TEST(Solver, EqualWeightsAtFullPower) {
  // both users at full power is optimal for the equal-weight sum on the sample instance
  const Solution s = solve_perfect_csi(sample(), CostSpec::weighted_sum(Vec::Constant(2, 0.5)));
  EXPECT_NEAR(s.P(0), 1.0, 1e-6);
  EXPECT_NEAR(s.P(1), 1.0, 1e-6);
  EXPECT_NEAR(s.cost, 0.5 * (oracle::kSampleT[0] + oracle::kSampleT[1]), 1e-6);
}

TEST(Solver, SumOneLargestEqualsMax) {
  const Solution a = solve_perfect_csi(sample(), CostSpec::max());
  const Solution b = solve_perfect_csi(sample(), CostSpec::sum_r_largest(1));
  EXPECT_LT(oracle::rel(a.cost, b.cost), 1e-7);
}

TEST(Solver, PNormOneIsTheSum) {
  const Solution a = solve_perfect_csi(sample(), CostSpec::p_norm(1));
  const Solution b = solve_perfect_csi(sample(), CostSpec::weighted_sum(Vec::Constant(2, 0.5)));
  EXPECT_LT(oracle::rel(a.cost, 2 * b.cost), 1e-8);
}

TEST(Solver, ExtremeWeightAgainstGrid) {
  const NetworkInstance inst = sample(true);
  const CostSpec spec = CostSpec::weighted_sum((Vec(2) << 1.0, 0.0).finished());
  const Solution s = solve_perfect_csi(inst, spec);
  const Solution o = brute_force_oracle(inst, spec, 400);
  expect_consistent(inst, s);
  EXPECT_LE(s.T(0), o.T(0) * (1 + 1e-9));
  EXPECT_LT(oracle::rel(s.T(0), o.T(0)), 2e-3);
  EXPECT_NEAR(s.T(1), 1000.0, 1e-3);  // user 2 pushed to its cap
}

TEST(Solver, ZeroWeightWithoutCapClampsPower) {
  const Solution s = solve_perfect_csi(sample(), CostSpec::weighted_sum((Vec(2) << 1.0, 0.0).finished()));
  EXPECT_LT(oracle::rel(s.T(0), interference_free_time(sample(), 0)), 1e-6);
  ASSERT_EQ(s.certificate.clamp_active.size(), 2u);
  EXPECT_TRUE(s.certificate.clamp_active[1]);
  EXPECT_FALSE(s.certificate.clamp_active[0]);
}

TEST(Solver, RandomInstancesAgainstGrid) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10; ++k) {
    const NetworkInstance inst = verify::random_instance(rng, 2);
    for (const auto& spec : {CostSpec::weighted_sum(verify::random_weights(rng, 2)), CostSpec::p_norm(3)}) {
      const Solution s = solve_perfect_csi(inst, spec);
      const Solution o = brute_force_oracle(inst, spec, 200);
      expect_consistent(inst, s);
      EXPECT_LE(s.cost, o.cost * (1 + 1e-9));
      EXPECT_LT(oracle::rel(s.cost, o.cost), 1e-3);
    }
  }
}

TEST(Solver, JointlyInfeasibleCapsReported) {
  NetworkInstance inst = sample();
  inst.Tmax = (Vec(2) << 21.0, 52.0).finished();  // each achievable alone, not together
  ASSERT_NO_THROW(validate(inst));
  try {
    solve_perfect_csi(inst, CostSpec::max());
    FAIL();
  } catch (const SolveFailure& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible);
    EXPECT_TRUE(e.certificate().phase_one);
    EXPECT_GT(e.certificate().max_violation, 0);
  }
}

TEST(Solver, BindingCapIsRespected) {
  NetworkInstance inst = sample();
  const double free_opt = solve_perfect_csi(inst, CostSpec::max()).T(0);
  inst.Tmax = (Vec(2) << 1000.0, 75.0).finished();
  const Solution s = solve_perfect_csi(inst, CostSpec::weighted_sum((Vec(2) << 0.9, 0.1).finished()));
  expect_consistent(inst, s);
  EXPECT_LE(s.T(1), 75.0 * (1 + 1e-9));
  EXPECT_GT(free_opt, 0);
}

TEST(Solver, ExtraConstraints) {
  const NetworkInstance inst = sample();
  const CostSpec spec = CostSpec::weighted_sum(Vec::Constant(2, 0.5));
  const double base = solve_perfect_csi(inst, spec).cost;
  ExtraConstraints extra;
  extra.sum_power.push_back({{0, 1}, 1.2});
  const Solution s = solve_perfect_csi(inst, spec, {}, extra);
  EXPECT_LE(s.P.sum(), 1.2 * (1 + 1e-9));
  EXPECT_GE(s.cost, base * (1 - 1e-9));
  EXPECT_LE(original_violation(inst, s.P, s.T, extra), 1e-9);

  ExtraConstraints lin;
  lin.linear_time.push_back({(Vec(2) << 0.0, 1.0).finished(), 70.0});
  const Solution t = solve_perfect_csi(inst, spec, {}, lin);
  EXPECT_LE(t.T(1), 70.0 * (1 + 1e-9));
}

TEST(Solver, DeterministicAcrossRuns) {
  const Solution a = solve_perfect_csi(sample(), CostSpec::p_norm(2));
  const Solution b = solve_perfect_csi(sample(), CostSpec::p_norm(2));
  EXPECT_TRUE(a == b);
}

TEST(Solver, ThreeUsers) {
  NetworkInstance inst;
  inst.G = (Mat(3, 3) << 1.0, 0.2, 0.1, 0.3, 0.8, 0.2, 0.1, 0.25, 1.2).finished();
  inst.N = Vec::Constant(3, 0.5);
  inst.Pmax = (Vec(3) << 2.0, 1.0, 1.0).finished();
  inst.L = (Vec(3) << 8.0, 12.0, 10.0).finished();
  for (const auto& spec : {CostSpec::max(), CostSpec::sum_r_largest(2), CostSpec::p_norm(4)}) {
    const Solution s = solve_perfect_csi(inst, spec);
    expect_consistent(inst, s);
    const Solution o = brute_force_oracle(inst, spec, 60);
    EXPECT_LE(s.cost, o.cost * (1 + 1e-9)) << kind_name(spec);
  }
}

TEST(Solver, InvalidInputs) {
  SolveOptions bad;
  bad.barrier.mu = 1.0;
  EXPECT_THROW(solve_perfect_csi(sample(), CostSpec::max(), bad), Error);
  EXPECT_THROW(solve_perfect_csi(sample(), CostSpec::sum_r_largest(3)), Error);
  NetworkInstance inst = sample();
  inst.N = Vec::Ones(3);
  EXPECT_THROW(solve_perfect_csi(inst, CostSpec::max()), Error);
}

TEST(Solver, IterationCapReportsNotConverged) {
  SolveOptions o;
  o.barrier.max_outer = 1;
  try {
    solve_perfect_csi(sample(), CostSpec::max(), o);
    FAIL();
  } catch (const SolveFailure& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_converged);
    EXPECT_GT(e.certificate().gap, 1e-8);
  }
}

TEST(Oracle, GridNestsAndImprovesWithResolution) {
  const CostSpec spec = CostSpec::p_norm(2);
  const double coarse = brute_force_oracle(sample(), spec, 50).cost;
  const double fine = brute_force_oracle(sample(), spec, 100).cost;
  EXPECT_LE(fine, coarse);
  EXPECT_EQ(brute_force_oracle(sample(), spec, 50).certificate.status, "grid");
}
