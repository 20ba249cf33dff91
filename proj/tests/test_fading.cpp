#include <gtest/gtest.h>

#include <random>

#include "ctpc/fading.hpp"
#include "ctpc/verify.hpp"
#include "oracles.hpp"

using namespace ctpc;

namespace {

FadingStates two_state() {
  FadingStates fs;
  fs.states = {(Mat(2, 2) << 0.42, 0.89, 0.63, 0.15).finished(), (Mat(2, 2) << 1.2, 0.3, 0.2, 0.9).finished()};
  fs.probs = (Vec(2) << 0.5, 0.5).finished();
  fs.N = Vec::Ones(2);
  fs.Pmax = Vec::Ones(2);
  fs.L = Vec::Constant(2, 10.0);
  return fs;
}

}  // namespace

TEST(FadingValidate, Rejects) {
  FadingStates fs = two_state();
  fs.probs(0) = 0.6;
  EXPECT_THROW(validate(fs), Error);
  fs = two_state();
  fs.probs = (Vec(2) << 0.5 + 1e-10, 0.5).finished();
  EXPECT_THROW(validate(fs), Error);
  fs = two_state();
  fs.probs << 1.0, 0.0;
  EXPECT_THROW(validate(fs), Error);
  fs = two_state();
  fs.states[1](0, 0) = 0;
  try {
    validate(fs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field().rfind("states[1].", 0), 0u);
  }
  fs = two_state();
  EXPECT_THROW(validate(fs, 1), Error);
}

TEST(Fading, SingleStateMatchesPerfectCsi) {
  FadingStates fs = two_state();
  fs.states.resize(1);
  fs.probs = Vec::Ones(1);
  for (const auto& spec : {CostSpec::max(), CostSpec::weighted_sum(Vec::Constant(2, 0.5))}) {
    const double ref = solve_perfect_csi(fs.instance(0), spec).cost;
    EXPECT_LT(oracle::rel(solve_adaptive_avg(fs, spec).objective, ref), 1e-7);
    EXPECT_LT(oracle::rel(solve_adaptive_expected_cost(fs, spec, PowerMode::short_term).objective, ref), 1e-7);
    EXPECT_LT(oracle::rel(solve_adaptive_expected_cost(fs, spec, PowerMode::average).objective, ref), 1e-7);
  }
}

TEST(Fading, IdenticalStatesActLikeOne) {
  FadingStates fs = two_state();
  fs.states[1] = fs.states[0];
  const auto sol = solve_adaptive_avg(fs, CostSpec::max());
  EXPECT_LT((sol.P[0] - sol.P[1]).cwiseAbs().maxCoeff(), 1e-4);
  const double ref = solve_perfect_csi(fs.instance(0), CostSpec::max()).cost;
  EXPECT_LT(oracle::rel(sol.objective, ref), 1e-7);
}

TEST(Fading, AverageRelaxesShortTermSingleUser) {
  FadingStates fs;
  fs.states = {Mat::Constant(1, 1, 4.0), Mat::Constant(1, 1, 1.0)};
  fs.probs = (Vec(2) << 0.5, 0.5).finished();
  fs.N = Vec::Ones(1);
  fs.Pmax = Vec::Ones(1);
  fs.L = Vec::Constant(1, 10.0);
  const auto avg = solve_adaptive(fs, CostSpec::max(), FadingObjective::cost_of_expectation, PowerMode::average);
  const auto st =
      solve_adaptive(fs, CostSpec::max(), FadingObjective::cost_of_expectation, PowerMode::short_term);
  EXPECT_LE(avg.objective, st.objective * (1 + 1e-9));
  EXPECT_LT(avg.objective, st.objective * (1 - 1e-4));  // strict on asymmetric states
}

TEST(Fading, ShortTermExpectedCostDecomposes) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 5; ++k) {
    const FadingStates fs = verify::random_fading(rng, 2, 3);
    const CostSpec spec = k % 2 ? CostSpec::p_norm(2) : CostSpec::sum_r_largest(1);
    const auto joint = solve_adaptive(fs, spec, FadingObjective::expected_cost, PowerMode::short_term,
                                      Strategy::joint);
    const auto split = solve_adaptive(fs, spec, FadingObjective::expected_cost, PowerMode::short_term,
                                      Strategy::decomposed);
    double ref = 0;
    for (int s = 0; s < fs.S(); ++s) {
      const Solution one = solve_perfect_csi(fs.instance(s), spec);
      ref += fs.probs(s) * one.cost;
      EXPECT_LT(oracle::rel(split.T[static_cast<std::size_t>(s)].maxCoeff(), one.T.maxCoeff()), 1e-9);
    }
    EXPECT_LT(oracle::rel(joint.objective, ref), 1e-6);
    EXPECT_LT(oracle::rel(split.objective, ref), 1e-9);
    for (int s = 0; s < fs.S(); ++s) {
      const Vec& a = joint.P[static_cast<std::size_t>(s)];
      const Vec& b = split.P[static_cast<std::size_t>(s)];
      EXPECT_LT(((a - b).array().abs() / b.array().max(1e-6)).maxCoeff(), 1e-4);
    }
  }
}

TEST(Fading, ModeOrderingOnRandomInstances) {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 6; ++k) {
    const FadingStates fs = verify::random_fading(rng, 2, 2);
    for (auto obj : {FadingObjective::cost_of_expectation, FadingObjective::expected_cost}) {
      const auto avg = solve_adaptive(fs, CostSpec::max(), obj, PowerMode::average);
      const auto st = solve_adaptive(fs, CostSpec::max(), obj, PowerMode::short_term);
      EXPECT_LE(avg.objective, st.objective * (1 + 1e-9));
    }
  }
}

TEST(Fading, PowerConstraintsHold) {
  const FadingStates fs = two_state();
  const auto avg = solve_adaptive_avg(fs, CostSpec::max());
  for (int i = 0; i < 2; ++i) {
    double mean = 0;
    for (int s = 0; s < 2; ++s) mean += fs.probs(s) * avg.P[static_cast<std::size_t>(s)](i);
    EXPECT_LE(mean, fs.Pmax(i) * (1 + 1e-9));
  }
  const auto st = solve_adaptive(fs, CostSpec::max(), FadingObjective::cost_of_expectation, PowerMode::short_term);
  for (const auto& P : st.P) EXPECT_TRUE((P.array() <= fs.Pmax.array() * (1 + 1e-12)).all());
  EXPECT_EQ(avg.mode, PowerMode::average);
}

TEST(Fading, ExpectedTimesAndJensen) {
  const FadingStates fs = two_state();
  for (const auto& spec : {CostSpec::max(), CostSpec::p_norm(2), CostSpec::sum_r_largest(1)}) {
    const auto sol = solve_adaptive(fs, spec, FadingObjective::expected_cost, PowerMode::average);
    Vec ET = Vec::Zero(2);
    double EJ = 0;
    for (int s = 0; s < 2; ++s) {
      ET += fs.probs(s) * sol.T[static_cast<std::size_t>(s)];
      EJ += fs.probs(s) * eval_cost(spec, sol.T[static_cast<std::size_t>(s)]);
    }
    EXPECT_LT((ET - sol.expected_T).cwiseAbs().maxCoeff(), 1e-9 * ET.maxCoeff());
    EXPECT_LE(eval_cost(spec, ET), EJ * (1 + 1e-12));
    EXPECT_LT(oracle::rel(sol.objective, EJ), 1e-9);
  }
}

TEST(Fading, PerStateTimesFollowThePhysics) {
  const FadingStates fs = two_state();
  const auto sol = solve_adaptive_avg(fs, CostSpec::weighted_sum(Vec::Constant(2, 0.5)));
  for (int s = 0; s < 2; ++s) {
    const LinkState st = link_state(fs.instance(s), {sol.P[static_cast<std::size_t>(s)]});
    EXPECT_LT((st.T - sol.T[static_cast<std::size_t>(s)]).cwiseAbs().maxCoeff(), 1e-9 * st.T.maxCoeff());
  }
}
