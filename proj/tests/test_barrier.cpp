#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "ctpc/barrier.hpp"
#include "ctpc/model.hpp"
#include "ctpc/transform.hpp"
#include "oracles.hpp"

using namespace ctpc;

TEST(CtBound, ValueMatchesDefinition) {
  for (double x = -20; x <= 20; x += 0.25)
    EXPECT_LT(oracle::rel(ct_bound(x).value, std::numbers::ln2 / std::log1p(std::exp(x))), 1e-13) << x;
}

TEST(CtBound, DerivativesMatchFiniteDifferences) {
  for (int k = 0; k <= 40; ++k) {
    const double x = -10.0 + 0.5 * k;
    const double h = 1e-4 * std::max(1.0, std::abs(x));
    const CtBound b = ct_bound(x);
    const double d1 = (ct_bound(x + h).value - ct_bound(x - h).value) / (2 * h);
    const double d2 = (ct_bound(x + h).d1 - ct_bound(x - h).d1) / (2 * h);
    EXPECT_LT(oracle::rel(b.d1, d1), 1e-6) << x;
    EXPECT_LT(oracle::rel(b.d2, d2), 1e-6) << x;
  }
}

TEST(CtBound, DisplayedSecondDerivativeAgreesAndIsPositive) {
  for (int k = 0; k <= 40; ++k) {
    const double x = -10.0 + 0.5 * k;
    const double closed = ct_bound_second_derivative_closed_form(x);
    EXPECT_GT(closed, 0) << x;
    EXPECT_LT(oracle::rel(closed, ct_bound(x).d2), 1e-9) << x;
  }
}

TEST(CtBound, StableInTheTails) {
  for (double x : {-700.0, -50.0, 50.0, 700.0}) {
    const CtBound b = ct_bound(x);
    EXPECT_TRUE(std::isfinite(b.value) || x < -600) << x;
    EXPECT_GE(b.d2, 0) << x;
    EXPECT_LE(b.d1, 0) << x;
  }
}

TEST(CtBound, InverseRoundTrip) {
  for (double x = -8; x <= 8; x += 0.5) {
    const double T = 10 * ct_bound(x).value;
    EXPECT_NEAR(ct_bound_inverse(10, T), x, 1e-9);
  }
}

TEST(CtBoundRow, DerivativesMatchFiniteDifferences) {
  const auto row = ct_bound_row(0, 1, 10.0, "ct");
  for (double x = -5; x <= 5; x += 1)
    EXPECT_LT(oracle::row_derivative_error(row, (Vec(2) << 30.0, x).finished()), 1e-6);
}

TEST(SinrRow, ResidualSignMatchesPhysics) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> g(0.05, 1.5), p(-4.0, 0.0), s(-4.0, 2.0);
  for (int k = 0; k < 500; ++k) {
    NetworkInstance inst;
    inst.G.resize(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) inst.G(i, j) = g(rng);
    inst.N = Vec::Constant(3, 0.3);
    inst.Pmax = Vec::Ones(3);
    inst.L = Vec::Ones(3);
    TransformedPoint x;
    x.Ptilde = (Vec(3) << p(rng), p(rng), p(rng)).finished();
    x.Stilde = (Vec(3) << s(rng), s(rng), s(rng)).finished();
    const Vec S = sinr(inst, {x.Ptilde.array().exp().matrix()});
    for (int i = 0; i < 3; ++i) {
      const double res = feasibility_residual(i, x, inst);
      EXPECT_NEAR(res, x.Stilde(i) - std::log(S(i)), 1e-12);
      EXPECT_EQ(res <= 0, std::exp(x.Stilde(i)) <= S(i) * (1 + 1e-14));
    }
  }
}

TEST(SinrRow, RowAgreesWithResidualAndDerivatives) {
  NetworkInstance inst;
  inst.G = (Mat(3, 3) << 1.0, 0.2, 0.0, 0.3, 0.8, 0.4, 0.1, 0.1, 1.2).finished();
  inst.N = (Vec(3) << 0.5, 0.2, 1.0).finished();
  inst.Pmax = Vec::Ones(3);
  inst.L = Vec::Ones(3);
  TransformedPoint x;
  x.Stilde = (Vec(3) << -0.5, 0.2, -1.0).finished();
  x.Ptilde = (Vec(3) << -0.3, -1.2, -0.1).finished();
  for (int i = 0; i < 3; ++i) {
    const auto row = sinr_row(i, inst.G, inst.N(i), 0, {1, 2, 3}, "sinr");
    Vec local(4);
    local << x.Stilde(i), x.Ptilde;
    EXPECT_NEAR(row.eval(local, nullptr, nullptr), feasibility_residual(i, x, inst), 1e-13);
    EXPECT_LT(oracle::row_derivative_error(row, local), 1e-6);
  }
}

TEST(LogSumExp, StableForLargeArguments) {
  const Vec y = (Vec(3) << 1000.0, 999.0, -1000.0).finished();
  EXPECT_NEAR(barrier::log_sum_exp(y), 1000.0 + std::log1p(std::exp(-1.0)), 1e-12);
}

TEST(Barrier, LinearProgramOnBox) {
  // minimize x + 2y on [1, 3] x [-1, 2]
  barrier::Program prog(2);
  prog.linear_objective << 1.0, 2.0;
  prog.constraints.push_back(barrier::linear_row({{0, -1.0}}, -1.0, "x>=1"));
  prog.constraints.push_back(barrier::linear_row({{0, 1.0}}, 3.0, "x<=3"));
  prog.constraints.push_back(barrier::linear_row({{1, -1.0}}, 1.0, "y>=-1"));
  prog.constraints.push_back(barrier::linear_row({{1, 1.0}}, 2.0, "y<=2"));
  const auto r = barrier::minimize(prog, (Vec(2) << 2.0, 0.0).finished(), {});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
  EXPECT_NEAR(r.x(1), -1.0, 1e-7);
  EXPECT_LE(r.gap, 1e-8);
}

TEST(Barrier, LogSumExpConstraint) {
  // minimize -x - y s.t. ln(e^x + e^y) <= 0  ->  x = y = -ln 2
  barrier::Program prog(2);
  prog.linear_objective << -1.0, -1.0;
  prog.constraints.push_back(barrier::lse_row({0, 1}, Mat::Identity(2, 2), Vec::Zero(2), "lse"));
  const auto r = barrier::minimize(prog, (Vec(2) << -2.0, -2.0).finished(), {});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), -std::numbers::ln2, 1e-7);
  EXPECT_NEAR(r.x(1), -std::numbers::ln2, 1e-7);
}

TEST(Barrier, SmoothObjectiveTerm) {
  // minimize (x - 3)^2 s.t. x <= 1
  barrier::Program prog(1);
  barrier::Row q;
  q.vars = {0};
  q.eval = [](const Vec& x, Vec* g, Mat* H) {
    if (g) *g = Vec::Constant(1, 2 * (x(0) - 3));
    if (H) *H = Mat::Constant(1, 1, 2.0);
    return (x(0) - 3) * (x(0) - 3);
  };
  prog.objective_terms.push_back(q);
  prog.constraints.push_back(barrier::linear_row({{0, 1.0}}, 1.0, "x<=1"));
  const auto r = barrier::minimize(prog, Vec::Constant(1, 0.0), {});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
}

TEST(Barrier, RejectsInfeasibleStart) {
  barrier::Program prog(1);
  prog.linear_objective << 1.0;
  prog.constraints.push_back(barrier::linear_row({{0, -1.0}}, -1.0, "x>=1"));
  EXPECT_FALSE(barrier::strictly_feasible(prog, Vec::Constant(1, 0.0)));
  EXPECT_TRUE(barrier::strictly_feasible(prog, Vec::Constant(1, 2.0)));
}

TEST(PhaseOne, FindsInteriorPoint) {
  std::vector<barrier::Row> rows{barrier::linear_row({{0, -1.0}}, -1.0, "x>=1"),
                                 barrier::linear_row({{0, 1.0}}, 1.5, "x<=1.5"),
                                 barrier::lse_row({0, 1}, Mat::Identity(2, 2), Vec::Constant(2, -3.0), "lse"),
                                 barrier::linear_row({{1, -1.0}}, 10.0, "y>=-10")};
  const auto r = barrier::phase_one(rows, 2, (Vec(2) << 5.0, 5.0).finished(), {});
  ASSERT_TRUE(r.feasible);
  for (const auto& row : rows) EXPECT_LT(row.eval(barrier::detail::gather(r.x, row.vars), nullptr, nullptr), 0);
}

TEST(PhaseOne, ReportsInfeasibility) {
  std::vector<barrier::Row> rows{barrier::linear_row({{0, -1.0}}, -1.0, "x>=1"),
                                 barrier::linear_row({{0, 1.0}}, -1.0, "x<=-1")};
  const auto r = barrier::phase_one(rows, 1, Vec::Constant(1, 0.0), {});
  EXPECT_FALSE(r.feasible);
  EXPECT_GT(r.min_slack, 0.5);
}
