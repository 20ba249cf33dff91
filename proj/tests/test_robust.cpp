#include <gtest/gtest.h>

#include <random>

#include "ctpc/robust.hpp"
#include "ctpc/verify.hpp"
#include "oracles.hpp"

using namespace ctpc;

namespace {

const Mat kMean = (Mat(2, 2) << 1.0, 0.3, 0.2, 0.8).finished();
const Vec kN = Vec::Constant(2, 0.1);

RobustProblem two_user(double noise = 0.1) {
  return {Vec::Constant(2, noise), Vec::Ones(2), Vec::Constant(2, 10.0), std::nullopt};
}

}  // namespace

TEST(ReliabilityMc, Extremes) {
  const auto dist = ChannelDistribution::rayleigh(kMean);
  const Vec P = Vec::Ones(2);
  const auto tiny = reliability_mc(0, 1e-9, P, dist, kN, 20000, 3);
  EXPECT_GE(tiny.value, 1 - 3 * tiny.std_error - 1e-12);
  const auto off = reliability_mc(0, 0.5, (Vec(2) << 0.0, 1.0).finished(), dist, kN, 20000, 3);
  EXPECT_EQ(off.value, 0.0);
  EXPECT_EQ(off.estimator, "monte_carlo");
  EXPECT_EQ(off.samples, 20000);
}

TEST(ReliabilityMc, SingleUserExponential) {
  const auto dist = ChannelDistribution::rayleigh(Mat::Ones(1, 1));
  const auto est = reliability_mc(0, 1.0, Vec::Ones(1), dist, Vec::Ones(1), 1000000, 11);
  EXPECT_NEAR(est.value, std::exp(-1.0), 3 * est.std_error);
}

TEST(ReliabilityMc, ReproducibleAndThreadIndependent) {
  const auto dist = ChannelDistribution::rayleigh(kMean);
  const Vec P = (Vec(2) << 0.7, 0.4).finished();
  const long long n = 3 * kChunkSamples + 17;
  const auto a = reliability_mc(1, 0.8, P, dist, kN, n, 1234, 1);
  const auto b = reliability_mc(1, 0.8, P, dist, kN, n, 1234, 1);
  const auto c = reliability_mc(1, 0.8, P, dist, kN, n, 1234, 4);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.value, c.value);
  EXPECT_NE(a.value, reliability_mc(1, 0.8, P, dist, kN, n, 1235, 1).value);
}

TEST(ReliabilityMc, CoverageAcrossSeeds) {
  const auto dist = ChannelDistribution::rayleigh(kMean);
  const Vec P = (Vec(2) << 0.9, 0.5).finished();
  const double exact = reliability_rayleigh_closed(0, 1.5, P, kMean, kN);
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto est = reliability_mc(0, 1.5, P, dist, kN, 20000, seed);
    if (std::abs(est.value - exact) <= 4 * est.std_error) ++inside;
  }
  EXPECT_GE(inside, 99);
}

TEST(ReliabilityClosed, KnownValues) {
  EXPECT_NEAR(reliability_rayleigh_closed(0, 1.0, Vec::Ones(1), Mat::Ones(1, 1), Vec::Ones(1)),
              std::exp(-1.0), 1e-15);
  // one equal-strength interferer, negligible noise: P(W0 > W1) = 1/2
  const Mat eq = Mat::Ones(2, 2);
  const Vec tinyN = Vec::Constant(2, 1e-12);
  EXPECT_NEAR(reliability_rayleigh_closed(0, 1.0, Vec::Ones(2), eq, tinyN), 0.5, 1e-10);
  const auto est =
      reliability_mc(0, 1.0, Vec::Ones(2), ChannelDistribution::rayleigh(eq), tinyN, 200000, 8);
  EXPECT_NEAR(est.value, 0.5, 4 * est.std_error);
  EXPECT_NEAR(reliability_rayleigh_closed(0, 1e-12, Vec::Ones(2), kMean, kN), 1.0, 1e-10);
  EXPECT_EQ(reliability_rayleigh_closed(0, 0.0, Vec::Ones(2), kMean, kN), 1.0);
}

TEST(ReliabilityClosed, RejectsNonRayleighRow) {
  ChannelDistribution d = ChannelDistribution::rayleigh(kMean);
  d.entries[0][1] = Nakagami{2.0, 0.3};
  EXPECT_THROW(reliability_rayleigh_closed(0, 1.0, Vec::Ones(2), d, kN), Error);
  EXPECT_NO_THROW(reliability_rayleigh_closed(1, 1.0, Vec::Ones(2), d, kN));
}

TEST(ReliabilityClosed, Monotonicity) {
  const Vec P = (Vec(2) << 0.6, 0.6).finished();
  double prev = 1.0;
  for (double S = 0.05; S < 20; S *= 1.5) {
    const double v = reliability_rayleigh_closed(0, S, P, kMean, kN);
    EXPECT_LT(v, prev);
    prev = v;
  }
  double below = 0;
  for (double p0 = 0.01; p0 <= 1; p0 *= 1.7) {
    const double v = reliability_rayleigh_closed(0, 1.0, (Vec(2) << p0, 0.6).finished(), kMean, kN);
    EXPECT_GT(v, below);
    below = v;
  }
  double above = 1.0;
  for (double p1 = 0.01; p1 <= 1; p1 *= 1.7) {
    const double v = reliability_rayleigh_closed(0, 1.0, (Vec(2) << 0.6, p1).finished(), kMean, kN);
    EXPECT_LT(v, above);
    above = v;
  }
}

TEST(ReliabilityClosed, LogConcaveInLogVariables) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4, 2);
  auto lnphi = [](const Vec& x) {
    const Vec P = x.tail(2).array().exp();
    return std::log(reliability_rayleigh_closed(0, std::exp(x(0)), P, kMean, kN));
  };
  for (int k = 0; k < 2000; ++k) {
    Vec a(3), b(3);
    for (int d = 0; d < 3; ++d) {
      a(d) = u(rng);
      b(d) = u(rng);
    }
    EXPECT_GE(lnphi(0.5 * (a + b)), 0.5 * (lnphi(a) + lnphi(b)) - 1e-9 * (1 + std::abs(lnphi(a))));
  }
}

TEST(ReliabilityClosed, LogFormMatchesAndDifferentiates) {
  const RayleighLogReliability f(1, kMean, kN);
  const Vec x = (Vec(3) << 0.2, -0.5, 0.1).finished();
  const Vec P = x.tail(2).array().exp();
  EXPECT_NEAR(-f.neg_log(x, nullptr, nullptr),
              std::log(reliability_rayleigh_closed(1, std::exp(x(0)), P, kMean, kN)), 1e-12);
  Vec g;
  Mat H;
  f.neg_log(x, &g, &H);
  const Vec gfd = oracle::fd_gradient([&](const Vec& y) { return f.neg_log(y, nullptr, nullptr); }, x);
  EXPECT_LT((g - gfd).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().minCoeff(), -1e-12);
}

TEST(Probe, ShippedFamiliesPass) {
  for (const Marginal m : {Marginal{Rayleigh{1.0}}, Marginal{Nakagami{0.5, 2.0}}, Marginal{Nakagami{3.0, 1.0}},
                           Marginal{LogNormal{-1.0, 0.7}}}) {
    ChannelDistribution d;
    d.entries = {{m, m}, {m, m}};
    const auto pr = log_concavity_probe(d, 1, 3000, 21);
    EXPECT_TRUE(pr.pass) << pr.worst_violation;
    EXPECT_GE(pr.tested, 2700);
  }
}

TEST(Probe, DeterministicForSeed) {
  ChannelDistribution d;
  d.entries = {{Nakagami{2.0, 1.0}}};
  const auto a = log_concavity_probe(d, 0, 500, 9);
  const auto b = log_concavity_probe(d, 0, 500, 9);
  EXPECT_EQ(a.worst_violation, b.worst_violation);
  EXPECT_EQ(a.tested + a.skipped, 500);
}

TEST(Outage, Validation) {
  EXPECT_THROW(validate(OutageSpec{Vec::Constant(2, 0.1)}, 3), Error);
  EXPECT_THROW(validate(OutageSpec{Vec::Constant(1, 1.0)}, 1), Error);
  EXPECT_THROW(validate(OutageSpec{Vec::Constant(1, -0.1)}, 1), Error);
  try {
    validate(OutageSpec{(Vec(2) << 0.1, 0.0).finished()}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible);
    EXPECT_EQ(e.field(), "q[1]");
  }
}

TEST(RobustSolve, SingleUserClosedForm) {
  const RobustProblem prob{Vec::Ones(1), Vec::Ones(1), Vec::Constant(1, 10.0), std::nullopt};
  const auto sol = solve_robust(prob, ChannelDistribution::rayleigh(Mat::Ones(1, 1)),
                                OutageSpec{Vec::Constant(1, 0.1)}, CostSpec::max());
  EXPECT_LT(oracle::rel(sol.solution.S(0), oracle::kRobustS), 1e-6);
  EXPECT_LT(oracle::rel(sol.solution.T(0), oracle::kRobustT), 1e-6);
  EXPECT_LT(oracle::rel(sol.solution.P(0), 1.0), 1e-6);
  ASSERT_EQ(sol.audit.size(), 1u);
  EXPECT_TRUE(sol.audit[0].satisfied);
  EXPECT_EQ(sol.audit[0].method, "closed_form");
  EXPECT_TRUE(sol.hypothesis_verified);
}

TEST(RobustSolve, MatchesGridOracle) {
  const auto prob = two_user();
  const OutageSpec out{Vec::Constant(2, 0.1)};
  // grid error is first order at the max-cost kink
  for (const auto& [spec, tol] : {std::pair{CostSpec::max(), 3e-2},
                                  std::pair{CostSpec::weighted_sum(Vec::Constant(2, 0.5)), 1e-6}}) {
    const auto sol = solve_robust(prob, ChannelDistribution::rayleigh(kMean), out, spec);
    const double grid = verify::robust_grid_oracle(prob, kMean, out, spec, 120);
    EXPECT_LE(sol.solution.cost, grid * (1 + 1e-6));
    EXPECT_LT(oracle::rel(sol.solution.cost, grid), tol);
    for (const auto& a : sol.audit) {
      EXPECT_TRUE(a.satisfied);
      EXPECT_GE(a.model_value, a.required - 1e-9);
    }
  }
}

TEST(RobustSolve, ZeroOutageIsInfeasible) {
  try {
    solve_robust(two_user(), ChannelDistribution::rayleigh(kMean), OutageSpec{(Vec(2) << 0.0, 0.1).finished()},
                 CostSpec::max());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible);
  }
}

TEST(RobustSolve, CostFallsAsOutageLoosens) {
  const auto prob = two_user();
  const auto dist = ChannelDistribution::rayleigh(kMean);
  double prev = std::numeric_limits<double>::infinity();
  for (double q : {0.01, 0.1, 0.3, 0.6}) {
    const double c = solve_robust(prob, dist, OutageSpec{Vec::Constant(2, q)}, CostSpec::max()).solution.cost;
    EXPECT_LE(c, prev * (1 + 1e-9));
    prev = c;
  }
  // q -> 1 allows targets above the mean-gain SINR
  const double loose =
      solve_robust(prob, dist, OutageSpec{Vec::Constant(2, 0.95)}, CostSpec::max()).solution.cost;
  const double nominal = solve_perfect_csi({kMean, prob.N, prob.Pmax, prob.L, std::nullopt}, CostSpec::max()).cost;
  EXPECT_LT(loose, nominal);
}

TEST(RobustSolve, NakagamiOneMatchesRayleigh) {
  const RobustProblem prob{Vec::Ones(1), Vec::Ones(1), Vec::Constant(1, 10.0), std::nullopt};
  ChannelDistribution d;
  d.entries = {{Nakagami{1.0, 1.0}}};
  const auto sol = solve_robust(prob, d, OutageSpec{Vec::Constant(1, 0.1)}, CostSpec::max());
  EXPECT_LT(oracle::rel(sol.solution.S(0), oracle::kRobustS), 0.03);
  ASSERT_EQ(sol.audit.size(), 1u);
  EXPECT_EQ(sol.audit[0].method, "saa");
  EXPECT_GE(sol.audit[0].exact_saa, 0.9);
  EXPECT_TRUE(sol.audit[0].satisfied);
  EXPECT_LE(sol.final_tau, 0.05);
}

TEST(RobustSolve, MixedFamiliesPassAudit) {
  ChannelDistribution d;
  d.entries = {{LogNormal{0.0, 0.5}, Rayleigh{0.2}}, {Nakagami{2.0, 0.15}, Nakagami{2.0, 1.0}}};
  RobustOptions ro;
  ro.samples = 20000;
  const auto sol = solve_robust(two_user(), d, OutageSpec{Vec::Constant(2, 0.1)}, CostSpec::max(), ro);
  ASSERT_EQ(sol.audit.size(), 2u);
  for (const auto& a : sol.audit) {
    EXPECT_TRUE(a.satisfied) << a.user;
    EXPECT_GE(a.exact_saa, a.required);
    EXPECT_NEAR(a.monte_carlo.value, a.exact_saa, 5 * std::max(a.monte_carlo.std_error, 1e-3));
  }
  EXPECT_TRUE(sol.hypothesis_verified);
  EXPECT_TRUE((sol.solution.P.array() <= 1.0 + 1e-12).all());
}

TEST(RobustSolve, DeterministicForSeed) {
  ChannelDistribution d;
  d.entries = {{Nakagami{2.0, 1.0}, Rayleigh{0.3}}, {Rayleigh{0.2}, LogNormal{0.0, 0.4}}};
  RobustOptions ro;
  ro.samples = 5000;
  ro.audit_samples = 10000;
  const OutageSpec out{Vec::Constant(2, 0.2)};
  const auto a = solve_robust(two_user(), d, out, CostSpec::max(), ro);
  const auto b = solve_robust(two_user(), d, out, CostSpec::max(), ro);
  EXPECT_EQ(a.solution.P, b.solution.P);
  EXPECT_EQ(a.solution.cost, b.solution.cost);
}
