#pragma once

// Oracle and property suites behind `ctpc verify` and the acceptance binary.
// Each check is self-contained, seeded, and reports one pass/fail line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ctpc/costs.hpp"
#include "ctpc/fading.hpp"
#include "ctpc/model.hpp"
#include "ctpc/region.hpp"
#include "ctpc/robust.hpp"
#include "ctpc/solver.hpp"
#include "ctpc/transform.hpp"

namespace ctpc::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct Check {
  std::string name;
  std::function<CheckResult()> run;
};

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

template <class F>
double central_difference(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

/// Root of a monotone f on [lo, hi] (f(lo) and f(hi) of opposite sign).
template <class F>
double bisect(F&& f, double lo, double hi, int iterations = 200) {
  const bool rising = f(hi) > f(lo);
  for (int k = 0; k < iterations && hi - lo > 0; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ((f(mid) > 0) == rising ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Single-user Rayleigh robust optimum: exp(-S N / (G Pmax)) = 1 - q.
inline double robust_single_user_target(double G, double N, double Pmax, double q) {
  return bisect([&](double S) { return std::exp(-S * N / (G * Pmax)) - (1 - q); }, 0.0,
                100.0 * G * Pmax / N);
}

/// Largest S with closed-form Phi_i(S, P) >= 1 - q_i (Phi decreasing in S).
inline double rayleigh_max_target(int i, const Vec& P, const Mat& meanG, const Vec& N, double q) {
  if (P(i) <= 0) return 0;
  double hi = 1.0;
  while (reliability_rayleigh_closed(i, hi, P, meanG, N) > 1 - q && hi < 1e12) hi *= 2;
  return bisect([&](double S) { return reliability_rayleigh_closed(i, S, P, meanG, N) - (1 - q); },
                0.0, hi);
}

/// Grid brute force for the two-user robust Rayleigh program: powers on a
/// log grid, SINR targets at reliability equality.
inline double robust_grid_oracle(const RobustProblem& prob, const Mat& meanG, const OutageSpec& out,
                                 const CostSpec& spec, int grid, double decades = 3.0) {
  require(prob.M() == 2, ErrorCode::invalid_argument, "grid oracle is two-user only", "M");
  double best = std::numeric_limits<double>::infinity();
  Vec P(2);
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b) {
      P(0) = prob.Pmax(0) * std::pow(10.0, -decades * a / (grid - 1));
      P(1) = prob.Pmax(1) * std::pow(10.0, -decades * b / (grid - 1));
      Vec T(2);
      for (int i = 0; i < 2; ++i) {
        const double S = rayleigh_max_target(i, P, meanG, prob.N, out.q(i));
        T(i) = S > 0 ? prob.L(i) / std::log2(1 + S) : kInfiniteTime;
      }
      if (prob.Tmax && (T(0) > (*prob.Tmax)(0) || T(1) > (*prob.Tmax)(1))) continue;
      best = std::min(best, eval_cost(spec, T));
    }
  return best;
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

inline NetworkInstance random_instance(std::mt19937_64& rng, int M) {
  std::uniform_real_distribution<double> direct(0.5, 1.5), cross(0.05, 1.0), noise(0.5, 1.5),
      pmax(0.5, 2.0), len(5.0, 20.0);
  NetworkInstance inst;
  inst.G.resize(M, M);
  inst.N.resize(M);
  inst.Pmax.resize(M);
  inst.L.resize(M);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) inst.G(i, j) = i == j ? direct(rng) : cross(rng);
    inst.N(i) = noise(rng);
    inst.Pmax(i) = pmax(rng);
    inst.L(i) = len(rng);
  }
  return inst;
}

inline Vec random_weights(std::mt19937_64& rng, int M) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vec w(M);
  for (int i = 0; i < M; ++i) w(i) = u(rng);
  return w / w.sum();
}

inline NetworkInstance sample_instance() {
  NetworkInstance inst;
  inst.G = (Mat(2, 2) << 0.42, 0.89, 0.63, 0.15).finished();
  inst.N = Vec::Constant(2, db_to_linear(0.0));
  inst.Pmax = Vec::Constant(2, db_to_linear(0.0));
  inst.L = Vec::Constant(2, 10.0);
  inst.Tmax = 100.0 * inst.L;
  return inst;
}

inline double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------------------
// Acceptance criteria
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

template <class F>
CheckResult timed(const std::string& name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = name;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

inline CheckResult figure_reproduction() {
  return detail::timed("figure reproduction", [](CheckResult& r) {
    const auto t0 = std::chrono::steady_clock::now();
    const RegionTrace trace = trace_completion_region(sample_instance(), 65);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto tr = convexity_audit(completion_points(trace), BoundaryKind::completion_time);
    const auto rr = convexity_audit(rate_points(trace), BoundaryKind::rate);
    r.pass = secs < 60 && trace.solved().size() == 65 && tr.convex && tr.worst_violation <= 1e-7 &&
             !rr.convex && rr.witness.size() == 3;
    r.detail = "sweep " + detail::fmt(secs) + " s, T-trace violation " + detail::fmt(tr.worst_violation) +
               ", R-trace witness excess " + detail::fmt(rr.worst_violation);
  });
}

inline CheckResult oracle_equivalence() {
  return detail::timed("oracle equivalence", [](CheckResult& r) {
    std::mt19937_64 rng(2024);
    double worst_gap = 0, worst_time = 0;
    int count = 0;
    for (int M : {2, 3}) {
      const int n = M == 2 ? 20 : 5;
      for (int k = 0; k < n; ++k) {
        const NetworkInstance inst = random_instance(rng, M);
        const CostSpec spec = CostSpec::weighted_sum(random_weights(rng, M));
        const auto t0 = std::chrono::steady_clock::now();
        const Solution s = solve_perfect_csi(inst, spec);
        worst_time = std::max(worst_time,
                              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        const Solution o = brute_force_oracle(inst, spec, 200);
        worst_gap = std::max(worst_gap, relative_gap(s.cost, o.cost));
        ++count;
      }
    }
    r.pass = worst_gap <= 1e-3 && worst_time < 1.0;
    r.detail = std::to_string(count) + " instances, worst gap " + detail::fmt(worst_gap) +
               ", slowest solve " + detail::fmt(worst_time) + " s";
  });
}

inline CheckResult derivative_correctness() {
  return detail::timed("derivative correctness", [](CheckResult& r) {
    double worst1 = 0, worst2 = 0, min_closed = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 40; ++k) {
      const double x = -10.0 + 0.5 * k;
      const CtBound h = ct_bound(x);
      const double h_step = 1e-4 * std::max(1.0, std::abs(x));
      const double fd1 = central_difference([](double y) { return ct_bound(y).value; }, x, h_step);
      const double fd2 = central_difference([](double y) { return ct_bound(y).d1; }, x, h_step);
      worst1 = std::max(worst1, relative_gap(h.d1, fd1));
      worst2 = std::max(worst2, relative_gap(h.d2, fd2));
      min_closed = std::min(min_closed, ct_bound_second_derivative_closed_form(x));
    }
    r.pass = worst1 <= 1e-6 && worst2 <= 1e-6 && min_closed > 0;
    r.detail = "h' rel err " + detail::fmt(worst1) + ", h'' rel err " + detail::fmt(worst2) +
               ", min displayed h'' " + detail::fmt(min_closed);
  });
}

inline CheckResult rayleigh_reliability() {
  return detail::timed("rayleigh reliability", [](CheckResult& r) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> mean_d(0.5, 2.0), mean_x(0.05, 0.5), pw(0.2, 2.0),
        noise(0.1, 1.0);
    double worst_z = 0;
    for (int c = 0; c < 20; ++c) {
      const int M = 1 + c % 3;
      Mat G(M, M);
      Vec P(M), N(M);
      for (int i = 0; i < M; ++i) {
        for (int j = 0; j < M; ++j) G(i, j) = i == j ? mean_d(rng) : mean_x(rng);
        P(i) = pw(rng);
        N(i) = noise(rng);
      }
      const int i = c % M;
      // target around the median reliability so the comparison is informative
      const double S = 0.5 * G(i, i) * P(i) / (N(i) + (M > 1 ? G.row(i).sum() - G(i, i) : 0.0));
      const double closed = reliability_rayleigh_closed(i, S, P, G, N);
      const auto mc = reliability_mc(i, S, P, ChannelDistribution::rayleigh(G), N, 1000000,
                                     1000 + static_cast<std::uint64_t>(c));
      worst_z = std::max(worst_z, std::abs(closed - mc.value) / mc.std_error);
    }
    r.pass = worst_z <= 3.0;
    r.detail = "20 configurations, worst |closed - MC| = " + detail::fmt(worst_z) + " SE";
  });
}

inline CheckResult hypothesis_probes() {
  return detail::timed("log-concavity probes", [](CheckResult& r) {
    const std::vector<std::pair<std::string, Marginal>> cases = {
        {"rayleigh", Rayleigh{1.0}},       {"nakagami m=0.5", Nakagami{0.5, 1.0}},
        {"nakagami m=1", Nakagami{1.0, 1.0}}, {"nakagami m=4", Nakagami{4.0, 1.0}},
        {"lognormal s=0.5", LogNormal{0.0, 0.5}}, {"lognormal s=1", LogNormal{0.0, 1.0}}};
    r.pass = true;
    double worst = 0;
    for (const auto& [name, m] : cases) {
      ChannelDistribution d;
      d.entries = {{m, m}, {m, m}};
      const auto pr = log_concavity_probe(d, 0, 10000, 5);
      worst = std::max(worst, pr.worst_violation);
      if (!pr.pass || pr.tested < 9000) {
        r.pass = false;
        r.detail += name + " failed; ";
      }
    }
    r.detail += "6 families x 1e4 midpoints, worst violation " + detail::fmt(worst);
  });
}

inline CheckResult robust_single_user() {
  return detail::timed("robust single-user", [](CheckResult& r) {
    const RobustProblem prob{Vec::Ones(1), Vec::Ones(1), Vec::Constant(1, 10.0), std::nullopt};
    const auto sol = solve_robust(prob, ChannelDistribution::rayleigh(Mat::Ones(1, 1)),
                                  OutageSpec{Vec::Constant(1, 0.1)}, CostSpec::max());
    const double S_ref = robust_single_user_target(1, 1, 1, 0.1);
    const double T_ref = 10.0 / std::log2(1 + S_ref);
    const double eS = relative_gap(sol.solution.S(0), S_ref);
    const double eT = relative_gap(sol.solution.T(0), T_ref);
    r.pass = eS <= 1e-6 && eT <= 1e-6;
    r.detail = "S* rel err " + detail::fmt(eS) + ", T* rel err " + detail::fmt(eT) + " (T* = " +
               std::to_string(sol.solution.T(0)) + ")";
  });
}

inline FadingStates random_fading(std::mt19937_64& rng, int M, int S) {
  const NetworkInstance base = random_instance(rng, M);
  std::uniform_real_distribution<double> scale(0.3, 3.0), p(0.2, 0.8);
  FadingStates fs;
  fs.N = base.N;
  fs.Pmax = base.Pmax;
  fs.L = base.L;
  for (int s = 0; s < S; ++s) {
    Mat G = random_instance(rng, M).G;
    G.diagonal() *= scale(rng);
    fs.states.push_back(G);
  }
  fs.probs.resize(S);
  if (S == 2) {
    fs.probs(0) = p(rng);
    fs.probs(1) = 1 - fs.probs(0);
  } else {
    for (int s = 0; s < S; ++s) fs.probs(s) = p(rng);
    fs.probs /= fs.probs.sum();
  }
  return fs;
}

inline CheckResult fading_decomposition() {
  return detail::timed("fading decomposition", [](CheckResult& r) {
    std::mt19937_64 rng(31);
    double worst = 0;
    bool ordered = true;
    for (int k = 0; k < 10; ++k) {
      const FadingStates fs = random_fading(rng, 2, 2);
      const CostSpec spec = k % 2 ? CostSpec::max() : CostSpec::weighted_sum(random_weights(rng, 2));
      const auto joint = solve_adaptive(fs, spec, FadingObjective::expected_cost, PowerMode::short_term,
                                        Strategy::joint);
      double separate = 0;
      for (int s = 0; s < fs.S(); ++s) separate += fs.probs(s) * solve_perfect_csi(fs.instance(s), spec).cost;
      worst = std::max(worst, relative_gap(joint.objective, separate));
      const auto avg = solve_adaptive(fs, spec, FadingObjective::expected_cost, PowerMode::average,
                                      Strategy::joint);
      ordered = ordered && avg.objective <= joint.objective * (1 + 1e-9);
    }
    r.pass = worst <= 1e-6 && ordered;
    r.detail = "10 instances, worst joint/per-state gap " + detail::fmt(worst) +
               (ordered ? ", average <= short-term everywhere" : ", ordering violated");
  });
}

inline CheckResult relaxation_monotonicity() {
  return detail::timed("relaxation monotonicity", [](CheckResult& r) {
    std::mt19937_64 rng(99);
    bool pmax_ok = true;
    for (int k = 0; k < 10; ++k) {
      NetworkInstance inst = random_instance(rng, 2 + k % 2);
      const CostSpec spec = k % 3 == 0 ? CostSpec::max()
                            : k % 3 == 1 ? CostSpec::p_norm(2)
                                         : CostSpec::weighted_sum(random_weights(rng, inst.M()));
      const Vec base = inst.Pmax;
      double prev = std::numeric_limits<double>::infinity();
      for (double c : {1.0, 2.0, 4.0}) {
        inst.Pmax = c * base;
        const double cost = solve_perfect_csi(inst, spec).cost;
        pmax_ok = pmax_ok && cost <= prev * (1 + 1e-9);
        prev = cost;
      }
    }
    const RobustProblem prob{Vec::Constant(2, 0.1), Vec::Ones(2), Vec::Constant(2, 10.0), std::nullopt};
    const auto dist = ChannelDistribution::rayleigh((Mat(2, 2) << 1.0, 0.1, 0.2, 1.0).finished());
    bool q_ok = true;
    double prev = std::numeric_limits<double>::infinity();
    std::string costs;
    for (double q : {0.02, 0.05, 0.1, 0.2, 0.4}) {
      const double cost =
          solve_robust(prob, dist, OutageSpec{Vec::Constant(2, q)}, CostSpec::max()).solution.cost;
      q_ok = q_ok && cost <= prev * (1 + 1e-9);
      prev = cost;
      costs += detail::fmt(cost) + " ";
    }
    r.pass = pmax_ok && q_ok;
    r.detail = std::string("Pmax scaling ") + (pmax_ok ? "monotone" : "NOT monotone") +
               "; robust cost over q: " + costs;
  });
}

/// Boundary points with duplicates merged (many weights map onto the same corner).
inline std::vector<std::pair<Vec, Vec>> distinct_boundary(const RegionTrace& trace, double tol) {
  std::vector<std::pair<Vec, Vec>> out;
  for (const auto* e : trace.solved()) {
    bool dup = false;
    for (const auto& [T, R] : out) dup = dup || (T - e->T).cwiseAbs().maxCoeff() <= tol * T.cwiseAbs().maxCoeff();
    if (!dup) out.emplace_back(e->T, e->R);
  }
  return out;
}

inline CheckResult utility_correspondence() {
  return detail::timed("utility correspondences", [](CheckResult& r) {
    const NetworkInstance inst = sample_instance();
    const RegionTrace trace = trace_completion_region(inst, 65);
    const auto pts = distinct_boundary(trace, 1e-7);
    int mismatches = 0;
    for (const auto* e : trace.solved()) {
      const Vec wprime = e->w.cwiseProduct(inst.L);
      std::size_t jmin = 0, jmax = 0;
      double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const double J = e->w.dot(pts[j].first);
        const double U = potential_delay_utility(wprime, pts[j].second);
        if (J < vmin) vmin = J, jmin = j;
        if (U > vmax) vmax = U, jmax = j;
      }
      mismatches += jmin != jmax;
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    bool jensen = true;
    double worst_eq = 0;
    for (int k = 0; k < 100; ++k) {
      const int M = 2 + k % 4;
      Vec w(M), R(M);
      for (int i = 0; i < M; ++i) w(i) = u(rng), R(i) = u(rng);
      w /= w.sum();
      jensen = jensen && w.dot(R) >= harmonic_mean_utility(w, R) * (1 - 1e-12);
      const Vec Req = Vec::Constant(M, R(0));
      worst_eq = std::max(worst_eq, relative_gap(w.dot(Req), harmonic_mean_utility(w, Req)));
    }
    r.pass = mismatches == 0 && jensen && worst_eq <= 1e-9;
    r.detail = std::to_string(trace.solved().size()) + " weights over " + std::to_string(pts.size()) +
               " distinct boundary points, " + std::to_string(mismatches) + " argmin/argmax mismatches; Jensen " +
               (jensen ? "holds" : "FAILS") + ", equal-rate gap " + detail::fmt(worst_eq);
  });
}

inline std::vector<Check> acceptance_suite() {
  return {{"1 figure reproduction", figure_reproduction},
          {"2 oracle equivalence", oracle_equivalence},
          {"3 derivative correctness", derivative_correctness},
          {"4 rayleigh reliability", rayleigh_reliability},
          {"5 log-concavity probes", hypothesis_probes},
          {"6 robust single-user", robust_single_user},
          {"7 fading decomposition", fading_decomposition},
          {"8 relaxation monotonicity", relaxation_monotonicity},
          {"9 utility correspondences", utility_correspondence}};
}

/// Runs the checks, printing one line per check; returns the number of failures.
inline int run_report(const std::vector<Check>& checks, std::ostream& os) {
  int failures = 0;
  for (const auto& c : checks) {
    CheckResult r = c.run();
    r.name = c.name;
    failures += !r.pass;
    os << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << detail::fmt(r.seconds) << " s): " << r.detail
       << '\n'
       << std::flush;
  }
  return failures;
}

}  // namespace ctpc::verify
