#pragma once

// Power adaptation over a finite set of fading states. Each state s has its own
// gains G^(s) and occurs with probability p_s; users pick per-state powers
// P^(s) under either an average constraint sum_s p_s P_i^(s) <= Pmax_i or a
// per-state (short-term) constraint P_i^(s) <= Pmax_i.
//
// Two objectives are supported: the cost of the expected completion times
// J(E[T]) and the expected cost E[J(T)] = sum_s p_s J(T^(s)).

#include <cmath>
#include <string>
#include <vector>

#include "ctpc/barrier.hpp"
#include "ctpc/costs.hpp"
#include "ctpc/model.hpp"
#include "ctpc/parallel.hpp"
#include "ctpc/solver.hpp"
#include "ctpc/transform.hpp"

namespace ctpc {

inline constexpr int kDefaultMaxStates = 64;

struct FadingStates {
  std::vector<Mat> states;
  Vec probs;
  Vec N;
  Vec Pmax;
  Vec L;

  int S() const { return static_cast<int>(states.size()); }
  int M() const { return static_cast<int>(N.size()); }

  NetworkInstance instance(int s) const {
    return NetworkInstance{states[static_cast<std::size_t>(s)], N, Pmax, L, std::nullopt};
  }

  friend bool operator==(const FadingStates& a, const FadingStates& b) {
    if (a.states.size() != b.states.size()) return false;
    for (std::size_t s = 0; s < a.states.size(); ++s)
      if (!(a.instance(static_cast<int>(s)) == b.instance(static_cast<int>(s)))) return false;
    return a.probs.size() == b.probs.size() && a.probs == b.probs;
  }
};

enum class PowerMode { average, short_term };
enum class FadingObjective { cost_of_expectation, expected_cost };
enum class Strategy { joint, decomposed };

inline const char* to_string(PowerMode m) { return m == PowerMode::average ? "average" : "short_term"; }
inline const char* to_string(FadingObjective o) {
  return o == FadingObjective::cost_of_expectation ? "cost_of_expectation" : "expected_cost";
}

struct AdaptiveSolution {
  std::vector<Vec> P;  // per state
  std::vector<Vec> T;  // per state, from the physics chain
  Vec expected_T;
  double objective = 0;
  PowerMode mode = PowerMode::average;
  FadingObjective objective_kind = FadingObjective::cost_of_expectation;
  Certificate certificate;

  friend bool operator==(const AdaptiveSolution& a, const AdaptiveSolution& b) {
    auto same = [](const std::vector<Vec>& x, const std::vector<Vec>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k].size() != y[k].size() || x[k] != y[k]) return false;
      return true;
    };
    return same(a.P, b.P) && same(a.T, b.T) && a.expected_T.size() == b.expected_T.size() &&
           a.expected_T == b.expected_T && a.objective == b.objective && a.mode == b.mode &&
           a.objective_kind == b.objective_kind && a.certificate == b.certificate;
  }
};

inline void validate(const FadingStates& fs, int max_states = kDefaultMaxStates) {
  require(fs.S() >= 1, ErrorCode::invalid_argument, "need at least one fading state", "states");
  require(fs.S() <= max_states, ErrorCode::invalid_argument,
          "state count " + std::to_string(fs.S()) + " exceeds the cap of " +
              std::to_string(max_states),
          "states");
  require(fs.probs.size() == fs.S(), ErrorCode::dimension_mismatch,
          "one probability per state is required", "probs");
  for (int s = 0; s < fs.S(); ++s)
    require(fs.probs(s) > 0, ErrorCode::invalid_argument, "state probabilities must be positive",
            "probs[" + std::to_string(s) + "]");
  require(std::abs(fs.probs.sum() - 1.0) <= 1e-12, ErrorCode::invalid_argument,
          "state probabilities must sum to one", "probs");
  for (int s = 0; s < fs.S(); ++s) {
    try {
      validate(fs.instance(s));
    } catch (const Error& e) {
      fail(e.code(), e.what(), "states[" + std::to_string(s) + "]." + e.field());
    }
  }
}

namespace detail {

inline AdaptiveSolution solve_adaptive_joint(const FadingStates& fs, const CostSpec& spec,
                                             FadingObjective objective, PowerMode mode,
                                             const SolveOptions& opts) {
  const int M = fs.M();
  const int S = fs.S();
  const int block = 3 * M;
  auto t_var = [&](int s, int i) { return s * block + i; };
  auto s_var = [&](int s, int i) { return s * block + M + i; };
  auto p_var = [&](int s, int i) { return s * block + 2 * M + i; };

  barrier::Program prog(S * block);
  const auto* ws = std::get_if<WeightedSum>(&spec.kind);
  for (int s = 0; s < S; ++s) {
    const NetworkInstance inst = fs.instance(s);
    std::vector<int> pv;
    for (int i = 0; i < M; ++i) pv.push_back(p_var(s, i));
    const auto tag = "state " + std::to_string(s) + " ";
    for (int i = 0; i < M; ++i) {
      const auto u = std::to_string(i);
      prog.constraints.push_back(
          ct_bound_row(t_var(s, i), s_var(s, i), fs.L(i), tag + "completion time " + u));
      prog.constraints.push_back(
          sinr_row(i, inst.G, inst.N(i), s_var(s, i), pv, tag + "sinr " + u));
      if (ws && ws->w(i) == 0)
        prog.constraints.push_back(barrier::linear_row(
            {{t_var(s, i), 1.0}}, time_horizon(inst, i, opts.power_floor), tag + "horizon " + u));
    }
    append_power_rows(prog.constraints, inst, opts.power_floor,
                      [&](int i) { return p_var(s, i); }, tag, mode == PowerMode::short_term);
  }
  if (mode == PowerMode::average) {
    // ln sum_s exp(ln p_s + P~_i^(s) - ln Pmax_i) <= 0
    for (int i = 0; i < M; ++i) {
      std::vector<int> vars;
      for (int s = 0; s < S; ++s) vars.push_back(p_var(s, i));
      Vec b(S);
      for (int s = 0; s < S; ++s) b(s) = std::log(fs.probs(s)) - std::log(fs.Pmax(i));
      prog.constraints.push_back(
          barrier::lse_row(vars, Mat::Identity(S, S), b, "average power " + std::to_string(i)));
    }
  }

  std::vector<AttachedCost> costs;
  if (objective == FadingObjective::cost_of_expectation) {
    LinearMap map(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i)
      for (int s = 0; s < S; ++s) map[static_cast<std::size_t>(i)].emplace_back(t_var(s, i), fs.probs(s));
    costs.push_back(attach_cost(prog, spec, std::move(map), 1.0, "expected-time cost"));
  } else {
    for (int s = 0; s < S; ++s) {
      LinearMap map(static_cast<std::size_t>(M));
      for (int i = 0; i < M; ++i) map[static_cast<std::size_t>(i)] = {{t_var(s, i), 1.0}};
      costs.push_back(attach_cost(prog, spec, std::move(map), fs.probs(s),
                                  "state " + std::to_string(s) + " cost"));
    }
  }

  // strictly feasible start: half power in every state
  Vec x(prog.dim);
  const double delta = opts.init_margin;
  for (int s = 0; s < S; ++s) {
    const NetworkInstance inst = fs.instance(s);
    const Vec Sinr = sinr(inst, PowerAllocation{fs.Pmax / 2});
    for (int i = 0; i < M; ++i) {
      x(p_var(s, i)) = std::log(fs.Pmax(i) / 2);
      x(s_var(s, i)) = std::log(Sinr(i)) - delta;
      x(t_var(s, i)) = fs.L(i) * ct_bound(x(s_var(s, i))).value * (1 + delta);
    }
  }
  for (const auto& c : costs) c.initialize_aux(x, delta);

  const barrier::Result res = barrier::minimize(prog, x, opts.barrier);

  AdaptiveSolution sol;
  sol.mode = mode;
  sol.objective_kind = objective;
  sol.expected_T = Vec::Zero(M);
  double expected_cost = 0;
  Vec avg_power = Vec::Zero(M);
  double violation = 0;
  for (int s = 0; s < S; ++s) {
    Vec P(M);
    for (int i = 0; i < M; ++i) P(i) = std::exp(res.x(p_var(s, i)));
    if (mode == PowerMode::short_term) P = P.cwiseMin(fs.Pmax);
    const LinkState st = link_state(fs.instance(s), PowerAllocation{P});
    sol.expected_T += fs.probs(s) * st.T;
    expected_cost += fs.probs(s) * eval_cost(spec, st.T);
    avg_power += fs.probs(s) * P;
    if (mode == PowerMode::short_term)
      for (int i = 0; i < M; ++i) violation = std::max(violation, relative_excess(P(i), fs.Pmax(i)));
    sol.P.push_back(P);
    sol.T.push_back(st.T);
  }
  if (mode == PowerMode::average)
    for (int i = 0; i < M; ++i) violation = std::max(violation, relative_excess(avg_power(i), fs.Pmax(i)));
  sol.objective = objective == FadingObjective::cost_of_expectation ? eval_cost(spec, sol.expected_T)
                                                                     : expected_cost;
  Certificate& cert = sol.certificate;
  cert.gap = res.gap;
  cert.barrier_objective = res.objective;
  cert.outer_iterations = res.outer_iterations;
  cert.newton_iterations = res.newton_iterations;
  cert.max_violation = violation;
  cert.clamp_active.assign(static_cast<std::size_t>(M), false);
  for (int s = 0; s < S; ++s)
    for (int i = 0; i < M; ++i)
      if (sol.P[static_cast<std::size_t>(s)](i) <= detail::kClampBand * opts.power_floor * fs.Pmax(i))
        cert.clamp_active[static_cast<std::size_t>(i)] = true;
  if (!res.converged) {
    cert.status = "not_converged";
    throw SolveFailure(ErrorCode::not_converged, "joint fading solve did not converge", cert);
  }
  cert.status = "optimal";
  return sol;
}

/// Short-term expected cost separates into one deterministic solve per state.
inline AdaptiveSolution solve_adaptive_decomposed(const FadingStates& fs, const CostSpec& spec,
                                                  const SolveOptions& opts, unsigned threads) {
  const int S = fs.S();
  std::vector<Solution> parts(static_cast<std::size_t>(S));
  parallel_for(
      static_cast<std::size_t>(S),
      [&](std::size_t s) { parts[s] = solve_perfect_csi(fs.instance(static_cast<int>(s)), spec, opts); },
      threads);
  AdaptiveSolution sol;
  sol.mode = PowerMode::short_term;
  sol.objective_kind = FadingObjective::expected_cost;
  sol.expected_T = Vec::Zero(fs.M());
  Certificate& cert = sol.certificate;
  cert.status = "optimal";
  cert.clamp_active.assign(static_cast<std::size_t>(fs.M()), false);
  for (int s = 0; s < S; ++s) {
    const Solution& part = parts[static_cast<std::size_t>(s)];
    sol.P.push_back(part.P);
    sol.T.push_back(part.T);
    sol.expected_T += fs.probs(s) * part.T;
    sol.objective += fs.probs(s) * part.cost;
    cert.gap = std::max(cert.gap, part.certificate.gap);
    cert.barrier_objective += fs.probs(s) * part.certificate.barrier_objective;
    cert.outer_iterations += part.certificate.outer_iterations;
    cert.newton_iterations += part.certificate.newton_iterations;
    cert.max_violation = std::max(cert.max_violation, part.certificate.max_violation);
    for (std::size_t i = 0; i < cert.clamp_active.size(); ++i)
      cert.clamp_active[i] = cert.clamp_active[i] || part.certificate.clamp_active[i];
  }
  return sol;
}

}  // namespace detail

/// General entry point. `Strategy::decomposed` is only valid for the
/// short-term expected-cost combination, where the problem separates by state.
inline AdaptiveSolution solve_adaptive(const FadingStates& fs, const CostSpec& spec,
                                       FadingObjective objective, PowerMode mode,
                                       Strategy strategy = Strategy::joint,
                                       const SolveOptions& opts = {},
                                       int max_states = kDefaultMaxStates, unsigned threads = 0) {
  validate(fs, max_states);
  validate(spec, fs.M());
  opts.validate();
  if (strategy == Strategy::decomposed) {
    require(objective == FadingObjective::expected_cost && mode == PowerMode::short_term,
            ErrorCode::invalid_argument,
            "only the short-term expected-cost problem decomposes by state", "strategy");
    return detail::solve_adaptive_decomposed(fs, spec, opts, threads);
  }
  return detail::solve_adaptive_joint(fs, spec, objective, mode, opts);
}

/// min J(E[T]) under average power constraints.
inline AdaptiveSolution solve_adaptive_avg(const FadingStates& fs, const CostSpec& spec,
                                           const SolveOptions& opts = {}) {
  return solve_adaptive(fs, spec, FadingObjective::cost_of_expectation, PowerMode::average,
                        Strategy::joint, opts);
}

/// min E[J(T)]. The short-term mode runs as independent per-state solves.
inline AdaptiveSolution solve_adaptive_expected_cost(const FadingStates& fs, const CostSpec& spec,
                                                     PowerMode mode, const SolveOptions& opts = {}) {
  return solve_adaptive(fs, spec, FadingObjective::expected_cost, mode,
                        mode == PowerMode::short_term ? Strategy::decomposed : Strategy::joint, opts);
}

}  // namespace ctpc
