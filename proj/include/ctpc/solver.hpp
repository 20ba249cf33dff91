#pragma once

// Completion-time minimization with known gains, solved in log variables
// (S~ = ln S, P~ = ln P) where every constraint is convex:
//
//   minimize   J(T)
//   subject to L_i h(S~_i) <= T_i
//              transformed SINR row_i(S~, P~) <= 0
//              ln(eps Pmax_i) <= P~_i <= ln Pmax_i
//              T_i <= Tmax_i                       (when capped)
//              extra linear rows on T, sum-power rows on user subsets
//
// plus a grid brute-force oracle over the original power variables.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ctpc/barrier.hpp"
#include "ctpc/costs.hpp"
#include "ctpc/model.hpp"
#include "ctpc/transform.hpp"

namespace ctpc {

struct SolveOptions {
  barrier::Options barrier;
  double init_margin = 0.1;   // delta in the strictly feasible start
  double power_floor = 1e-12; // P~_i >= ln(power_floor * Pmax_i)

  void validate() const {
    require(barrier.t0 > 0, ErrorCode::invalid_argument, "t0 must be positive", "t0");
    require(barrier.mu > 1, ErrorCode::invalid_argument, "mu must exceed 1", "mu");
    require(barrier.newton_tol > 0, ErrorCode::invalid_argument, "newton_tol must be positive",
            "newton_tol");
    require(barrier.gap_tol > 0, ErrorCode::invalid_argument, "gap_tol must be positive",
            "gap_tol");
    require(barrier.max_outer >= 1 && barrier.max_newton >= 1, ErrorCode::invalid_argument,
            "iteration caps must be positive", "max_outer");
    require(init_margin > 0, ErrorCode::invalid_argument, "init_margin must be positive",
            "init_margin");
    require(power_floor > 0 && power_floor < 1, ErrorCode::invalid_argument,
            "power_floor must lie in (0, 1)", "power_floor");
  }
};

struct Certificate {
  std::string status;         // "optimal", "grid"
  double max_violation = 0;   // worst relative violation of the original-variable constraints
  double gap = 0;             // m / t at the last barrier stage
  double barrier_objective = 0;
  int outer_iterations = 0;
  int newton_iterations = 0;
  int phase_one_iterations = 0;
  bool phase_one = false;
  std::vector<bool> clamp_active;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct Solution {
  Vec P;
  Vec S;
  Vec R;
  Vec T;
  double cost = 0;
  TransformedPoint transformed;
  Certificate certificate;

  friend bool operator==(const Solution& a, const Solution& b) {
    auto same = [](const Vec& x, const Vec& y) { return x.size() == y.size() && x == y; };
    return same(a.P, b.P) && same(a.S, b.S) && same(a.R, b.R) && same(a.T, b.T) &&
           a.cost == b.cost && a.transformed == b.transformed && a.certificate == b.certificate;
  }
};

/// Solver failure that still carries the diagnostics of the last iterate.
class SolveFailure : public Error {
 public:
  SolveFailure(ErrorCode code, const std::string& message, Certificate cert)
      : Error(code, message), certificate_(std::move(cert)) {}
  const Certificate& certificate() const noexcept { return certificate_; }

 private:
  Certificate certificate_;
};

/// sum_k coef_k T_k <= rhs
struct LinearTimeConstraint {
  Vec coef;
  double rhs = 0;
};

/// sum_{i in users} P_i <= cap
struct SumPowerConstraint {
  std::vector<int> users;
  double cap = 1;
};

struct ExtraConstraints {
  std::vector<LinearTimeConstraint> linear_time;
  std::vector<SumPowerConstraint> sum_power;

  bool empty() const { return linear_time.empty() && sum_power.empty(); }
};

namespace detail {

/// SINR reachable by user i at the power floor while everybody else is at full power.
/// A power within this factor of the floor counts as clamped: the central path
/// keeps P~ a few units above ln(floor) even when the floor is the optimum.
inline constexpr double kClampBand = 1e3;

inline double sinr_floor(const NetworkInstance& inst, int i, double power_floor) {
  double interference = inst.N(i);
  for (int j = 0; j < inst.M(); ++j)
    if (j != i) interference += inst.G(i, j) * inst.Pmax(j);
  return inst.G(i, i) * power_floor * inst.Pmax(i) / interference;
}

/// Completion time far beyond anything reachable above the power floor; used to
/// keep otherwise free T variables bounded.
inline double time_horizon(const NetworkInstance& inst, int i, double power_floor) {
  return 10.0 * inst.L(i) * ct_bound(std::log(sinr_floor(inst, i, power_floor))).value;
}

struct Layout {
  int M = 0;
  int t(int i) const { return i; }
  int s(int i) const { return M + i; }
  int p(int i) const { return 2 * M + i; }
  std::vector<int> p_vars() const {
    std::vector<int> v;
    for (int i = 0; i < M; ++i) v.push_back(p(i));
    return v;
  }
};

inline void validate_extra(const ExtraConstraints& extra, int M) {
  for (std::size_t k = 0; k < extra.linear_time.size(); ++k)
    require(extra.linear_time[k].coef.size() == M, ErrorCode::dimension_mismatch,
            "linear time constraint needs M coefficients",
            "linear_time[" + std::to_string(k) + "]");
  for (std::size_t k = 0; k < extra.sum_power.size(); ++k) {
    const auto& sp = extra.sum_power[k];
    const auto f = "sum_power[" + std::to_string(k) + "]";
    require(!sp.users.empty() && sp.cap > 0, ErrorCode::invalid_argument,
            "sum-power constraint needs users and a positive cap", f);
    for (int u : sp.users)
      require(u >= 0 && u < M, ErrorCode::invalid_argument, "user index out of range", f);
  }
}

/// Rows shared by every log-domain formulation of one channel realization:
/// power box and the extra user constraints. `p_of(i)` maps user -> variable.
template <class PVar>
void append_power_rows(std::vector<barrier::Row>& rows, const NetworkInstance& inst,
                       double power_floor, PVar p_of, const std::string& tag, bool upper = true) {
  for (int i = 0; i < inst.M(); ++i) {
    const auto u = std::to_string(i);
    if (upper)
      rows.push_back(barrier::linear_row({{p_of(i), 1.0}}, std::log(inst.Pmax(i)), tag + "pmax " + u));
    rows.push_back(barrier::linear_row({{p_of(i), -1.0}}, -std::log(power_floor * inst.Pmax(i)),
                                       tag + "power floor " + u));
  }
}

inline std::vector<barrier::Row> sum_power_rows(const ExtraConstraints& extra,
                                                const Layout& lay) {
  std::vector<barrier::Row> rows;
  for (std::size_t k = 0; k < extra.sum_power.size(); ++k) {
    const auto& sp = extra.sum_power[k];
    std::vector<int> vars;
    for (int u : sp.users) vars.push_back(lay.p(u));
    const auto n = static_cast<Eigen::Index>(vars.size());
    Mat A = Mat::Identity(n, n);
    Vec b = Vec::Constant(n, -std::log(sp.cap));
    rows.push_back(barrier::lse_row(vars, A, b, "sum power " + std::to_string(k)));
  }
  return rows;
}

inline double relative_excess(double value, double cap) {
  return std::max(0.0, (value - cap) / std::max(std::abs(cap), 1e-300));
}

}  // namespace detail

/// Worst relative violation of the original (untransformed) constraints by a
/// power allocation and the completion times it induces.
inline double original_violation(const NetworkInstance& inst, const Vec& P, const Vec& T,
                                 const ExtraConstraints& extra = {}) {
  double worst = 0;
  for (int i = 0; i < inst.M(); ++i) {
    worst = std::max(worst, detail::relative_excess(P(i), inst.Pmax(i)));
    worst = std::max(worst, P(i) < 0 ? 1.0 : 0.0);
    if (inst.Tmax) worst = std::max(worst, detail::relative_excess(T(i), (*inst.Tmax)(i)));
  }
  for (const auto& row : extra.linear_time)
    worst = std::max(worst, detail::relative_excess(row.coef.dot(T), row.rhs));
  for (const auto& sp : extra.sum_power) {
    double total = 0;
    for (int u : sp.users) total += P(u);
    worst = std::max(worst, detail::relative_excess(total, sp.cap));
  }
  return worst;
}

/// Minimizes J(T) over power allocations for a known gain matrix.
inline Solution solve_perfect_csi(const NetworkInstance& inst, const CostSpec& spec,
                                  const SolveOptions& opts = {},
                                  const ExtraConstraints& extra = {}) {
  validate(inst);
  validate(spec, inst.M());
  opts.validate();
  const int M = inst.M();
  detail::validate_extra(extra, M);
  const detail::Layout lay{M};
  const double delta = opts.init_margin;

  // core rows over [T, S~, P~]
  std::vector<barrier::Row> core;
  for (int i = 0; i < M; ++i) {
    const auto u = std::to_string(i);
    core.push_back(ct_bound_row(lay.t(i), lay.s(i), inst.L(i), "completion time " + u));
    core.push_back(sinr_row(i, inst.G, inst.N(i), lay.s(i), lay.p_vars(), "sinr " + u));
    if (inst.Tmax) core.push_back(barrier::linear_row({{lay.t(i), 1.0}}, (*inst.Tmax)(i), "tmax " + u));
  }
  detail::append_power_rows(core, inst, opts.power_floor, [&](int i) { return lay.p(i); }, "");
  for (std::size_t k = 0; k < extra.linear_time.size(); ++k) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < M; ++i)
      if (extra.linear_time[k].coef(i) != 0) terms.emplace_back(lay.t(i), extra.linear_time[k].coef(i));
    core.push_back(barrier::linear_row(std::move(terms), extra.linear_time[k].rhs,
                                       "linear time " + std::to_string(k)));
  }
  for (auto& row : detail::sum_power_rows(extra, lay)) core.push_back(std::move(row));

  // a user with zero weight and no cap has nothing bounding T_i from above
  if (const auto* ws = std::get_if<WeightedSum>(&spec.kind); ws && !inst.Tmax)
    for (int i = 0; i < M; ++i)
      if (ws->w(i) == 0)
        core.push_back(barrier::linear_row(
            {{lay.t(i), 1.0}}, detail::time_horizon(inst, i, opts.power_floor),
            "time horizon " + std::to_string(i)));

  // strictly feasible start: half power, SINR targets backed off by delta
  Vec x0(3 * M);
  {
    PowerAllocation half{inst.Pmax / 2};
    const Vec S = sinr(inst, half);
    for (int i = 0; i < M; ++i) {
      x0(lay.p(i)) = std::log(half.P(i));
      x0(lay.s(i)) = std::log(S(i)) - delta;
      const double need = inst.L(i) * ct_bound(x0(lay.s(i))).value;
      x0(lay.t(i)) = need * (1 + delta);
      if (inst.Tmax && x0(lay.t(i)) >= (*inst.Tmax)(i)) x0(lay.t(i)) = 0.5 * (need + (*inst.Tmax)(i));
    }
  }

  Certificate cert;
  barrier::Program probe(3 * M);
  probe.constraints = core;
  if (!barrier::strictly_feasible(probe, x0)) {
    // Phase I over a bounded box so the auxiliary problem has a center
    std::vector<barrier::Row> rows = core;
    for (int i = 0; i < M; ++i) {
      const double floor_s = std::log(detail::sinr_floor(inst, i, opts.power_floor)) - 1.0;
      rows.push_back(barrier::linear_row({{lay.s(i), -1.0}}, -floor_s, "phase-one sinr floor"));
      if (!inst.Tmax)
        rows.push_back(barrier::linear_row({{lay.t(i), 1.0}},
                                           detail::time_horizon(inst, i, opts.power_floor),
                                           "phase-one horizon"));
    }
    const auto p1 = barrier::phase_one(rows, 3 * M, x0, opts.barrier);
    cert.phase_one = true;
    cert.phase_one_iterations = p1.newton_iterations;
    if (!p1.feasible || !barrier::strictly_feasible(probe, p1.x)) {
      cert.status = "infeasible";
      cert.max_violation = p1.min_slack;
      throw SolveFailure(ErrorCode::infeasible,
                         "no strictly feasible point: phase-one slack stalled at " +
                             std::to_string(p1.min_slack),
                         cert);
    }
    x0 = p1.x;
    // Phase I stops near the analytic center of its box, often at tiny SINRs
    // where T ~ L e^{-S~} and the main path crawls. Raise the SINR targets first,
    // then pull the times down as far as feasibility allows.
    {
      barrier::Program lift(3 * M);
      lift.constraints = rows;
      for (int i = 0; i < M; ++i) lift.linear_objective(lay.s(i)) = -1.0;
      barrier::Options lo = opts.barrier;
      lo.gap_tol = 1e-2;
      const barrier::Result lr = barrier::minimize(lift, x0, lo);
      if (barrier::strictly_feasible(probe, lr.x)) x0 = lr.x;
    }
    Vec tight = x0;
    Vec P(M);
    for (int i = 0; i < M; ++i) P(i) = std::exp(x0(lay.p(i)));
    const Vec S = sinr(inst, PowerAllocation{P});
    for (int i = 0; i < M; ++i) {
      tight(lay.s(i)) = std::max(x0(lay.s(i)), std::log(S(i)) - delta);
      tight(lay.t(i)) = std::min(x0(lay.t(i)), inst.L(i) * ct_bound(tight(lay.s(i))).value * (1 + delta));
    }
    for (double lambda = 1.0; lambda > 1e-3; lambda *= 0.5) {
      const Vec trial = x0 + lambda * (tight - x0);
      if (barrier::strictly_feasible(probe, trial)) {
        x0 = trial;
        break;
      }
    }
  }

  barrier::Program prog(3 * M);
  prog.constraints = std::move(core);
  LinearMap tmap(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) tmap[static_cast<std::size_t>(i)] = {{lay.t(i), 1.0}};
  const AttachedCost cost = attach_cost(prog, spec, tmap, 1.0, "cost");
  Vec x(prog.dim);
  x.head(3 * M) = x0;
  cost.initialize_aux(x, delta);

  const barrier::Result res = barrier::minimize(prog, x, opts.barrier);

  Solution sol;
  sol.transformed.T = res.x.segment(0, M);
  sol.transformed.Stilde = res.x.segment(M, M);
  sol.transformed.Ptilde = res.x.segment(2 * M, M);
  sol.transformed.aux = res.x.tail(prog.dim - 3 * M);
  sol.P = sol.transformed.Ptilde.array().exp().matrix().cwiseMin(inst.Pmax);
  const LinkState st = link_state(inst, PowerAllocation{sol.P});
  sol.S = st.S;
  sol.R = st.R;
  sol.T = st.T;
  sol.cost = eval_cost(spec, sol.T);

  cert.gap = res.gap;
  cert.barrier_objective = res.objective;
  cert.outer_iterations = res.outer_iterations;
  cert.newton_iterations = res.newton_iterations;
  cert.max_violation = original_violation(inst, sol.P, sol.T, extra);
  cert.clamp_active.resize(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i)
    cert.clamp_active[static_cast<std::size_t>(i)] = sol.P(i) <= detail::kClampBand * opts.power_floor * inst.Pmax(i);
  if (!res.converged) {
    cert.status = "not_converged";
    sol.certificate = cert;
    throw SolveFailure(ErrorCode::not_converged,
                       "barrier method did not converge (gap " + std::to_string(res.gap) + ")",
                       cert);
  }
  cert.status = "optimal";
  sol.certificate = std::move(cert);
  return sol;
}

/// Exhaustive search over a per-user logarithmic power grid
///   P_i in { Pmax_i 10^(-decades k / points) : k = 0 .. points-1 }
/// with every SINR at its equality value. Grids nest when `points` doubles.
/// Points violating a completion-time cap are skipped. Returns the best point
/// found, an upper bound on the optimal cost.
inline Solution brute_force_oracle(const NetworkInstance& inst, const CostSpec& spec,
                                   int grid_points_per_dim, double decades = 3.0) {
  validate(inst);
  validate(spec, inst.M());
  require(grid_points_per_dim >= 1, ErrorCode::invalid_argument, "grid needs at least one point",
          "grid_points_per_dim");
  const int M = inst.M();
  const int g = grid_points_per_dim;
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < g; ++k)
      levels[static_cast<std::size_t>(i)].push_back(inst.Pmax(i) *
                                                    std::pow(10.0, -decades * k / g));

  std::vector<int> idx(static_cast<std::size_t>(M), 0);
  Vec P(M);
  Vec best_P;
  double best = std::numeric_limits<double>::infinity();
  long long evaluated = 0;
  while (true) {
    for (int i = 0; i < M; ++i) P(i) = levels[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    const LinkState st = link_state(inst, PowerAllocation{P});
    ++evaluated;
    bool ok = true;
    if (inst.Tmax)
      for (int i = 0; i < M; ++i) ok = ok && st.T(i) <= (*inst.Tmax)(i);
    if (ok) {
      const double c = eval_cost(spec, st.T);
      if (c < best) {
        best = c;
        best_P = P;
      }
    }
    int d = 0;
    while (d < M && ++idx[static_cast<std::size_t>(d)] == g) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == M) break;
  }

  Solution sol;
  sol.certificate.status = "grid";
  sol.certificate.newton_iterations = 0;
  if (best_P.size() == 0) {
    sol.cost = std::numeric_limits<double>::infinity();
    sol.certificate.status = "grid_infeasible";
    return sol;
  }
  const LinkState st = link_state(inst, PowerAllocation{best_P});
  sol.P = best_P;
  sol.S = st.S;
  sol.R = st.R;
  sol.T = st.T;
  sol.cost = best;
  sol.transformed.Ptilde = best_P.array().log().matrix();
  sol.transformed.Stilde = st.S.array().log().matrix();
  sol.transformed.T = st.T;
  sol.certificate.outer_iterations = static_cast<int>(std::min<long long>(evaluated, std::numeric_limits<int>::max()));
  sol.certificate.clamp_active.assign(static_cast<std::size_t>(M), false);
  return sol;
}

}  // namespace ctpc
