#pragma once

// Log-domain building blocks shared by the deterministic, fading and robust
// solvers: the completion-time bound h(x) = 1 / log2(1 + e^x), the log-sum-exp
// SINR feasibility row, and attachment of a cost (through its epigraph form)
// to a barrier program.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ctpc/barrier.hpp"
#include "ctpc/costs.hpp"
#include "ctpc/model.hpp"

namespace ctpc {

/// ln(1 + e^x) without overflow or underflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct CtBound {
  double value;
  double d1;
  double d2;
};

/// h(x) = 1 / log2(1 + e^x) with analytic first and second derivatives.
/// A user with log-SINR target x needs T >= L h(x).
inline CtBound ct_bound(double x) {
  constexpr double ln2 = std::numbers::ln2;
  const double u = softplus(x);
  const double s = logistic(x);
  const double s_c = logistic(-x);  // 1 - s without cancellation
  const double r = s / u;  // stays O(1) in the left tail where u^2 underflows
  return {ln2 / u, -ln2 * r / u, ln2 * r * (2 * r - s_c) / u};
}

/// The closed-form second derivative of 1 / log2(1 + e^x), written exactly as
///   e^x ln2 [2 e^x - ln(1 + e^x)] / ((1 + e^x)^2 [ln(1 + e^x)]^3).
/// Kept literal (no stabilization) so it can be checked against ct_bound.
inline double ct_bound_second_derivative_closed_form(double x) {
  const double ex = std::exp(x);
  const double lg = std::log(1 + ex);
  return ex * std::numbers::ln2 * (2 * ex - lg) / ((1 + ex) * (1 + ex) * lg * lg * lg);
}

/// Inverse of h: the log-SINR target at which L h(x) equals T.
inline double ct_bound_inverse(double L, double T) {
  // log2(1 + e^x) = L / T  =>  x = ln(2^(L/T) - 1)
  return std::log(std::expm1(std::numbers::ln2 * L / T));
}

/// Variables: log-SINR targets, log powers and completion times.
struct TransformedPoint {
  Vec Stilde;
  Vec Ptilde;
  Vec T;
  Vec aux;

  friend bool operator==(const TransformedPoint& a, const TransformedPoint& b) {
    auto same = [](const Vec& x, const Vec& y) { return x.size() == y.size() && x == y; };
    return same(a.Stilde, b.Stilde) && same(a.Ptilde, b.Ptilde) && same(a.T, b.T) &&
           same(a.aux, b.aux);
  }
};

/// Row L h(x[s_var]) - x[t_var] <= 0.
inline barrier::Row ct_bound_row(int t_var, int s_var, double L, std::string label) {
  barrier::Row row;
  row.vars = {t_var, s_var};
  row.label = std::move(label);
  row.eval = [L](const Vec& x, Vec* grad, Mat* hess) {
    const CtBound h = ct_bound(x(1));
    if (grad) *grad = (Vec(2) << -1.0, L * h.d1).finished();
    if (hess) *hess = (Mat(2, 2) << 0.0, 0.0, 0.0, L * h.d2).finished();
    return L * h.value - x(0);
  };
  return row;
}

/// Transformed SINR row for user i with gains G (row i used), noise N_i:
///   ln{ exp(S~_i - P~_i - ln G_ii + ln N_i)
///       + sum_{j != i} exp(S~_i - P~_i + P~_j - ln G_ii + ln G_ij) } <= 0.
/// `s_var` indexes S~_i and `p_vars` the M log-powers.
inline barrier::Row sinr_row(int i, const Mat& G, double noise, int s_var,
                             const std::vector<int>& p_vars, std::string label) {
  const int M = static_cast<int>(p_vars.size());
  std::vector<int> vars{s_var};
  vars.insert(vars.end(), p_vars.begin(), p_vars.end());
  std::vector<std::pair<int, double>> interferers;
  for (int j = 0; j < M; ++j)
    if (j != i && G(i, j) > 0) interferers.emplace_back(j, std::log(G(i, j)));
  const auto terms = static_cast<Eigen::Index>(1 + interferers.size());
  Mat A = Mat::Zero(terms, 1 + M);
  Vec b(terms);
  const double lg_ii = std::log(G(i, i));
  A(0, 0) = 1;
  A(0, 1 + i) = -1;
  b(0) = std::log(noise) - lg_ii;
  for (std::size_t k = 0; k < interferers.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k + 1);
    A(r, 0) = 1;
    A(r, 1 + i) = -1;
    A(r, 1 + interferers[k].first) = 1;
    b(r) = interferers[k].second - lg_ii;
  }
  return barrier::lse_row(std::move(vars), std::move(A), std::move(b), std::move(label));
}

/// Direct evaluation of the transformed SINR residual for user i; <= 0 iff the
/// SINR target exp(Stilde_i) is met by powers exp(Ptilde).
inline double feasibility_residual(int i, const TransformedPoint& x, const NetworkInstance& inst) {
  check_dimensions(inst);
  const int M = inst.M();
  require(i >= 0 && i < M, ErrorCode::invalid_argument, "user index out of range", "i");
  require(inst.G(i, i) > 0, ErrorCode::invalid_argument, "direct gain must be positive",
          "G[" + std::to_string(i) + "][" + std::to_string(i) + "]");
  require(x.Stilde.size() == M && x.Ptilde.size() == M, ErrorCode::dimension_mismatch,
          "transformed point must have M entries");
  std::vector<double> y;
  const double base = x.Stilde(i) - x.Ptilde(i) - std::log(inst.G(i, i));
  y.push_back(base + std::log(inst.N(i)));
  for (int j = 0; j < M; ++j)
    if (j != i && inst.G(i, j) > 0) y.push_back(base + x.Ptilde(j) + std::log(inst.G(i, j)));
  return barrier::log_sum_exp(Eigen::Map<Vec>(y.data(), static_cast<Eigen::Index>(y.size())));
}

// ---------------------------------------------------------------------------
// Cost attachment
// ---------------------------------------------------------------------------

/// A cost argument y_i expressed as a sparse linear combination of program variables.
using LinearMap = std::vector<std::vector<std::pair<int, double>>>;

struct AttachedCost {
  EpigraphProgram epigraph;
  LinearMap map;
  int aux_begin = 0;
  double weight = 1.0;

  Vec argument(const Vec& x) const {
    Vec y(static_cast<Eigen::Index>(map.size()));
    for (std::size_t i = 0; i < map.size(); ++i) {
      double v = 0;
      for (auto [var, c] : map[i]) v += c * x(var);
      y(static_cast<Eigen::Index>(i)) = v;
    }
    return y;
  }

  /// Writes strictly feasible auxiliaries for the current cost argument.
  void initialize_aux(Vec& x, double margin) const {
    const Vec y = argument(x);
    Vec aux = epigraph.best_aux(y);
    const double pad = margin * (1.0 + y.cwiseAbs().maxCoeff());
    if (epigraph.num_aux == 1) aux(0) += pad;
    if (epigraph.num_aux > 1) aux.tail(epigraph.num_aux - 1).array() += pad;
    x.segment(aux_begin, epigraph.num_aux) = aux;
  }
};

/// Appends `weight * J(y)` with y = map(x) to the program using the epigraph
/// form of `spec`; new auxiliary variables are allocated at the end.
inline AttachedCost attach_cost(barrier::Program& prog, const CostSpec& spec, LinearMap map,
                                double weight, const std::string& tag) {
  AttachedCost ac;
  const int M = static_cast<int>(map.size());
  ac.epigraph = epigraph_reform(spec, M);
  ac.map = std::move(map);
  ac.weight = weight;
  ac.aux_begin = prog.add_variables(ac.epigraph.num_aux);
  const auto& ep = ac.epigraph;

  // z = [y, aux]; translate each z-term into program variables
  auto expand = [&](int z, double coef, std::vector<std::pair<int, double>>& out) {
    if (z < M) {
      for (auto [var, c] : ac.map[static_cast<std::size_t>(z)]) out.emplace_back(var, coef * c);
    } else {
      out.emplace_back(ac.aux_begin + (z - M), coef);
    }
  };
  for (Eigen::Index z = 0; z < ep.objective.size(); ++z) {
    if (ep.objective(z) == 0) continue;
    std::vector<std::pair<int, double>> terms;
    expand(static_cast<int>(z), weight * ep.objective(z), terms);
    for (auto [var, c] : terms) prog.linear_objective(var) += c;
  }
  int k = 0;
  for (const auto& row : ep.constraints) {
    std::vector<std::pair<int, double>> terms;
    for (auto [z, c] : row.terms) expand(z, c, terms);
    prog.constraints.push_back(
        barrier::linear_row(std::move(terms), row.rhs, tag + " epigraph " + std::to_string(k++)));
  }
  if (ep.smooth_p) {
    // weight * ||A x||_p over the variables appearing in the map
    std::vector<int> vars;
    for (const auto& combo : ac.map)
      for (auto [var, c] : combo)
        if (std::find(vars.begin(), vars.end(), var) == vars.end()) vars.push_back(var);
    Mat A = Mat::Zero(M, static_cast<Eigen::Index>(vars.size()));
    for (int i = 0; i < M; ++i)
      for (auto [var, c] : ac.map[static_cast<std::size_t>(i)]) {
        const auto col = std::find(vars.begin(), vars.end(), var) - vars.begin();
        A(i, col) += c;
      }
    const double p = *ep.smooth_p;
    barrier::Row term;
    term.vars = vars;
    term.label = tag + " p-norm";
    term.eval = [A, p, weight](const Vec& x, Vec* grad, Mat* hess) {
      const Vec y = A * x;
      Vec g;
      Mat H;
      const double f = p_norm_derivatives(y, p, grad ? &g : nullptr, hess ? &H : nullptr);
      if (grad) *grad = weight * A.transpose() * g;
      if (hess) *hess = weight * A.transpose() * H * A;
      return weight * f;
    };
    prog.objective_terms.push_back(std::move(term));
  }
  return ac;
}

}  // namespace ctpc
