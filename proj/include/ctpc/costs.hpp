#pragma once

// Convex completion-time costs, their epigraph forms and the matching rate utilities.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "ctpc/error.hpp"
#include "ctpc/model.hpp"

namespace ctpc {

struct WeightedSum {
  Vec w;
};
struct MaxTime {};
struct SumRLargest {
  int r = 1;
};
struct PNorm {
  double p = 2.0;
};

using CostKind = std::variant<WeightedSum, MaxTime, SumRLargest, PNorm>;

/// A completion-time cost J(T). `lengths` is only needed for the rate-utility
/// mappings and may be left empty otherwise.
struct CostSpec {
  CostKind kind;
  Vec lengths;

  static CostSpec weighted_sum(Vec w) { return {WeightedSum{std::move(w)}, {}}; }
  static CostSpec max() { return {MaxTime{}, {}}; }
  static CostSpec sum_r_largest(int r) { return {SumRLargest{r}, {}}; }
  static CostSpec p_norm(double p) { return {PNorm{p}, {}}; }

  CostSpec with_lengths(Vec L) const {
    CostSpec c = *this;
    c.lengths = std::move(L);
    return c;
  }

  friend bool operator==(const CostSpec& a, const CostSpec& b) {
    if (a.kind.index() != b.kind.index()) return false;
    if (a.lengths.size() != b.lengths.size() || a.lengths != b.lengths) return false;
    return std::visit(
        [&](const auto& ka) {
          using K = std::decay_t<decltype(ka)>;
          const auto& kb = std::get<K>(b.kind);
          if constexpr (std::is_same_v<K, WeightedSum>)
            return ka.w.size() == kb.w.size() && ka.w == kb.w;
          else if constexpr (std::is_same_v<K, SumRLargest>)
            return ka.r == kb.r;
          else if constexpr (std::is_same_v<K, PNorm>)
            return ka.p == kb.p;
          else
            return true;
        },
        a.kind);
  }
};

inline std::string kind_name(const CostSpec& spec) {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WeightedSum>) return "weighted_sum";
        else if constexpr (std::is_same_v<K, MaxTime>) return "max";
        else if constexpr (std::is_same_v<K, SumRLargest>) return "sum_r_largest";
        else return "p_norm";
      },
      spec.kind);
}

inline void validate(const CostSpec& spec, int M) {
  std::visit(
      [M](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WeightedSum>) {
          require(k.w.size() == M, ErrorCode::dimension_mismatch, "weights must have M entries",
                  "w");
          for (Eigen::Index i = 0; i < k.w.size(); ++i)
            require(std::isfinite(k.w(i)) && k.w(i) >= 0, ErrorCode::invalid_argument,
                    "weights must be nonnegative", "w[" + std::to_string(i) + "]");
          require(std::abs(k.w.sum() - 1.0) <= 1e-9, ErrorCode::invalid_argument,
                  "weights must sum to one", "w");
        } else if constexpr (std::is_same_v<K, SumRLargest>) {
          require(k.r >= 1 && k.r <= M, ErrorCode::invalid_argument, "r must lie in 1..M", "r");
        } else if constexpr (std::is_same_v<K, PNorm>) {
          require(!std::isnan(k.p) && k.p >= 1, ErrorCode::invalid_argument, "p must be >= 1",
                  "p");
        }
      },
      spec.kind);
  if (spec.lengths.size() != 0)
    require(spec.lengths.size() == M, ErrorCode::dimension_mismatch,
            "stored lengths must have M entries", "L");
}

/// ||T||_p computed as T_max * (sum (T_i / T_max)^p)^(1/p) so large p cannot overflow.
inline double p_norm_value(const Vec& T, double p) {
  const double top = T.cwiseAbs().maxCoeff();
  if (top == 0) return 0;
  if (std::isinf(p)) return top;
  double acc = 0;
  for (Eigen::Index i = 0; i < T.size(); ++i) acc += std::pow(std::abs(T(i)) / top, p);
  return top * std::pow(acc, 1.0 / p);
}

/// Gradient and Hessian of ||T||_p for T > 0, p > 1.
inline double p_norm_derivatives(const Vec& T, double p, Vec* grad, Mat* hess) {
  const double f = p_norm_value(T, p);
  const auto n = T.size();
  Vec y = T / f;
  Vec g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = std::pow(y(i), p - 1);
  if (grad) *grad = g;
  if (hess) {
    hess->resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        (*hess)(i, j) =
            (p - 1) / f * ((i == j ? std::pow(y(i), p - 2) : 0.0) - g(i) * g(j));
  }
  return f;
}

/// Exact J(T); +inf whenever any completion time is the infinity sentinel.
inline double eval_cost(const CostSpec& spec, const Vec& T) {
  for (Eigen::Index i = 0; i < T.size(); ++i)
    if (is_infinite_time(T(i))) return std::numeric_limits<double>::infinity();
  return std::visit(
      [&T](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WeightedSum>) {
          return k.w.dot(T);
        } else if constexpr (std::is_same_v<K, MaxTime>) {
          return T.maxCoeff();
        } else if constexpr (std::is_same_v<K, SumRLargest>) {
          std::vector<double> v(T.data(), T.data() + T.size());
          std::stable_sort(v.begin(), v.end(), std::greater<>());
          const auto r = std::min<std::size_t>(static_cast<std::size_t>(k.r), v.size());
          return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(r), 0.0);
        } else {
          return p_norm_value(T, k.p);
        }
      },
      spec.kind);
}

// ---------------------------------------------------------------------------
// Epigraph form
// ---------------------------------------------------------------------------

/// Sparse linear inequality sum_k coef_k * z[var_k] <= rhs over z = [T, aux].
struct LinearRow {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0;
};

/// Smooth program equivalent to a cost: minimize objective . z (+ ||T||_p when
/// `smooth_p` is set) subject to `constraints`, where z = [T (num_t), aux (num_aux)].
struct EpigraphProgram {
  int num_t = 0;
  int num_aux = 0;
  std::vector<LinearRow> constraints;
  Vec objective;
  std::optional<double> smooth_p;

  double value(const Vec& T, const Vec& aux) const {
    Vec z(num_t + num_aux);
    z << T, aux;
    double v = objective.dot(z);
    if (smooth_p) v += p_norm_value(T, *smooth_p);
    return v;
  }

  double max_violation(const Vec& T, const Vec& aux) const {
    Vec z(num_t + num_aux);
    z << T, aux;
    double worst = 0;
    for (const auto& row : constraints) {
      double lhs = 0;
      for (auto [var, coef] : row.terms) lhs += coef * z(var);
      worst = std::max(worst, lhs - row.rhs);
    }
    return worst;
  }

  /// Cheapest feasible auxiliaries for fixed T.
  Vec best_aux(const Vec& T) const;
};

inline EpigraphProgram epigraph_reform(const CostSpec& spec, int M) {
  validate(spec, M);
  EpigraphProgram prog;
  prog.num_t = M;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WeightedSum>) {
          prog.objective = k.w;
        } else if constexpr (std::is_same_v<K, MaxTime>) {
          // T_i <= t, minimize t
          prog.num_aux = 1;
          prog.objective = Vec::Zero(M + 1);
          prog.objective(M) = 1;
          for (int i = 0; i < M; ++i) prog.constraints.push_back({{{i, 1.0}, {M, -1.0}}, 0.0});
        } else if constexpr (std::is_same_v<K, SumRLargest>) {
          if (k.r == M) {
            // t is a free direction of the epigraph when r = M
            prog.objective = Vec::Ones(M);
            return;
          }
          // u_i >= T_i - t, u_i >= 0, minimize r t + sum u
          prog.num_aux = 1 + M;
          prog.objective = Vec::Zero(2 * M + 1);
          prog.objective(M) = k.r;
          for (int i = 0; i < M; ++i) {
            prog.objective(M + 1 + i) = 1;
            prog.constraints.push_back({{{i, 1.0}, {M, -1.0}, {M + 1 + i, -1.0}}, 0.0});
            prog.constraints.push_back({{{M + 1 + i, -1.0}}, 0.0});
          }
        } else {
          require(!std::isinf(k.p), ErrorCode::invalid_argument,
                  "p = inf is not supported in the smooth form; use the max cost instead", "p");
          if (k.p == 1.0) {
            // M * (equal-weight average) = plain sum
            prog.objective = Vec::Ones(M);
          } else {
            prog.objective = Vec::Zero(M);
            prog.smooth_p = k.p;
          }
        }
      },
      spec.kind);
  return prog;
}

inline Vec EpigraphProgram::best_aux(const Vec& T) const {
  Vec aux = Vec::Zero(num_aux);
  if (num_aux == 1) {
    aux(0) = T.maxCoeff();
  } else if (num_aux > 1) {
    // sum-r-largest: t at the r-th largest value, u_i = (T_i - t)_+
    const int M = num_t;
    const int r = static_cast<int>(std::lround(objective(M)));
    std::vector<double> v(T.data(), T.data() + T.size());
    std::sort(v.begin(), v.end(), std::greater<>());
    aux(0) = v[static_cast<std::size_t>(r - 1)];
    for (int i = 0; i < M; ++i) aux(1 + i) = std::max(T(i) - aux(0), 0.0);
  }
  return aux;
}

// ---------------------------------------------------------------------------
// Rate utilities
// ---------------------------------------------------------------------------

/// U_T(R) = -J(L_1/R_1, ..., L_M/R_M); -inf on any zero rate.
inline double utility_from_cost(const CostSpec& spec, const Vec& R) {
  require(spec.lengths.size() == R.size(), ErrorCode::dimension_mismatch,
          "utility mapping needs packet lengths stored on the cost", "L");
  for (Eigen::Index i = 0; i < R.size(); ++i)
    if (R(i) <= 0) return -std::numeric_limits<double>::infinity();
  return -eval_cost(spec, completion_time(spec.lengths, R));
}

/// Minimum potential delay utility -sum w'_i / R_i.
inline double potential_delay_utility(const Vec& wprime, const Vec& R) {
  double acc = 0;
  for (Eigen::Index i = 0; i < R.size(); ++i) {
    if (R(i) <= 0) return -std::numeric_limits<double>::infinity();
    acc += wprime(i) / R(i);
  }
  return -acc;
}

/// Weighted harmonic mean (sum w'_i / R_i)^-1; zero when any rate is zero.
inline double harmonic_mean_utility(const Vec& wprime, const Vec& R) {
  require(wprime.size() == R.size(), ErrorCode::dimension_mismatch,
          "weights and rates must have equal length");
  double acc = 0;
  for (Eigen::Index i = 0; i < R.size(); ++i) {
    require(wprime(i) >= 0, ErrorCode::invalid_argument, "weights must be nonnegative");
    if (R(i) <= 0) return 0.0;
    acc += wprime(i) / R(i);
  }
  return 1.0 / acc;
}

inline double min_rate_utility(const Vec& R) { return R.minCoeff(); }

}  // namespace ctpc
