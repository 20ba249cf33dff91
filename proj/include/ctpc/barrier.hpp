#pragma once

// Log-barrier path-following Newton method for smooth convex programs
//
//   minimize   c.x + sum_k g_k(x)
//   subject to f_k(x) <= 0
//
// where every g_k and f_k is a smooth function of a handful of variables with
// analytic gradient and Hessian. Problem sizes here are small (tens to a few
// hundred variables), so the Newton system is assembled densely.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ctpc/log.hpp"
#include "ctpc/model.hpp"

namespace ctpc::barrier {

/// A smooth function of the variables listed in `vars`. `eval` receives the
/// gathered local values and, when the pointers are non-null, writes the local
/// gradient (size vars) and Hessian (vars x vars).
struct Row {
  std::vector<int> vars;
  std::function<double(const Vec& local, Vec* grad, Mat* hess)> eval;
  bool linear = false;
  std::string label;
};

/// sum_k coef_k x[var_k] - rhs
inline Row linear_row(std::vector<std::pair<int, double>> terms, double rhs, std::string label) {
  Row row;
  Vec coef(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    row.vars.push_back(terms[k].first);
    coef(static_cast<Eigen::Index>(k)) = terms[k].second;
  }
  row.linear = true;
  row.label = std::move(label);
  row.eval = [coef, rhs](const Vec& x, Vec* grad, Mat* hess) {
    if (grad) *grad = coef;
    if (hess) *hess = Mat::Zero(coef.size(), coef.size());
    return coef.dot(x) - rhs;
  };
  return row;
}

/// Max-shifted ln sum_k exp(y_k).
inline double log_sum_exp(const Vec& y) {
  const double top = y.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((y.array() - top).exp().sum());
}

/// ln sum_k exp(A.row(k) . x + b_k), with A expressed over `vars`.
inline Row lse_row(std::vector<int> vars, Mat A, Vec b, std::string label) {
  Row row;
  row.vars = std::move(vars);
  row.label = std::move(label);
  row.eval = [A = std::move(A), b = std::move(b)](const Vec& x, Vec* grad, Mat* hess) {
    const Vec y = A * x + b;
    const double value = log_sum_exp(y);
    if (grad || hess) {
      const Vec pi = (y.array() - value).exp().matrix();  // softmax weights
      const Vec g = A.transpose() * pi;
      if (grad) *grad = g;
      if (hess) *hess = A.transpose() * pi.asDiagonal() * A - g * g.transpose();
    }
    return value;
  };
  return row;
}

struct Program {
  int dim = 0;
  Vec linear_objective;
  std::vector<Row> objective_terms;
  std::vector<Row> constraints;

  explicit Program(int n = 0) : dim(n), linear_objective(Vec::Zero(n)) {}

  int add_variables(int count) {
    const int first = dim;
    dim += count;
    linear_objective.conservativeResize(dim);
    linear_objective.tail(count).setZero();
    return first;
  }
};

struct Options {
  double t0 = 1.0;
  double mu = 20.0;
  double newton_tol = 1e-10;  // on lambda^2 / 2
  double gap_tol = 1e-8;      // outer stop when m / t <= gap_tol
  int max_outer = 60;
  int max_newton = 200;       // per centering
  double alpha = 0.01;
  double beta = 0.5;
};

struct Result {
  Vec x;
  double objective = 0;
  double gap = std::numeric_limits<double>::infinity();
  int outer_iterations = 0;
  int newton_iterations = 0;
  bool converged = false;
  bool stopped_early = false;
  double max_constraint = -std::numeric_limits<double>::infinity();
};

struct Hooks {
  /// Called after every accepted Newton step; return true to stop immediately.
  std::function<bool(const Vec& x)> after_step;
  /// Called after every completed centering stage with the current x and t.
  std::function<void(const Vec& x, double t)> after_stage;
};

namespace detail {

inline Vec gather(const Vec& x, const std::vector<int>& vars) {
  Vec local(static_cast<Eigen::Index>(vars.size()));
  for (std::size_t k = 0; k < vars.size(); ++k) local(static_cast<Eigen::Index>(k)) = x(vars[k]);
  return local;
}

inline void scatter_grad(Vec& g, const std::vector<int>& vars, const Vec& local, double scale) {
  for (std::size_t a = 0; a < vars.size(); ++a) g(vars[a]) += scale * local(static_cast<Eigen::Index>(a));
}

inline void scatter_hess(Mat& H, const std::vector<int>& vars, const Mat& local, double scale) {
  for (std::size_t a = 0; a < vars.size(); ++a)
    for (std::size_t b = 0; b < vars.size(); ++b)
      H(vars[a], vars[b]) += scale * local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

inline void scatter_outer(Mat& H, const std::vector<int>& vars, const Vec& g, double scale) {
  for (std::size_t a = 0; a < vars.size(); ++a)
    for (std::size_t b = 0; b < vars.size(); ++b)
      H(vars[a], vars[b]) +=
          scale * g(static_cast<Eigen::Index>(a)) * g(static_cast<Eigen::Index>(b));
}

}  // namespace detail

inline double objective_value(const Program& prog, const Vec& x) {
  double v = prog.linear_objective.dot(x);
  for (const auto& term : prog.objective_terms) v += term.eval(detail::gather(x, term.vars), nullptr, nullptr);
  return v;
}

inline double max_constraint(const Program& prog, const Vec& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& row : prog.constraints)
    worst = std::max(worst, row.eval(detail::gather(x, row.vars), nullptr, nullptr));
  return worst;
}

inline bool strictly_feasible(const Program& prog, const Vec& x) {
  for (const auto& row : prog.constraints) {
    const double f = row.eval(detail::gather(x, row.vars), nullptr, nullptr);
    if (!(f < 0)) return false;
  }
  return true;
}

/// Scaled barrier function f0(x) - (1/t) sum ln(-f_k(x)); +inf outside the domain.
inline double barrier_value(const Program& prog, const Vec& x, double t) {
  double v = objective_value(prog, x);
  if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
  double log_sum = 0;
  for (const auto& row : prog.constraints) {
    const double f = row.eval(detail::gather(x, row.vars), nullptr, nullptr);
    if (!(f < 0) || !std::isfinite(f)) return std::numeric_limits<double>::infinity();
    log_sum += std::log(-f);
  }
  return v - log_sum / t;
}

inline double barrier_derivatives(const Program& prog, const Vec& x, double t, Vec& grad, Mat& hess) {
  const int n = prog.dim;
  grad = prog.linear_objective;
  hess = Mat::Zero(n, n);
  double value = prog.linear_objective.dot(x);
  Vec g;
  Mat H;
  for (const auto& term : prog.objective_terms) {
    value += term.eval(detail::gather(x, term.vars), &g, &H);
    detail::scatter_grad(grad, term.vars, g, 1.0);
    detail::scatter_hess(hess, term.vars, H, 1.0);
  }
  const double inv_t = 1.0 / t;
  for (const auto& row : prog.constraints) {
    const double f = row.eval(detail::gather(x, row.vars), &g, row.linear ? nullptr : &H);
    value -= inv_t * std::log(-f);
    detail::scatter_grad(grad, row.vars, g, -inv_t / f);
    detail::scatter_outer(hess, row.vars, g, inv_t / (f * f));
    if (!row.linear) detail::scatter_hess(hess, row.vars, H, -inv_t / f);
  }
  return value;
}

/// Solves H dx = -g; regularizes with a growing multiple of the identity when
/// H is not numerically positive definite.
inline Vec newton_direction(Mat H, const Vec& g) {
  // Jacobi scaling keeps variables on very different scales (times vs logs) solvable
  Vec d = H.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Mat Hs = d.asDiagonal() * H * d.asDiagonal();
  const Vec gs = d.cwiseProduct(g);
  Eigen::LLT<Mat> llt(Hs);
  if (llt.info() == Eigen::Success) return -d.cwiseProduct(llt.solve(gs));
  for (double shift = 1e-12; shift < 1e12; shift *= 10) {
    Mat shifted = Hs;
    shifted.diagonal().array() += shift;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return -d.cwiseProduct(llt.solve(gs));
  }
  return -g;
}

/// Path-following barrier method from a strictly feasible x0.
inline Result minimize(const Program& prog, Vec x0, const Options& opts, const Hooks& hooks = {}) {
  Result res;
  res.x = std::move(x0);
  const double m = static_cast<double>(prog.constraints.size());
  double t = opts.t0;
  Vec grad;
  Mat hess;
  bool inner_failed = false;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    res.outer_iterations = outer + 1;
    bool centered = false;
    double last_decrement = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_newton; ++it) {
      const double phi = barrier_derivatives(prog, res.x, t, grad, hess);
      const Vec dx = newton_direction(hess, grad);
      const double slope = grad.dot(dx);
      const double decrement = -slope * t;  // lambda^2 of the unscaled barrier
      if (!(decrement > 0) || decrement / 2 <= opts.newton_tol) {
        centered = true;
        break;
      }
      // Inside the quadratic region the decrement collapses every step; when it
      // stops shrinking we are at the roundoff floor of the barrier gradient.
      if (decrement / 2 <= std::sqrt(opts.newton_tol) && decrement > 0.25 * last_decrement) {
        centered = true;
        break;
      }
      last_decrement = decrement;
      const double slack = 64 * std::numeric_limits<double>::epsilon() * (1 + std::abs(phi));
      double step = 1.0;
      Vec trial;
      bool accepted = false;
      while (step > 1e-20) {
        trial = res.x + step * dx;
        const double phi_trial = barrier_value(prog, trial, t);
        if (std::isfinite(phi_trial) && phi_trial <= phi + opts.alpha * step * slope + slack) {
          accepted = true;
          break;
        }
        step *= opts.beta;
      }
      if (!accepted) {
        // no representable progress: centered to working precision
        log::debug("line search stalled, decrement ", decrement);
        centered = decrement / 2 <= 1e-3;
        break;
      }
      res.x = trial;
      ++res.newton_iterations;
      if (hooks.after_step && hooks.after_step(res.x)) {
        res.stopped_early = true;
        res.objective = objective_value(prog, res.x);
        res.max_constraint = max_constraint(prog, res.x);
        res.gap = m / t;
        return res;
      }
    }
    if (!centered) inner_failed = true;
    res.gap = m / t;
    log::debug("barrier stage ", outer, ": t=", t, " newton=", res.newton_iterations,
               " objective=", objective_value(prog, res.x), " centered=", centered);
    if (hooks.after_stage) hooks.after_stage(res.x, t);
    if (res.gap <= opts.gap_tol) break;
    t *= opts.mu;
  }
  res.objective = objective_value(prog, res.x);
  res.max_constraint = max_constraint(prog, res.x);
  res.converged = res.gap <= opts.gap_tol && !inner_failed && res.max_constraint < 0;
  return res;
}

struct PhaseOneResult {
  bool feasible = false;
  Vec x;
  double min_slack = 0;  // the smallest s reached with f_k(x) <= s for all k
  int newton_iterations = 0;
};

/// Finds x with f_k(x) < 0 for all rows by minimizing s subject to f_k(x) <= s
/// and s >= -1. The rows must describe a bounded set, otherwise the auxiliary
/// barrier problem has no center.
inline PhaseOneResult phase_one(const std::vector<Row>& rows, int dim, const Vec& x0,
                                const Options& opts, double margin = 1e-3) {
  Program aux(dim + 1);
  const int s = dim;
  aux.linear_objective(s) = 1.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    worst = std::max(worst, row.eval(detail::gather(x0, row.vars), nullptr, nullptr));
    Row shifted;
    shifted.vars = row.vars;
    shifted.vars.push_back(s);
    shifted.linear = row.linear;
    shifted.label = row.label;
    const auto n_local = static_cast<Eigen::Index>(row.vars.size());
    shifted.eval = [inner = row.eval, n_local](const Vec& x, Vec* grad, Mat* hess) {
      Vec g;
      Mat H;
      const double f = inner(x.head(n_local), grad ? &g : nullptr, hess ? &H : nullptr);
      if (grad) {
        grad->resize(n_local + 1);
        grad->head(n_local) = g;
        (*grad)(n_local) = -1.0;
      }
      if (hess) {
        *hess = Mat::Zero(n_local + 1, n_local + 1);
        hess->topLeftCorner(n_local, n_local) = H;
      }
      return f - x(n_local);
    };
    aux.constraints.push_back(std::move(shifted));
  }
  aux.constraints.push_back(linear_row({{s, -1.0}}, 1.0, "phase-one floor"));

  PhaseOneResult out;
  Vec z(dim + 1);
  z << x0, std::max(worst, -0.5) + 1.0;
  if (worst < -margin) {
    out.feasible = true;
    out.x = x0;
    out.min_slack = worst;
    return out;
  }
  Hooks hooks;
  hooks.after_step = [&](const Vec& zz) { return zz(s) < -margin; };
  const Result r = minimize(aux, z, opts, hooks);
  out.newton_iterations = r.newton_iterations;
  out.x = r.x.head(dim);
  double actual = -std::numeric_limits<double>::infinity();
  for (const auto& row : rows)
    actual = std::max(actual, row.eval(detail::gather(out.x, row.vars), nullptr, nullptr));
  out.min_slack = actual;
  out.feasible = actual < 0;
  return out;
}

}  // namespace ctpc::barrier
