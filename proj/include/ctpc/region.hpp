#pragma once

// Completion-time region tracing by weighted-sum sweeps, the induced rate
// points, and a 2-D convexity audit of the traced boundaries.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "ctpc/costs.hpp"
#include "ctpc/log.hpp"
#include "ctpc/model.hpp"
#include "ctpc/parallel.hpp"
#include "ctpc/solver.hpp"

namespace ctpc {

struct RegionEntry {
  int index = 0;
  double theta = 0;  // sweep angle; the sweep index for explicit weight lists
  Vec w;
  Vec T;
  Vec R;
  double cost = 0;
  bool ok = false;
  std::string error;  // solver failure message when !ok

  friend bool operator==(const RegionEntry& a, const RegionEntry& b) {
    auto same = [](const Vec& x, const Vec& y) { return x.size() == y.size() && x == y; };
    return a.index == b.index && a.theta == b.theta && same(a.w, b.w) && same(a.T, b.T) &&
           same(a.R, b.R) && a.cost == b.cost && a.ok == b.ok && a.error == b.error;
  }
};

struct RegionTrace {
  std::vector<RegionEntry> entries;  // sweep order
  std::string fingerprint;

  std::vector<const RegionEntry*> solved() const {
    std::vector<const RegionEntry*> out;
    for (const auto& e : entries)
      if (e.ok) out.push_back(&e);
    return out;
  }

  friend bool operator==(const RegionTrace&, const RegionTrace&) = default;
};

/// FNV-1a over the instance data; identifies which instance a trace belongs to.
inline std::string instance_fingerprint(const NetworkInstance& inst) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  mix(inst.M());
  for (Eigen::Index k = 0; k < inst.G.size(); ++k) mix(inst.G.data()[k]);
  for (const Vec* v : {&inst.N, &inst.Pmax, &inst.L})
    for (Eigen::Index k = 0; k < v->size(); ++k) mix((*v)(k));
  if (inst.Tmax)
    for (Eigen::Index k = 0; k < inst.Tmax->size(); ++k) mix((*inst.Tmax)(k));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// theta_k = (k + 1) / (K + 1) * pi / 2, w = (cos^2 theta, sin^2 theta).
inline std::vector<double> sweep_angles(int K) {
  require(K >= 1, ErrorCode::invalid_argument, "need at least one weight", "K");
  std::vector<double> th(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) th[static_cast<std::size_t>(k)] = (k + 1.0) / (K + 1.0) * std::numbers::pi / 2;
  return th;
}

inline RegionTrace trace_completion_region(const NetworkInstance& inst, const std::vector<Vec>& weights,
                                           const std::vector<double>& thetas,
                                           const SolveOptions& opts = {}, unsigned threads = 0) {
  validate(inst);
  require(thetas.size() == weights.size(), ErrorCode::dimension_mismatch,
          "one label per weight vector", "weights");
  for (std::size_t k = 0; k < weights.size(); ++k)
    validate(CostSpec::weighted_sum(weights[k]), inst.M());
  RegionTrace trace;
  trace.fingerprint = instance_fingerprint(inst);
  trace.entries.resize(weights.size());
  parallel_for(
      weights.size(),
      [&](std::size_t k) {
        RegionEntry& e = trace.entries[k];
        e.index = static_cast<int>(k);
        e.theta = thetas[k];
        e.w = weights[k];
        try {
          const Solution s = solve_perfect_csi(inst, CostSpec::weighted_sum(e.w), opts);
          e.T = s.T;
          e.R = inst.L.cwiseQuotient(s.T);
          e.cost = s.cost;
          e.ok = true;
        } catch (const Error& err) {
          e.error = err.what();
          log::warn("region point ", k, " failed: ", err.what());
        }
      },
      threads);
  return trace;
}

/// Explicit weight list for any M.
inline RegionTrace trace_completion_region(const NetworkInstance& inst, const std::vector<Vec>& weights,
                                           const SolveOptions& opts = {}, unsigned threads = 0) {
  std::vector<double> idx(weights.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<double>(k);
  return trace_completion_region(inst, weights, idx, opts, threads);
}

/// K-point angle sweep for two users.
inline RegionTrace trace_completion_region(const NetworkInstance& inst, int K,
                                           const SolveOptions& opts = {}, unsigned threads = 0) {
  require(inst.M() == 2, ErrorCode::invalid_argument,
          "the angle sweep needs two users; pass explicit weights otherwise", "M");
  const auto thetas = sweep_angles(K);
  std::vector<Vec> weights;
  for (double th : thetas) {
    const double c = std::cos(th), s = std::sin(th);
    weights.push_back((Vec(2) << c * c, s * s).finished());
  }
  return trace_completion_region(inst, weights, thetas, opts, threads);
}

inline void write_csv(std::ostream& os, const RegionTrace& trace) {
  const auto ok = trace.solved();
  const Eigen::Index M = ok.empty() ? 2 : ok.front()->w.size();
  os << "theta";
  for (const char* col : {"w", "T", "R"})
    for (Eigen::Index i = 0; i < M; ++i) os << ',' << col << i + 1;
  os << ",cost\n";
  const auto old = os.precision(17);
  for (const auto* e : ok) {
    os << e->theta;
    for (const Vec* v : {&e->w, &e->T, &e->R})
      for (Eigen::Index i = 0; i < M; ++i) os << ',' << (*v)(i);
    os << ',' << e->cost << '\n';
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Convexity audit
// ---------------------------------------------------------------------------

using Point2 = std::array<double, 2>;

enum class BoundaryKind {
  completion_time,  // region {T >= boundary}; boundary must be a convex curve
  rate              // region {R <= boundary}; looks for a chord leaving the region
};

struct ConvexityReport {
  bool convex = true;
  double worst_violation = 0;
  std::vector<Point2> witness;  // offending triple, or chord endpoints followed by its midpoint
};

namespace detail {

inline double extent(const std::vector<Point2>& pts) {
  double lo0 = pts[0][0], hi0 = lo0, lo1 = pts[0][1], hi1 = lo1;
  for (const auto& p : pts) {
    lo0 = std::min(lo0, p[0]);
    hi0 = std::max(hi0, p[0]);
    lo1 = std::min(lo1, p[1]);
    hi1 = std::max(hi1, p[1]);
  }
  return std::max({hi0 - lo0, hi1 - lo1, 1e-300});
}

inline std::vector<Point2> sorted_unique(std::vector<Point2> pts, double merge_tol) {
  std::stable_sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] > b[1]);
  });
  std::vector<Point2> out;
  for (const auto& p : pts)
    if (out.empty() || std::hypot(p[0] - out.back()[0], p[1] - out.back()[1]) > merge_tol) out.push_back(p);
  return out;
}

/// Height of the downward-closed hull of the polyline at abscissa x.
inline double polyline_height(const std::vector<Point2>& pts, double x) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k][0] >= x) best = std::max(best, pts[k][1]);
    if (k + 1 < pts.size() && pts[k][0] <= x && x <= pts[k + 1][0]) {
      const double span = pts[k + 1][0] - pts[k][0];
      const double a = span > 0 ? (x - pts[k][0]) / span : 0.0;
      best = std::max(best, pts[k][1] + a * (pts[k + 1][1] - pts[k][1]));
    }
  }
  return best;
}

}  // namespace detail

/// Completion-time boundaries: sorted by the first coordinate, consecutive edges
/// must turn left (normalized cross product >= -tol). Rate boundaries: every
/// chord midpoint is tested against the traced polyline.
inline ConvexityReport convexity_audit(const std::vector<Point2>& points, BoundaryKind kind,
                                       double tol = 1e-7) {
  require(points.size() >= 3, ErrorCode::invalid_argument, "convexity audit needs at least 3 points",
          "points");
  for (const auto& p : points)
    require(std::isfinite(p[0]) && std::isfinite(p[1]), ErrorCode::invalid_argument,
            "points must be finite", "points");
  const double scale = detail::extent(points);
  const auto pts = detail::sorted_unique(points, 1e-6 * scale);
  ConvexityReport rep;
  if (pts.size() < 3) return rep;

  if (kind == BoundaryKind::completion_time) {
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
      const double ax = pts[k][0] - pts[k - 1][0], ay = pts[k][1] - pts[k - 1][1];
      const double bx = pts[k + 1][0] - pts[k][0], by = pts[k + 1][1] - pts[k][1];
      const double cross = (ax * by - ay * bx) / (std::hypot(ax, ay) * std::hypot(bx, by));
      if (-cross > rep.worst_violation) {
        rep.worst_violation = -cross;
        rep.witness = {pts[k - 1], pts[k], pts[k + 1]};
      }
    }
  } else {
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 2; b < pts.size(); ++b) {
        const Point2 mid{0.5 * (pts[a][0] + pts[b][0]), 0.5 * (pts[a][1] + pts[b][1])};
        const double excess = (mid[1] - detail::polyline_height(pts, mid[0])) / scale;
        if (excess > rep.worst_violation) {
          rep.worst_violation = excess;
          rep.witness = {pts[a], pts[b], mid};
        }
      }
  }
  rep.convex = rep.worst_violation <= tol;
  if (rep.convex) rep.witness.clear();
  return rep;
}

inline std::vector<Point2> completion_points(const RegionTrace& trace) {
  std::vector<Point2> out;
  for (const auto* e : trace.solved()) {
    require(e->T.size() == 2, ErrorCode::invalid_argument, "2-D audit needs two users", "T");
    out.push_back({e->T(0), e->T(1)});
  }
  return out;
}

inline std::vector<Point2> rate_points(const RegionTrace& trace) {
  std::vector<Point2> out;
  for (const auto* e : trace.solved()) {
    require(e->R.size() == 2, ErrorCode::invalid_argument, "2-D audit needs two users", "R");
    out.push_back({e->R(0), e->R(1)});
  }
  return out;
}

}  // namespace ctpc
