#pragma once

// Network instance and the deterministic SINR -> rate -> completion time chain.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ctpc/error.hpp"

namespace ctpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Completion time of a link that carries no rate. Cost evaluation maps it to +inf cost.
inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

inline bool is_infinite_time(double t) { return std::isinf(t) && t > 0; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Power gains G(i, j) from transmitter j to receiver i, noise, power caps,
/// packet lengths (bits) and optional completion-time caps (channel uses).
/// All quantities are linear.
struct NetworkInstance {
  Mat G;
  Vec N;
  Vec Pmax;
  Vec L;
  std::optional<Vec> Tmax;

  int M() const { return static_cast<int>(N.size()); }

  friend bool operator==(const NetworkInstance& a, const NetworkInstance& b) {
    if (a.Tmax.has_value() != b.Tmax.has_value()) return false;
    if (a.G.rows() != b.G.rows() || a.G.cols() != b.G.cols() || a.N.size() != b.N.size() ||
        a.Pmax.size() != b.Pmax.size() || a.L.size() != b.L.size())
      return false;
    if (a.Tmax && (a.Tmax->size() != b.Tmax->size() || *a.Tmax != *b.Tmax)) return false;
    return a.G == b.G && a.N == b.N && a.Pmax == b.Pmax && a.L == b.L;
  }
};

struct PowerAllocation {
  Vec P;
};

struct LinkState {
  Vec S;
  Vec R;
  Vec T;
};

/// Rate that a user needs to meet completion time `T` for `L` bits.
inline double ideal_rate(double L, double T) { return L / T; }

/// Shortest completion time user i can reach: full power, no interference.
inline double interference_free_time(const NetworkInstance& inst, int i) {
  return inst.L(i) / std::log2(1.0 + inst.G(i, i) * inst.Pmax(i) / inst.N(i));
}

inline void check_dimensions(const NetworkInstance& inst) {
  const auto M = inst.N.size();
  require(M >= 1, ErrorCode::dimension_mismatch, "instance needs at least one user", "M");
  require(inst.G.rows() == M && inst.G.cols() == M, ErrorCode::dimension_mismatch,
          "G must be M x M", "G");
  require(inst.Pmax.size() == M, ErrorCode::dimension_mismatch, "Pmax must have M entries", "Pmax");
  require(inst.L.size() == M, ErrorCode::dimension_mismatch, "L must have M entries", "L");
  if (inst.Tmax)
    require(inst.Tmax->size() == M, ErrorCode::dimension_mismatch, "Tmax must have M entries",
            "Tmax");
}

/// Throws on any violated invariant. A completion-time cap that cannot be met
/// even without interference is rejected here rather than at solve time.
inline void validate(const NetworkInstance& inst) {
  check_dimensions(inst);
  const int M = inst.M();
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      const std::string f = "G[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      require(std::isfinite(inst.G(i, j)) && inst.G(i, j) >= 0, ErrorCode::invalid_argument,
              "gains must be finite and nonnegative", f);
    }
    require(inst.G(i, i) > 0, ErrorCode::invalid_argument, "direct gain must be positive",
            "G[" + std::to_string(i) + "][" + std::to_string(i) + "]");
    const auto idx = "[" + std::to_string(i) + "]";
    require(std::isfinite(inst.N(i)) && inst.N(i) > 0, ErrorCode::invalid_argument,
            "noise power must be positive", "N" + idx);
    require(std::isfinite(inst.Pmax(i)) && inst.Pmax(i) > 0, ErrorCode::invalid_argument,
            "power cap must be positive", "Pmax" + idx);
    require(std::isfinite(inst.L(i)) && inst.L(i) > 0, ErrorCode::invalid_argument,
            "packet length must be positive", "L" + idx);
    if (inst.Tmax) {
      const double cap = (*inst.Tmax)(i);
      require(cap > 0, ErrorCode::invalid_argument, "completion-time cap must be positive",
              "Tmax" + idx);
      require(cap > interference_free_time(inst, i), ErrorCode::infeasible,
              "completion-time cap is below the interference-free completion time of user " +
                  std::to_string(i),
              "Tmax" + idx);
    }
  }
}

/// S_i = G_ii P_i / (N_i + sum_{j != i} G_ij P_j).
inline Vec sinr(const NetworkInstance& inst, const PowerAllocation& alloc) {
  check_dimensions(inst);
  const Vec& P = alloc.P;
  require(P.size() == inst.N.size(), ErrorCode::dimension_mismatch,
          "power vector must have M entries", "P");
  const int M = inst.M();
  Vec S(M);
  for (int i = 0; i < M; ++i) {
    double interference = inst.N(i);
    for (int j = 0; j < M; ++j)
      if (j != i) interference += inst.G(i, j) * P(j);
    S(i) = inst.G(i, i) * P(i) / interference;
  }
  return S;
}

inline Vec rate(const Vec& S) {
  Vec R(S.size());
  for (Eigen::Index i = 0; i < S.size(); ++i) {
    require(S(i) >= 0, ErrorCode::invalid_argument, "SINR must be nonnegative",
            "S[" + std::to_string(i) + "]");
    R(i) = std::log2(1.0 + S(i));
  }
  return R;
}

inline Vec completion_time(const Vec& L, const Vec& R) {
  require(L.size() == R.size(), ErrorCode::dimension_mismatch, "L and R must have equal length");
  Vec T(L.size());
  for (Eigen::Index i = 0; i < L.size(); ++i)
    T(i) = R(i) > 0 ? L(i) / R(i) : kInfiniteTime;
  return T;
}

inline LinkState link_state(const NetworkInstance& inst, const PowerAllocation& alloc) {
  LinkState st;
  st.S = sinr(inst, alloc);
  st.R = rate(st.S);
  st.T = completion_time(inst.L, st.R);
  return st;
}

}  // namespace ctpc
