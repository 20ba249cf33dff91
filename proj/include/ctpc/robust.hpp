#pragma once

// Outage-constrained (robust) completion-time minimization. Gains W_ij are
// random with independent per-entry marginals; user i picks an SINR target S_i
// and must keep Pr{ P_i W_ii / (N_i + sum_{j != i} P_j W_ij) > S_i } >= 1 - q_i.
//
// The reliability Phi_i is evaluated in closed form when a whole gain row is
// Rayleigh, and otherwise through a smoothed sample-average approximation on
// frozen common random numbers.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ctpc/barrier.hpp"
#include "ctpc/costs.hpp"
#include "ctpc/log.hpp"
#include "ctpc/model.hpp"
#include "ctpc/parallel.hpp"
#include "ctpc/solver.hpp"
#include "ctpc/transform.hpp"

namespace ctpc {

/// Exponentially distributed power gain (Rayleigh amplitude) with the given mean.
struct Rayleigh {
  double mean = 1;
  friend bool operator==(const Rayleigh&, const Rayleigh&) = default;
};
/// Gamma(m, mean/m) power gain (Nakagami-m amplitude).
struct Nakagami {
  double m = 1;
  double mean = 1;
  friend bool operator==(const Nakagami&, const Nakagami&) = default;
};
/// ln W ~ Normal(mu, sigma).
struct LogNormal {
  double mu = 0;
  double sigma = 1;
  friend bool operator==(const LogNormal&, const LogNormal&) = default;
};

using Marginal = std::variant<Rayleigh, Nakagami, LogNormal>;

inline double mean_of(const Marginal& d) {
  return std::visit(
      [](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LogNormal>) return std::exp(k.mu + 0.5 * k.sigma * k.sigma);
        else return k.mean;
      },
      d);
}

/// ln f_W(e^lw): log-density of the power gain evaluated at w = exp(lw).
inline double log_pdf_at_exp(const Marginal& d, double lw) {
  return std::visit(
      [lw](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        const double w = std::exp(lw);
        if constexpr (std::is_same_v<K, Rayleigh>) {
          return -std::log(k.mean) - w / k.mean;
        } else if constexpr (std::is_same_v<K, Nakagami>) {
          return k.m * std::log(k.m / k.mean) - std::lgamma(k.m) + (k.m - 1) * lw - k.m * w / k.mean;
        } else {
          const double z = (lw - k.mu) / k.sigma;
          return -lw - std::log(k.sigma) - 0.5 * std::log(2 * std::numbers::pi) - 0.5 * z * z;
        }
      },
      d);
}

template <class Engine>
double sample_gain(const Marginal& d, Engine& eng) {
  return std::visit(
      [&eng](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Rayleigh>) {
          return std::exponential_distribution<double>(1.0 / k.mean)(eng);
        } else if constexpr (std::is_same_v<K, Nakagami>) {
          return std::gamma_distribution<double>(k.m, k.mean / k.m)(eng);
        } else {
          return std::lognormal_distribution<double>(k.mu, k.sigma)(eng);
        }
      },
      d);
}

/// Independent per-entry marginals; entries[i][j] describes W_ij.
struct ChannelDistribution {
  std::vector<std::vector<Marginal>> entries;

  int M() const { return static_cast<int>(entries.size()); }
  const Marginal& at(int i, int j) const {
    return entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  static ChannelDistribution rayleigh(const Mat& mean) {
    ChannelDistribution d;
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      d.entries.emplace_back();
      for (Eigen::Index j = 0; j < mean.cols(); ++j) d.entries.back().push_back(Rayleigh{mean(i, j)});
    }
    return d;
  }

  bool row_is_rayleigh(int i) const {
    for (const auto& e : entries[static_cast<std::size_t>(i)])
      if (!std::holds_alternative<Rayleigh>(e)) return false;
    return true;
  }

  Mat mean_matrix() const {
    Mat G(M(), M());
    for (int i = 0; i < M(); ++i)
      for (int j = 0; j < M(); ++j) G(i, j) = mean_of(at(i, j));
    return G;
  }

  friend bool operator==(const ChannelDistribution&, const ChannelDistribution&) = default;
};

inline void validate(const ChannelDistribution& dist) {
  const int M = dist.M();
  require(M >= 1, ErrorCode::dimension_mismatch, "distribution needs at least one row", "entries");
  for (int i = 0; i < M; ++i) {
    require(static_cast<int>(dist.entries[static_cast<std::size_t>(i)].size()) == M,
            ErrorCode::dimension_mismatch, "distribution must be M x M",
            "entries[" + std::to_string(i) + "]");
    for (int j = 0; j < M; ++j) {
      const auto f = "entries[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      std::visit(
          [&f](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Rayleigh>) {
              require(k.mean > 0 && std::isfinite(k.mean), ErrorCode::invalid_argument,
                      "mean power must be positive", f);
            } else if constexpr (std::is_same_v<K, Nakagami>) {
              require(k.mean > 0 && std::isfinite(k.mean), ErrorCode::invalid_argument,
                      "mean power must be positive", f);
              require(k.m >= 0.5, ErrorCode::invalid_argument, "Nakagami m must be >= 0.5", f);
            } else {
              require(std::isfinite(k.mu), ErrorCode::invalid_argument, "mu must be finite", f);
              require(k.sigma > 0 && std::isfinite(k.sigma), ErrorCode::invalid_argument,
                      "sigma must be positive", f);
            }
          },
          dist.at(i, j));
    }
  }
}

struct OutageSpec {
  Vec q;
};

inline void validate(const OutageSpec& out, int M) {
  require(out.q.size() == M, ErrorCode::dimension_mismatch, "need one outage cap per user", "q");
  for (int i = 0; i < M; ++i) {
    const auto f = "q[" + std::to_string(i) + "]";
    require(out.q(i) >= 0 && out.q(i) < 1, ErrorCode::invalid_argument,
            "outage caps must lie in [0, 1)", f);
    // every shipped marginal has unbounded support, so Phi_i < 1 at any target
    require(out.q(i) > 0, ErrorCode::infeasible,
            "an outage cap of zero cannot be met under fading with unbounded support", f);
  }
}

// ---------------------------------------------------------------------------
// Reliability
// ---------------------------------------------------------------------------

struct ReliabilityEstimate {
  double value = 0;
  double std_error = 0;
  long long samples = 0;
  std::string estimator;  // "closed_form" or "monte_carlo"
};

inline constexpr long long kChunkSamples = 1 << 16;

/// Engine for chunk `chunk` of the stream identified by (seed, stream).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(chunk)};
  return std::mt19937_64(seq);
}

/// Monte Carlo estimate of Phi_i. Samples are drawn in fixed-size chunks, each
/// from its own seeded substream, so the estimate does not depend on `threads`.
inline ReliabilityEstimate reliability_mc(int i, double S, const Vec& P,
                                          const ChannelDistribution& dist, const Vec& N,
                                          long long n, std::uint64_t seed, unsigned threads = 0) {
  validate(dist);
  const int M = dist.M();
  require(i >= 0 && i < M, ErrorCode::invalid_argument, "user index out of range", "i");
  require(n >= 1, ErrorCode::invalid_argument, "need at least one sample", "samples");
  require(S > 0, ErrorCode::invalid_argument, "SINR target must be positive", "S");
  require(P.size() == M && N.size() == M, ErrorCode::dimension_mismatch,
          "power and noise vectors must have M entries");
  const auto chunks = static_cast<std::size_t>((n + kChunkSamples - 1) / kChunkSamples);
  std::vector<long long> hits(chunks, 0);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        auto eng = substream(seed, static_cast<std::uint64_t>(i), c);
        const long long begin = static_cast<long long>(c) * kChunkSamples;
        const long long end = std::min(n, begin + kChunkSamples);
        long long count = 0;
        std::vector<double> w(static_cast<std::size_t>(M));
        for (long long k = begin; k < end; ++k) {
          for (int j = 0; j < M; ++j) w[static_cast<std::size_t>(j)] = sample_gain(dist.at(i, j), eng);
          double interference = N(i);
          for (int j = 0; j < M; ++j)
            if (j != i) interference += P(j) * w[static_cast<std::size_t>(j)];
          if (P(i) * w[static_cast<std::size_t>(i)] / interference > S) ++count;
        }
        hits[c] = count;
      },
      threads);
  long long total = 0;
  for (long long h : hits) total += h;
  ReliabilityEstimate est;
  est.samples = n;
  est.value = static_cast<double>(total) / static_cast<double>(n);
  est.std_error = std::sqrt(est.value * (1 - est.value) / static_cast<double>(n));
  est.estimator = "monte_carlo";
  return est;
}

/// Phi_i for independent exponential power gains with means meanG:
///   exp(-S N_i / (G_ii P_i)) * prod_{j != i} (1 + S G_ij P_j / (G_ii P_i))^-1.
inline double reliability_rayleigh_closed(int i, double S, const Vec& P, const Mat& meanG,
                                          const Vec& N) {
  const auto M = meanG.rows();
  require(meanG.cols() == M && P.size() == M && N.size() == M, ErrorCode::dimension_mismatch,
          "inconsistent dimensions");
  require(i >= 0 && i < M, ErrorCode::invalid_argument, "user index out of range", "i");
  if (S <= 0) return 1.0;
  if (P(i) <= 0) return 0.0;
  const double signal = meanG(i, i) * P(i);
  double value = std::exp(-S * N(i) / signal);
  for (Eigen::Index j = 0; j < M; ++j)
    if (j != i) value /= 1.0 + S * meanG(i, j) * P(j) / signal;
  return value;
}

inline double reliability_rayleigh_closed(int i, double S, const Vec& P,
                                          const ChannelDistribution& dist, const Vec& N) {
  validate(dist);
  require(dist.row_is_rayleigh(i), ErrorCode::invalid_argument,
          "closed-form reliability requires Rayleigh marginals in the whole row", "entries");
  return reliability_rayleigh_closed(i, S, P, dist.mean_matrix(), N);
}

/// ln Phi_i in log variables (S~_i, P~), Rayleigh row. Returns -ln Phi_i as a
/// convex function: exp(y_0) + sum_j softplus(y_j) with affine y.
struct RayleighLogReliability {
  Mat A;  // rows: affine maps over [S~_i, P~_0..P~_{M-1}]
  Vec b;

  RayleighLogReliability(int i, const Mat& meanG, const Vec& N) {
    const auto M = meanG.rows();
    A = Mat::Zero(M, M + 1);
    b = Vec::Zero(M);
    const double lg = std::log(meanG(i, i));
    // row 0: noise term, rows 1..: interferers
    A(0, 0) = 1;
    A(0, 1 + i) = -1;
    b(0) = std::log(N(i)) - lg;
    Eigen::Index r = 1;
    for (Eigen::Index j = 0; j < M; ++j) {
      if (j == i) continue;
      A(r, 0) = 1;
      A(r, 1 + i) = -1;
      A(r, 1 + j) = 1;
      b(r) = std::log(meanG(i, j)) - lg;
      ++r;
    }
  }

  double neg_log(const Vec& x, Vec* grad, Mat* hess) const {
    const Vec y = A * x + b;
    const double e0 = std::exp(y(0));
    double value = e0;
    Vec g = e0 * A.row(0).transpose();
    Mat H = e0 * A.row(0).transpose() * A.row(0);
    for (Eigen::Index r = 1; r < y.size(); ++r) {
      value += softplus(y(r));
      const double s = logistic(y(r));
      if (grad || hess) g += s * A.row(r).transpose();
      if (hess) H += s * logistic(-y(r)) * A.row(r).transpose() * A.row(r);
    }
    if (grad) *grad = g;
    if (hess) *hess = H;
    return value;
  }
};

// ---------------------------------------------------------------------------
// Log-concavity probe
// ---------------------------------------------------------------------------

struct ProbeResult {
  bool pass = true;
  double worst_violation = 0;
  long long tested = 0;
  long long skipped = 0;  // density underflow
};

/// Midpoint test of concavity for g(w~) = sum_j w~_j + ln f_{W_i}(exp(w~)),
/// the log-density of the log-gains of row i. Test points are log-gain draws
/// spread by a uniform jitter of +-2 so the tails are exercised too.
inline ProbeResult log_concavity_probe(const ChannelDistribution& dist, int i, long long trials,
                                       std::uint64_t seed, double tol = 1e-9) {
  validate(dist);
  const int M = dist.M();
  require(i >= 0 && i < M, ErrorCode::invalid_argument, "user index out of range", "i");
  std::mt19937_64 eng = substream(seed, 0x10C0 + static_cast<std::uint64_t>(i), 0);
  std::uniform_real_distribution<double> jitter(-2.0, 2.0);
  auto g = [&](const Vec& lw) {
    double v = 0;
    for (int j = 0; j < M; ++j) v += lw(j) + log_pdf_at_exp(dist.at(i, j), lw(j));
    return v;
  };
  auto draw = [&] {
    Vec lw(M);
    for (int j = 0; j < M; ++j) lw(j) = std::log(sample_gain(dist.at(i, j), eng)) + jitter(eng);
    return lw;
  };
  ProbeResult res;
  for (long long k = 0; k < trials; ++k) {
    const Vec a = draw();
    const Vec b = draw();
    const double ga = g(a), gb = g(b), gm = g(0.5 * (a + b));
    if (!std::isfinite(ga) || !std::isfinite(gb) || !std::isfinite(gm)) {
      ++res.skipped;
      continue;
    }
    ++res.tested;
    res.worst_violation = std::max(res.worst_violation, 0.5 * (ga + gb) - gm);
  }
  res.pass = res.worst_violation <= tol;
  return res;
}

// ---------------------------------------------------------------------------
// Robust solve
// ---------------------------------------------------------------------------

/// Everything but the gains: those come from the distribution.
struct RobustProblem {
  Vec N;
  Vec Pmax;
  Vec L;
  std::optional<Vec> Tmax;

  int M() const { return static_cast<int>(N.size()); }
};

struct RobustOptions {
  SolveOptions solve;
  long long samples = 100000;     // SAA sample count per non-Rayleigh row
  double tau0 = 0.05;             // logistic temperature of the smoothed indicator
  double tau_decay = 0.5;         // applied after each barrier stage
  double tau_min = 1e-3;
  std::uint64_t seed = 1;
  long long audit_samples = 200000;
  long long probe_trials = 2000;
  unsigned threads = 0;
};

struct ReliabilityAudit {
  int user = 0;
  double target_sinr = 0;
  double required = 0;            // 1 - q_i
  double model_value = 0;         // closed form or smoothed SAA value used by the solver
  double exact_saa = -1;          // unsmoothed estimate on the frozen samples (SAA rows only)
  ReliabilityEstimate monte_carlo;  // fresh independent samples
  bool satisfied = false;
  std::string method;             // "closed_form" or "saa"
};

struct RobustSolution {
  Solution solution;
  std::vector<ReliabilityAudit> audit;
  bool hypothesis_verified = false;
  double final_tau = 0;
};

namespace detail {

/// Smoothed sample-average reliability for one user on frozen log-gain samples.
struct SmoothedReliability {
  int user = 0;
  int M = 0;
  Mat log_gains;  // samples x M
  double log_noise = 0;
  std::shared_ptr<double> tau;

  /// Row-local variables: [S~_i, P~_0..P~_{M-1}].
  double phi(const Vec& x, Vec* grad, Mat* hess) const {
    const double t = *tau;
    const auto n = log_gains.rows();
    const double s_t = x(0);
    double acc = 0;
    Vec g = Vec::Zero(M + 1);
    Mat H = Mat::Zero(M + 1, M + 1);
    Vec dm(M + 1);
    std::vector<double> terms(static_cast<std::size_t>(M));
    for (Eigen::Index k = 0; k < n; ++k) {
      // margin = ln W_ii + P~_i - S~_i - ln(N_i + sum_j P_j W_ij)
      double top = log_noise;
      for (int j = 0; j < M; ++j) {
        if (j == user) continue;
        terms[static_cast<std::size_t>(j)] = x(1 + j) + log_gains(k, j);
        top = std::max(top, terms[static_cast<std::size_t>(j)]);
      }
      double z = std::exp(log_noise - top);
      for (int j = 0; j < M; ++j)
        if (j != user) z += std::exp(terms[static_cast<std::size_t>(j)] - top);
      const double lse = top + std::log(z);
      const double margin = log_gains(k, user) + x(1 + user) - s_t - lse;
      const double sig = logistic(margin / t);
      acc += sig;
      if (!grad && !hess) continue;
      const double d1 = sig * logistic(-margin / t) / t;
      dm.setZero();
      dm(0) = -1;
      dm(1 + user) = 1;
      for (int j = 0; j < M; ++j)
        if (j != user) dm(1 + j) = -std::exp(terms[static_cast<std::size_t>(j)] - lse);
      g += d1 * dm;
      if (hess) {
        const double d2 = d1 * (1 - 2 * sig) / t;
        H += d2 * dm * dm.transpose();
        // margin Hessian: -(diag(pi) - pi pi^T) on the interferer block
        for (int a = 0; a < M; ++a) {
          if (a == user) continue;
          const double pa = -dm(1 + a);
          H(1 + a, 1 + a) -= d1 * pa;
          for (int b2 = 0; b2 < M; ++b2)
            if (b2 != user) H(1 + a, 1 + b2) += d1 * pa * (-dm(1 + b2));
        }
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    if (grad) *grad = g * inv_n;
    if (hess) *hess = H * inv_n;
    return acc * inv_n;
  }

  std::vector<double> sample_sinr(const Vec& P) const {
    std::vector<double> out(static_cast<std::size_t>(log_gains.rows()));
    for (Eigen::Index k = 0; k < log_gains.rows(); ++k) {
      double interference = std::exp(log_noise);
      for (int j = 0; j < M; ++j)
        if (j != user) interference += P(j) * std::exp(log_gains(k, j));
      out[static_cast<std::size_t>(k)] = P(user) * std::exp(log_gains(k, user)) / interference;
    }
    return out;
  }

  /// Unsmoothed estimate on the same samples.
  double exact(double S, const Vec& P) const {
    long long hits = 0;
    for (double s : sample_sinr(P))
      if (s > S) ++hits;
    return static_cast<double>(hits) / static_cast<double>(log_gains.rows());
  }

  /// Largest target whose unsmoothed estimate still reaches `required`.
  double max_target(double required, const Vec& P) const {
    auto s = sample_sinr(P);
    const auto n = static_cast<long long>(s.size());
    const auto need = static_cast<long long>(std::ceil(required * static_cast<double>(n) - 1e-9));
    if (need <= 0) return std::numeric_limits<double>::infinity();
    const auto pos = static_cast<std::size_t>(n - need);
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(pos), s.end());
    return s[pos] * (1 - 1e-12);
  }
};

inline Mat draw_log_gains(const ChannelDistribution& dist, int i, long long n, std::uint64_t seed) {
  const int M = dist.M();
  Mat out(n, M);
  const auto chunks = static_cast<std::size_t>((n + kChunkSamples - 1) / kChunkSamples);
  for (std::size_t c = 0; c < chunks; ++c) {
    auto eng = substream(seed, 0x5AA0 + static_cast<std::uint64_t>(i), c);
    const long long begin = static_cast<long long>(c) * kChunkSamples;
    const long long end = std::min(n, begin + kChunkSamples);
    for (long long k = begin; k < end; ++k)
      for (int j = 0; j < M; ++j) out(k, j) = std::log(sample_gain(dist.at(i, j), eng));
  }
  return out;
}

}  // namespace detail

/// Minimizes J(T) subject to T_i >= L_i h(S~_i), ln Phi_i(S~_i, P~) >= ln(1 - q_i)
/// and the power box, in the same log variables as the deterministic solver.
inline RobustSolution solve_robust(const RobustProblem& problem, const ChannelDistribution& dist,
                                   const OutageSpec& outage, const CostSpec& spec,
                                   const RobustOptions& ropts = {}) {
  validate(dist);
  const int M = dist.M();
  require(problem.N.size() == M && problem.Pmax.size() == M && problem.L.size() == M,
          ErrorCode::dimension_mismatch, "problem vectors must have M entries");
  // reuse the deterministic validation on the mean-gain instance
  const NetworkInstance mean_inst{dist.mean_matrix(), problem.N, problem.Pmax, problem.L, problem.Tmax};
  validate(NetworkInstance{mean_inst.G, mean_inst.N, mean_inst.Pmax, mean_inst.L, std::nullopt});
  if (problem.Tmax) check_dimensions(mean_inst);
  validate(outage, M);
  validate(spec, M);
  const SolveOptions& opts = ropts.solve;
  opts.validate();
  require(ropts.samples >= 1 && ropts.tau0 > 0 && ropts.tau_decay > 0 && ropts.tau_decay <= 1 &&
              ropts.tau_min > 0,
          ErrorCode::invalid_argument, "invalid smoothing options", "robust");

  RobustSolution out;
  out.hypothesis_verified = true;
  for (int i = 0; i < M; ++i) {
    const ProbeResult pr = log_concavity_probe(dist, i, ropts.probe_trials, ropts.seed);
    if (!pr.pass) {
      out.hypothesis_verified = false;
      log::warn("log-concavity probe failed for row ", i, " (violation ", pr.worst_violation,
                "); convexity of the robust program is not guaranteed");
    }
  }

  const detail::Layout lay{M};
  auto tau = std::make_shared<double>(ropts.tau0);
  std::vector<std::optional<RayleighLogReliability>> closed(static_cast<std::size_t>(M));
  std::vector<std::optional<detail::SmoothedReliability>> saa(static_cast<std::size_t>(M));
  const Mat meanG = dist.mean_matrix();

  std::vector<barrier::Row> core;
  std::vector<int> rel_vars{0};
  for (int i = 0; i < M; ++i) rel_vars.push_back(lay.p(i));
  for (int i = 0; i < M; ++i) {
    const auto u = std::to_string(i);
    const double log_req = std::log1p(-outage.q(i));
    std::vector<int> vars = rel_vars;
    vars[0] = lay.s(i);
    barrier::Row row;
    row.vars = vars;
    row.label = "reliability " + u;
    if (dist.row_is_rayleigh(i)) {
      closed[static_cast<std::size_t>(i)].emplace(i, meanG, problem.N);
      const auto* model = &*closed[static_cast<std::size_t>(i)];
      row.eval = [model, log_req](const Vec& x, Vec* g, Mat* H) { return model->neg_log(x, g, H) + log_req; };
    } else {
      detail::SmoothedReliability sr;
      sr.user = i;
      sr.M = M;
      sr.log_gains = detail::draw_log_gains(dist, i, ropts.samples, ropts.seed);
      sr.log_noise = std::log(problem.N(i));
      sr.tau = tau;
      saa[static_cast<std::size_t>(i)] = std::move(sr);
      const auto* model = &*saa[static_cast<std::size_t>(i)];
      row.eval = [model, log_req](const Vec& x, Vec* g, Mat* H) {
        Vec pg;
        Mat pH;
        const bool derivs = g || H;
        const double phi = model->phi(x, derivs ? &pg : nullptr, H ? &pH : nullptr);
        if (!(phi > 0)) return std::numeric_limits<double>::infinity();
        if (g) *g = -pg / phi;
        if (H) *H = -pH / phi + pg * pg.transpose() / (phi * phi);
        return -std::log(phi) + log_req;
      };
    }
    core.push_back(std::move(row));
    core.push_back(ct_bound_row(lay.t(i), lay.s(i), problem.L(i), "completion time " + u));
    if (problem.Tmax)
      core.push_back(barrier::linear_row({{lay.t(i), 1.0}}, (*problem.Tmax)(i), "tmax " + u));
  }
  detail::append_power_rows(core, mean_inst, opts.power_floor, [&](int i) { return lay.p(i); }, "");
  if (const auto* ws = std::get_if<WeightedSum>(&spec.kind); ws && !problem.Tmax)
    for (int i = 0; i < M; ++i)
      if (ws->w(i) == 0)
        core.push_back(barrier::linear_row(
            {{lay.t(i), 1.0}}, detail::time_horizon(mean_inst, i, opts.power_floor),
            "time horizon " + std::to_string(i)));

  auto reliability_row_value = [&](int i, const Vec& x) {
    const auto& row = core[static_cast<std::size_t>(problem.Tmax ? 3 * i : 2 * i)];
    return row.eval(barrier::detail::gather(x, row.vars), nullptr, nullptr);
  };

  // start: half power, each target backed off from the reliability boundary
  const double delta = opts.init_margin;
  Vec x0(3 * M);
  for (int i = 0; i < M; ++i) x0(lay.p(i)) = std::log(problem.Pmax(i) / 2);
  for (int i = 0; i < M; ++i) {
    double lo = -60, hi = 20;
    x0(lay.s(i)) = lo;
    require(reliability_row_value(i, x0) < 0, ErrorCode::infeasible,
            "outage cap of user " + std::to_string(i) + " cannot be met at any SINR target",
            "q[" + std::to_string(i) + "]");
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      x0(lay.s(i)) = mid;
      (reliability_row_value(i, x0) < 0 ? lo : hi) = mid;
    }
    x0(lay.s(i)) = lo - delta;
    const double need = problem.L(i) * ct_bound(x0(lay.s(i))).value;
    x0(lay.t(i)) = need * (1 + delta);
    if (problem.Tmax && x0(lay.t(i)) >= (*problem.Tmax)(i)) x0(lay.t(i)) = 0.5 * (need + (*problem.Tmax)(i));
  }

  Certificate cert;
  barrier::Program probe(3 * M);
  probe.constraints = core;
  if (!barrier::strictly_feasible(probe, x0)) {
    std::vector<barrier::Row> rows = core;
    for (int i = 0; i < M; ++i) {
      const double floor_s = std::log(detail::sinr_floor(mean_inst, i, opts.power_floor)) - 1.0;
      rows.push_back(barrier::linear_row({{lay.s(i), -1.0}}, -floor_s, "phase-one sinr floor"));
      if (!problem.Tmax)
        rows.push_back(barrier::linear_row({{lay.t(i), 1.0}},
                                           detail::time_horizon(mean_inst, i, opts.power_floor),
                                           "phase-one horizon"));
    }
    const auto p1 = barrier::phase_one(rows, 3 * M, x0, opts.barrier);
    cert.phase_one = true;
    cert.phase_one_iterations = p1.newton_iterations;
    if (!p1.feasible || !barrier::strictly_feasible(probe, p1.x)) {
      cert.status = "infeasible";
      cert.max_violation = p1.min_slack;
      throw SolveFailure(ErrorCode::infeasible, "robust program has no strictly feasible point", cert);
    }
    x0 = p1.x;
  }

  barrier::Program prog(3 * M);
  prog.constraints = std::move(core);
  LinearMap tmap(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) tmap[static_cast<std::size_t>(i)] = {{lay.t(i), 1.0}};
  const AttachedCost cost = attach_cost(prog, spec, tmap, 1.0, "cost");
  Vec x(prog.dim);
  x.head(3 * M) = x0;
  cost.initialize_aux(x, delta);

  barrier::Hooks hooks;
  bool any_saa = false;
  for (const auto& s : saa) any_saa = any_saa || s.has_value();
  if (any_saa) {
    hooks.after_stage = [&](const Vec& xs, double) {
      const double old = *tau;
      const double next = std::max(old * ropts.tau_decay, ropts.tau_min);
      if (next == old) return;
      *tau = next;
      if (!barrier::strictly_feasible(prog, xs)) *tau = old;  // keep the iterate interior
    };
  }
  const barrier::Result res = barrier::minimize(prog, x, opts.barrier, hooks);
  out.final_tau = *tau;

  Solution& sol = out.solution;
  sol.transformed.T = res.x.segment(0, M);
  sol.transformed.Stilde = res.x.segment(M, M);
  sol.transformed.Ptilde = res.x.segment(2 * M, M);
  sol.transformed.aux = res.x.tail(prog.dim - 3 * M);
  sol.P = sol.transformed.Ptilde.array().exp().matrix().cwiseMin(problem.Pmax);
  sol.S = sol.transformed.Stilde.array().exp().matrix();
  for (int i = 0; i < M; ++i) {
    // the smoothed indicator is slightly optimistic; tighten to the exact SAA count
    const auto& sr = saa[static_cast<std::size_t>(i)];
    if (!sr) continue;
    const double cap = sr->max_target(1 - outage.q(i), sol.P);
    if (sol.S(i) > cap) {
      log::info("robust: target of user ", i, " tightened from ", sol.S(i), " to ", cap);
      sol.S(i) = cap;
      sol.transformed.Stilde(i) = std::log(cap);
    }
  }
  sol.R = rate(sol.S);
  sol.T = completion_time(problem.L, sol.R);
  sol.cost = eval_cost(spec, sol.T);

  double violation = 0;
  for (int i = 0; i < M; ++i) {
    ReliabilityAudit a;
    a.user = i;
    a.target_sinr = sol.S(i);
    a.required = 1 - outage.q(i);
    if (closed[static_cast<std::size_t>(i)]) {
      a.method = "closed_form";
      a.model_value = reliability_rayleigh_closed(i, sol.S(i), sol.P, meanG, problem.N);
    } else {
      a.method = "saa";
      Vec local(M + 1);
      local(0) = sol.transformed.Stilde(i);
      local.tail(M) = sol.transformed.Ptilde;
      a.model_value = saa[static_cast<std::size_t>(i)]->phi(local, nullptr, nullptr);
      a.exact_saa = saa[static_cast<std::size_t>(i)]->exact(sol.S(i), sol.P);
    }
    a.monte_carlo = reliability_mc(i, sol.S(i), sol.P, dist, problem.N, ropts.audit_samples,
                                   ropts.seed ^ 0xA0D17ULL, ropts.threads);
    const double exact = a.method == "closed_form" ? a.model_value : a.exact_saa;
    a.satisfied = exact >= a.required - 1e-9 &&
                  a.monte_carlo.value >= a.required - 3 * a.monte_carlo.std_error - 1e-12;
    violation = std::max(violation, detail::relative_excess(a.required, exact));
    violation = std::max(violation, detail::relative_excess(sol.P(i), problem.Pmax(i)));
    if (problem.Tmax) violation = std::max(violation, detail::relative_excess(sol.T(i), (*problem.Tmax)(i)));
    out.audit.push_back(a);
  }

  cert.gap = res.gap;
  cert.barrier_objective = res.objective;
  cert.outer_iterations = res.outer_iterations;
  cert.newton_iterations = res.newton_iterations;
  cert.max_violation = violation;
  cert.clamp_active.resize(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i)
    cert.clamp_active[static_cast<std::size_t>(i)] = sol.P(i) <= detail::kClampBand * opts.power_floor * problem.Pmax(i);
  if (!res.converged) {
    cert.status = "not_converged";
    throw SolveFailure(ErrorCode::not_converged, "robust barrier solve did not converge", cert);
  }
  cert.status = "optimal";
  sol.certificate = std::move(cert);
  return out;
}

}  // namespace ctpc
