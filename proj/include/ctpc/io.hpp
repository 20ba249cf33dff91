#pragma once

// JSON serialization for every public value type. Infinite values are written
// as the strings "inf" / "-inf". Power and noise fields accept linear arrays,
// {"dB": [...]} objects, or sibling "<key>_dB" arrays; output is always linear
// and tagged "units": "linear".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctpc/costs.hpp"
#include "ctpc/error.hpp"
#include "ctpc/fading.hpp"
#include "ctpc/model.hpp"
#include "ctpc/region.hpp"
#include "ctpc/robust.hpp"
#include "ctpc/solver.hpp"

namespace ctpc::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

inline json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string join(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

inline double read_number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  fail(ErrorCode::parse_error, "expected a number", path);
}

inline const json& at(const json& j, const std::string& key, const std::string& path) {
  require(j.is_object(), ErrorCode::parse_error, "expected an object", path);
  const auto it = j.find(key);
  require(it != j.end(), ErrorCode::parse_error, "missing required field", join(path, key));
  return *it;
}

inline bool has(const json& j, const std::string& key) { return j.is_object() && j.contains(key); }

inline json vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

inline Vec read_vec(const json& j, const std::string& path) {
  require(j.is_array(), ErrorCode::parse_error, "expected an array", path);
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(j[i], join(path, i));
  return v;
}

inline json mat(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    a.push_back(row);
  }
  return a;
}

inline Mat read_mat(const json& j, const std::string& path) {
  require(j.is_array(), ErrorCode::parse_error, "expected an array of rows", path);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  Mat m(rows, cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = read_vec(j[r], join(path, r));
    require(row.size() == cols, ErrorCode::parse_error, "rows must have equal length", join(path, r));
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

/// Linear array, {"dB": [...]}, or a sibling "<key>_dB" array.
inline Vec read_power(const json& parent, const std::string& key, const std::string& path) {
  const std::string db_key = key + "_dB";
  if (has(parent, db_key)) {
    require(!has(parent, key), ErrorCode::parse_error, "give either " + key + " or " + db_key,
            join(path, key));
    return read_vec(parent.at(db_key), join(path, db_key)).unaryExpr([](double d) { return db_to_linear(d); });
  }
  const json& j = at(parent, key, path);
  if (j.is_object()) {
    const json& db = at(j, "dB", join(path, key));
    return read_vec(db, join(join(path, key), "dB")).unaryExpr([](double d) { return db_to_linear(d); });
  }
  return read_vec(j, join(path, key));
}

inline void check_m(const json& j, int M, const std::string& path) {
  if (!has(j, "M")) return;
  require(j.at("M").is_number_integer() && j.at("M").get<int>() == M, ErrorCode::parse_error,
          "M does not match the data", join(path, "M"));
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

inline json to_json(const NetworkInstance& inst) {
  json j{{"units", "linear"}, {"M", inst.M()}, {"G", mat(inst.G)}, {"N", vec(inst.N)},
         {"Pmax", vec(inst.Pmax)}, {"L", vec(inst.L)}};
  if (inst.Tmax) j["Tmax"] = vec(*inst.Tmax);
  return j;
}

inline NetworkInstance instance_from_json(const json& j, const std::string& path = "") {
  NetworkInstance inst;
  inst.G = read_mat(at(j, "G", path), join(path, "G"));
  inst.N = read_power(j, "N", path);
  inst.Pmax = read_power(j, "Pmax", path);
  inst.L = read_vec(at(j, "L", path), join(path, "L"));
  if (has(j, "Tmax") && !j.at("Tmax").is_null()) inst.Tmax = read_vec(j.at("Tmax"), join(path, "Tmax"));
  check_m(j, static_cast<int>(inst.G.rows()), path);
  validate(inst);
  return inst;
}

// ---------------------------------------------------------------------------
// costs
// ---------------------------------------------------------------------------

inline json to_json(const CostSpec& spec) {
  json j{{"kind", kind_name(spec)}};
  std::visit(
      [&j](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WeightedSum>) j["w"] = vec(k.w);
        else if constexpr (std::is_same_v<K, SumRLargest>) j["r"] = k.r;
        else if constexpr (std::is_same_v<K, PNorm>) j["p"] = number(k.p);
      },
      spec.kind);
  if (spec.lengths.size() > 0) j["L"] = vec(spec.lengths);
  return j;
}

inline CostSpec cost_from_json(const json& j, const std::string& path = "") {
  const json& kind = at(j, "kind", path);
  require(kind.is_string(), ErrorCode::parse_error, "kind must be a string", join(path, "kind"));
  const auto& k = kind.get_ref<const std::string&>();
  CostSpec spec;
  if (k == "weighted_sum") {
    spec = CostSpec::weighted_sum(read_vec(at(j, "w", path), join(path, "w")));
  } else if (k == "max") {
    spec = CostSpec::max();
  } else if (k == "sum_r_largest") {
    const json& r = at(j, "r", path);
    require(r.is_number_integer(), ErrorCode::parse_error, "r must be an integer", join(path, "r"));
    spec = CostSpec::sum_r_largest(r.get<int>());
  } else if (k == "p_norm") {
    spec = CostSpec::p_norm(read_number(at(j, "p", path), join(path, "p")));
  } else {
    fail(ErrorCode::parse_error, "unknown cost kind '" + k + "'", join(path, "kind"));
  }
  if (has(j, "L")) spec.lengths = read_vec(j.at("L"), join(path, "L"));
  return spec;
}

// ---------------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------------

inline json to_json(const SolveOptions& o) {
  return json{{"t0", o.barrier.t0},
              {"mu", o.barrier.mu},
              {"newton_tol", o.barrier.newton_tol},
              {"gap_tol", o.barrier.gap_tol},
              {"max_outer", o.barrier.max_outer},
              {"max_newton", o.barrier.max_newton},
              {"alpha", o.barrier.alpha},
              {"beta", o.barrier.beta},
              {"init_margin", o.init_margin},
              {"power_floor", o.power_floor}};
}

inline SolveOptions options_from_json(const json& j, const std::string& path = "") {
  require(j.is_object(), ErrorCode::parse_error, "expected an object", path);
  SolveOptions o;
  static const char* known[] = {"t0", "mu", "newton_tol", "gap_tol", "max_outer", "max_newton",
                                "alpha", "beta", "init_margin", "power_floor"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      fail(ErrorCode::parse_error, "unknown solver option", join(path, key));
    (void)value;
  }
  auto num = [&](const char* key, double& dst) {
    if (has(j, key)) dst = read_number(j.at(key), join(path, key));
  };
  auto integer = [&](const char* key, int& dst) {
    if (!has(j, key)) return;
    require(j.at(key).is_number_integer(), ErrorCode::parse_error, "expected an integer", join(path, key));
    dst = j.at(key).get<int>();
  };
  num("t0", o.barrier.t0);
  num("mu", o.barrier.mu);
  num("newton_tol", o.barrier.newton_tol);
  num("gap_tol", o.barrier.gap_tol);
  integer("max_outer", o.barrier.max_outer);
  integer("max_newton", o.barrier.max_newton);
  num("alpha", o.barrier.alpha);
  num("beta", o.barrier.beta);
  num("init_margin", o.init_margin);
  num("power_floor", o.power_floor);
  o.validate();
  return o;
}

inline json to_json(const Certificate& c) {
  json clamp = json::array();
  for (bool b : c.clamp_active) clamp.push_back(b);
  return json{{"status", c.status},
              {"max_violation", number(c.max_violation)},
              {"gap", number(c.gap)},
              {"barrier_objective", number(c.barrier_objective)},
              {"outer_iterations", c.outer_iterations},
              {"newton_iterations", c.newton_iterations},
              {"phase_one_iterations", c.phase_one_iterations},
              {"phase_one", c.phase_one},
              {"clamp_active", clamp}};
}

inline Certificate certificate_from_json(const json& j, const std::string& path = "") {
  Certificate c;
  c.status = at(j, "status", path).get<std::string>();
  c.max_violation = read_number(at(j, "max_violation", path), join(path, "max_violation"));
  c.gap = read_number(at(j, "gap", path), join(path, "gap"));
  c.barrier_objective = read_number(at(j, "barrier_objective", path), join(path, "barrier_objective"));
  c.outer_iterations = at(j, "outer_iterations", path).get<int>();
  c.newton_iterations = at(j, "newton_iterations", path).get<int>();
  c.phase_one_iterations = at(j, "phase_one_iterations", path).get<int>();
  c.phase_one = at(j, "phase_one", path).get<bool>();
  for (const auto& b : at(j, "clamp_active", path)) c.clamp_active.push_back(b.get<bool>());
  return c;
}

inline json to_json(const TransformedPoint& x) {
  return json{{"Stilde", vec(x.Stilde)}, {"Ptilde", vec(x.Ptilde)}, {"T", vec(x.T)}, {"aux", vec(x.aux)}};
}

inline TransformedPoint transformed_from_json(const json& j, const std::string& path = "") {
  TransformedPoint x;
  x.Stilde = read_vec(at(j, "Stilde", path), join(path, "Stilde"));
  x.Ptilde = read_vec(at(j, "Ptilde", path), join(path, "Ptilde"));
  x.T = read_vec(at(j, "T", path), join(path, "T"));
  x.aux = read_vec(at(j, "aux", path), join(path, "aux"));
  return x;
}

inline json to_json(const Solution& s) {
  return json{{"units", "linear"},
              {"P", vec(s.P)},
              {"S", vec(s.S)},
              {"R", vec(s.R)},
              {"T", vec(s.T)},
              {"cost", number(s.cost)},
              {"transformed", to_json(s.transformed)},
              {"certificate", to_json(s.certificate)}};
}

inline Solution solution_from_json(const json& j, const std::string& path = "") {
  Solution s;
  s.P = read_vec(at(j, "P", path), join(path, "P"));
  s.S = read_vec(at(j, "S", path), join(path, "S"));
  s.R = read_vec(at(j, "R", path), join(path, "R"));
  s.T = read_vec(at(j, "T", path), join(path, "T"));
  s.cost = read_number(at(j, "cost", path), join(path, "cost"));
  s.transformed = transformed_from_json(at(j, "transformed", path), join(path, "transformed"));
  s.certificate = certificate_from_json(at(j, "certificate", path), join(path, "certificate"));
  return s;
}

// ---------------------------------------------------------------------------
// fading
// ---------------------------------------------------------------------------

inline json to_json(const FadingStates& fs) {
  json states = json::array();
  for (const auto& G : fs.states) states.push_back(json{{"G", mat(G)}});
  return json{{"units", "linear"}, {"probs", vec(fs.probs)}, {"states", states},
              {"N", vec(fs.N)},     {"Pmax", vec(fs.Pmax)},   {"L", vec(fs.L)}};
}

inline FadingStates fading_from_json(const json& j, const std::string& path = "") {
  FadingStates fs;
  fs.probs = read_vec(at(j, "probs", path), join(path, "probs"));
  const json& states = at(j, "states", path);
  require(states.is_array(), ErrorCode::parse_error, "states must be an array", join(path, "states"));
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto sp = join(join(path, "states"), s);
    fs.states.push_back(read_mat(states[s].is_object() ? at(states[s], "G", sp) : states[s], join(sp, "G")));
  }
  fs.N = read_power(j, "N", path);
  fs.Pmax = read_power(j, "Pmax", path);
  fs.L = read_vec(at(j, "L", path), join(path, "L"));
  validate(fs);
  return fs;
}

inline json to_json(const AdaptiveSolution& a) {
  json P = json::array(), T = json::array();
  for (const auto& p : a.P) P.push_back(vec(p));
  for (const auto& t : a.T) T.push_back(vec(t));
  return json{{"units", "linear"},
              {"mode", to_string(a.mode)},
              {"objective_kind", to_string(a.objective_kind)},
              {"P", P},
              {"T", T},
              {"expected_T", vec(a.expected_T)},
              {"objective", number(a.objective)},
              {"certificate", to_json(a.certificate)}};
}

inline AdaptiveSolution adaptive_from_json(const json& j, const std::string& path = "") {
  AdaptiveSolution a;
  const auto mode = at(j, "mode", path).get<std::string>();
  require(mode == "average" || mode == "short_term", ErrorCode::parse_error, "unknown mode",
          join(path, "mode"));
  a.mode = mode == "average" ? PowerMode::average : PowerMode::short_term;
  const auto kind = at(j, "objective_kind", path).get<std::string>();
  require(kind == to_string(FadingObjective::cost_of_expectation) ||
              kind == to_string(FadingObjective::expected_cost),
          ErrorCode::parse_error, "unknown objective kind", join(path, "objective_kind"));
  a.objective_kind = kind == to_string(FadingObjective::expected_cost) ? FadingObjective::expected_cost
                                                                        : FadingObjective::cost_of_expectation;
  const json& P = at(j, "P", path);
  for (std::size_t s = 0; s < P.size(); ++s) a.P.push_back(read_vec(P[s], join(join(path, "P"), s)));
  const json& T = at(j, "T", path);
  for (std::size_t s = 0; s < T.size(); ++s) a.T.push_back(read_vec(T[s], join(join(path, "T"), s)));
  a.expected_T = read_vec(at(j, "expected_T", path), join(path, "expected_T"));
  a.objective = read_number(at(j, "objective", path), join(path, "objective"));
  a.certificate = certificate_from_json(at(j, "certificate", path), join(path, "certificate"));
  return a;
}

// ---------------------------------------------------------------------------
// region
// ---------------------------------------------------------------------------

inline json to_json(const RegionTrace& t) {
  json entries = json::array();
  for (const auto& e : t.entries) {
    json je{{"index", e.index}, {"theta", number(e.theta)}, {"w", vec(e.w)}, {"ok", e.ok}};
    if (e.ok) {
      je["T"] = vec(e.T);
      je["R"] = vec(e.R);
      je["cost"] = number(e.cost);
    } else {
      je["error"] = e.error;
    }
    entries.push_back(je);
  }
  return json{{"fingerprint", t.fingerprint}, {"entries", entries}};
}

inline RegionTrace region_from_json(const json& j, const std::string& path = "") {
  RegionTrace t;
  t.fingerprint = at(j, "fingerprint", path).get<std::string>();
  const json& entries = at(j, "entries", path);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto p = join(join(path, "entries"), k);
    const json& je = entries[k];
    RegionEntry e;
    e.index = at(je, "index", p).get<int>();
    e.theta = read_number(at(je, "theta", p), join(p, "theta"));
    e.w = read_vec(at(je, "w", p), join(p, "w"));
    e.ok = at(je, "ok", p).get<bool>();
    if (e.ok) {
      e.T = read_vec(at(je, "T", p), join(p, "T"));
      e.R = read_vec(at(je, "R", p), join(p, "R"));
      e.cost = read_number(at(je, "cost", p), join(p, "cost"));
    } else {
      e.error = at(je, "error", p).get<std::string>();
    }
    t.entries.push_back(std::move(e));
  }
  return t;
}

// ---------------------------------------------------------------------------
// robust
// ---------------------------------------------------------------------------

inline json to_json(const Marginal& m) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Rayleigh>) return json{{"kind", "rayleigh"}, {"mean", k.mean}};
        else if constexpr (std::is_same_v<K, Nakagami>) return json{{"kind", "nakagami"}, {"m", k.m}, {"mean", k.mean}};
        else return json{{"kind", "lognormal"}, {"mu", k.mu}, {"sigma", k.sigma}};
      },
      m);
}

inline Marginal marginal_from_json(const json& j, const std::string& path) {
  const auto kind = at(j, "kind", path).get<std::string>();
  auto num = [&](const char* key) { return read_number(at(j, key, path), join(path, key)); };
  if (kind == "rayleigh") return Rayleigh{num("mean")};
  if (kind == "nakagami") return Nakagami{num("m"), num("mean")};
  if (kind == "lognormal") return LogNormal{num("mu"), num("sigma")};
  fail(ErrorCode::parse_error, "unknown distribution kind '" + kind + "'", join(path, "kind"));
}

inline json to_json(const ChannelDistribution& d) {
  json rows = json::array();
  for (const auto& row : d.entries) {
    json r = json::array();
    for (const auto& m : row) r.push_back(to_json(m));
    rows.push_back(r);
  }
  return rows;
}

inline ChannelDistribution distribution_from_json(const json& j, const std::string& path = "") {
  require(j.is_array(), ErrorCode::parse_error, "distribution must be an array of rows", path);
  ChannelDistribution d;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto rp = join(path, i);
    require(j[i].is_array(), ErrorCode::parse_error, "distribution row must be an array", rp);
    d.entries.emplace_back();
    for (std::size_t k = 0; k < j[i].size(); ++k) d.entries.back().push_back(marginal_from_json(j[i][k], join(rp, k)));
  }
  validate(d);
  return d;
}

inline json to_json(const OutageSpec& q) { return json{{"q", vec(q.q)}}; }

inline OutageSpec outage_from_json(const json& j, const std::string& path = "") {
  return OutageSpec{read_vec(at(j, "q", path), join(path, "q"))};
}

/// Robust input document: {"N", "Pmax", "L", "Tmax"?, "distribution": [[...]], "q": [...]}
/// or with "outage": {"q": [...]}.
struct RobustInput {
  RobustProblem problem;
  ChannelDistribution distribution;
  OutageSpec outage;
};

inline RobustInput robust_input_from_json(const json& j, const std::string& path = "") {
  RobustInput in;
  in.problem.N = read_power(j, "N", path);
  in.problem.Pmax = read_power(j, "Pmax", path);
  in.problem.L = read_vec(at(j, "L", path), join(path, "L"));
  if (has(j, "Tmax") && !j.at("Tmax").is_null()) in.problem.Tmax = read_vec(j.at("Tmax"), join(path, "Tmax"));
  in.distribution = distribution_from_json(at(j, "distribution", path), join(path, "distribution"));
  if (has(j, "outage")) in.outage = outage_from_json(j.at("outage"), join(path, "outage"));
  else in.outage = OutageSpec{read_vec(at(j, "q", path), join(path, "q"))};
  check_m(j, in.distribution.M(), path);
  return in;
}

inline json to_json(const RobustInput& in) {
  json j{{"units", "linear"},
         {"N", vec(in.problem.N)},
         {"Pmax", vec(in.problem.Pmax)},
         {"L", vec(in.problem.L)},
         {"distribution", to_json(in.distribution)},
         {"outage", to_json(in.outage)}};
  if (in.problem.Tmax) j["Tmax"] = vec(*in.problem.Tmax);
  return j;
}

/// Robust knobs share the options document with the solver options.
inline RobustOptions robust_options_from_json(const json& j, const std::string& path = "") {
  require(j.is_object(), ErrorCode::parse_error, "expected an object", path);
  static const char* robust_keys[] = {"samples", "tau0", "tau_decay", "tau_min", "seed",
                                      "audit_samples", "probe_trials"};
  json solver = json::object();
  RobustOptions o;
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(robust_keys), std::end(robust_keys), key) == std::end(robust_keys)) {
      solver[key] = value;
      continue;
    }
    const auto p = join(path, key);
    if (key == "tau0") o.tau0 = read_number(value, p);
    else if (key == "tau_decay") o.tau_decay = read_number(value, p);
    else if (key == "tau_min") o.tau_min = read_number(value, p);
    else {
      require(value.is_number_integer() && value.get<long long>() >= 0, ErrorCode::parse_error,
              "expected a nonnegative integer", p);
      const auto n = value.get<long long>();
      if (key == "samples") o.samples = n;
      else if (key == "seed") o.seed = static_cast<std::uint64_t>(n);
      else if (key == "audit_samples") o.audit_samples = n;
      else o.probe_trials = n;
    }
  }
  o.solve = options_from_json(solver, path);
  return o;
}

inline json to_json(const RobustOptions& o) {
  json j = to_json(o.solve);
  j["samples"] = o.samples;
  j["tau0"] = o.tau0;
  j["tau_decay"] = o.tau_decay;
  j["tau_min"] = o.tau_min;
  j["seed"] = o.seed;
  j["audit_samples"] = o.audit_samples;
  j["probe_trials"] = o.probe_trials;
  return j;
}

inline json to_json(const ReliabilityEstimate& e) {
  return json{{"value", number(e.value)}, {"std_error", number(e.std_error)},
              {"samples", e.samples},     {"estimator", e.estimator}};
}

inline ReliabilityEstimate estimate_from_json(const json& j, const std::string& path = "") {
  ReliabilityEstimate e;
  e.value = read_number(at(j, "value", path), join(path, "value"));
  e.std_error = read_number(at(j, "std_error", path), join(path, "std_error"));
  e.samples = at(j, "samples", path).get<long long>();
  e.estimator = at(j, "estimator", path).get<std::string>();
  return e;
}

inline json to_json(const RobustSolution& r) {
  json audit = json::array();
  for (const auto& a : r.audit) {
    audit.push_back(json{{"user", a.user},
                         {"target_sinr", number(a.target_sinr)},
                         {"required", number(a.required)},
                         {"model_value", number(a.model_value)},
                         {"exact_saa", number(a.exact_saa)},
                         {"monte_carlo", to_json(a.monte_carlo)},
                         {"satisfied", a.satisfied},
                         {"method", a.method}});
  }
  json j = to_json(r.solution);
  j["reliability_audit"] = audit;
  j["hypothesis_verified"] = r.hypothesis_verified;
  j["final_tau"] = number(r.final_tau);
  return j;
}

inline RobustSolution robust_solution_from_json(const json& j, const std::string& path = "") {
  RobustSolution r;
  r.solution = solution_from_json(j, path);
  const json& audit = at(j, "reliability_audit", path);
  for (std::size_t k = 0; k < audit.size(); ++k) {
    const auto p = join(join(path, "reliability_audit"), k);
    const json& ja = audit[k];
    ReliabilityAudit a;
    a.user = at(ja, "user", p).get<int>();
    a.target_sinr = read_number(at(ja, "target_sinr", p), join(p, "target_sinr"));
    a.required = read_number(at(ja, "required", p), join(p, "required"));
    a.model_value = read_number(at(ja, "model_value", p), join(p, "model_value"));
    a.exact_saa = read_number(at(ja, "exact_saa", p), join(p, "exact_saa"));
    a.monte_carlo = estimate_from_json(at(ja, "monte_carlo", p), join(p, "monte_carlo"));
    a.satisfied = at(ja, "satisfied", p).get<bool>();
    a.method = at(ja, "method", p).get<std::string>();
    r.audit.push_back(std::move(a));
  }
  r.hypothesis_verified = at(j, "hypothesis_verified", path).get<bool>();
  r.final_tau = read_number(at(j, "final_tau", path), join(path, "final_tau"));
  return r;
}

// ---------------------------------------------------------------------------
// Errors and files
// ---------------------------------------------------------------------------

inline json error_json(const Error& e) {
  json j{{"error", to_string(e.code())}, {"message", e.what()}};
  if (!e.field().empty()) j["field"] = e.field();
  if (const auto* sf = dynamic_cast<const SolveFailure*>(&e)) j["certificate"] = to_json(sf->certificate());
  return j;
}

/// Parses text; syntax errors become parse_error with nlohmann's line/column message.
inline json parse(const std::string& text, const std::string& source = "") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse_error, e.what(), source);
  }
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::invalid_argument, "cannot open file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

/// Runs `f`, turning nlohmann type errors into parse_error at `path`.
template <class F>
auto guarded(F&& f, const std::string& path = "") -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, e.what(), path);
  }
}

}  // namespace ctpc::io
