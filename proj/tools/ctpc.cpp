#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "ctpc/fading.hpp"
#include "ctpc/io.hpp"
#include "ctpc/region.hpp"
#include "ctpc/robust.hpp"
#include "ctpc/solver.hpp"
#include "ctpc/verify.hpp"

namespace {

using ctpc::io::json;

struct Config {
  std::string input;
  std::string output;
  std::string cost;
  std::string opts;
  std::uint64_t seed = 1;
  long long samples = 100000;
  int weights = 33;
  std::string mode = "average";
  std::string objective = "cost_of_expectation";
  std::string strategy;
  std::string format = "csv";
  unsigned threads = 0;
};

// a value starting with '{' is inline JSON, anything else a file path
json load(const std::string& arg, const std::string& what) {
  ctpc::require(!arg.empty(), ctpc::ErrorCode::invalid_argument, what + " is required", what);
  if (arg.front() == '{') return ctpc::io::parse(arg, what);
  return ctpc::io::read_file(arg);
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output);
  ctpc::require(static_cast<bool>(out), ctpc::ErrorCode::invalid_argument, "cannot write output file",
                cfg.output);
  out << text;
}

void emit(const Config& cfg, const json& j) { emit(cfg, j.dump(2) + "\n"); }

ctpc::CostSpec cost_for(const Config& cfg, const json& input) {
  if (!cfg.cost.empty()) return ctpc::io::cost_from_json(load(cfg.cost, "--cost"), "cost");
  return ctpc::io::cost_from_json(ctpc::io::at(input, "cost", ""), "cost");
}

ctpc::SolveOptions options_for(const Config& cfg) {
  if (cfg.opts.empty()) return {};
  return ctpc::io::options_from_json(load(cfg.opts, "--opts"), "opts");
}

int run_solve(const Config& cfg) {
  const json in = load(cfg.input, "--input");
  const auto inst = ctpc::io::guarded([&] { return ctpc::io::instance_from_json(in); });
  const auto spec = ctpc::io::guarded([&] { return cost_for(cfg, in); });
  const auto sol = ctpc::solve_perfect_csi(inst, spec, options_for(cfg));
  emit(cfg, ctpc::io::to_json(sol));
  return 0;
}

int run_region(const Config& cfg) {
  const json in = load(cfg.input, "--input");
  const auto inst = ctpc::io::guarded([&] { return ctpc::io::instance_from_json(in); });
  const auto opts = options_for(cfg);
  ctpc::RegionTrace trace;
  if (ctpc::io::has(in, "weights")) {
    std::vector<ctpc::Vec> w;
    const json& jw = in.at("weights");
    for (std::size_t k = 0; k < jw.size(); ++k) w.push_back(ctpc::io::read_vec(jw[k], ctpc::io::join("weights", k)));
    trace = ctpc::trace_completion_region(inst, w, opts, cfg.threads);
  } else {
    trace = ctpc::trace_completion_region(inst, cfg.weights, opts, cfg.threads);
  }
  if (cfg.format == "json") {
    emit(cfg, ctpc::io::to_json(trace));
  } else {
    std::ostringstream os;
    ctpc::write_csv(os, trace);
    emit(cfg, os.str());
  }
  return 0;
}

int run_fading(const Config& cfg) {
  const json in = load(cfg.input, "--input");
  const auto fs = ctpc::io::guarded([&] { return ctpc::io::fading_from_json(in); });
  const auto spec = ctpc::io::guarded([&] { return cost_for(cfg, in); });
  ctpc::require(cfg.mode == "average" || cfg.mode == "short_term", ctpc::ErrorCode::invalid_argument,
                "mode must be average or short_term", "--mode");
  ctpc::require(cfg.objective == "cost_of_expectation" || cfg.objective == "expected_cost",
                ctpc::ErrorCode::invalid_argument, "objective must be cost_of_expectation or expected_cost",
                "--objective");
  const auto mode = cfg.mode == "average" ? ctpc::PowerMode::average : ctpc::PowerMode::short_term;
  const auto objective = cfg.objective == "expected_cost" ? ctpc::FadingObjective::expected_cost
                                                          : ctpc::FadingObjective::cost_of_expectation;
  auto strategy = ctpc::Strategy::joint;
  if (cfg.strategy.empty()) {
    if (objective == ctpc::FadingObjective::expected_cost && mode == ctpc::PowerMode::short_term)
      strategy = ctpc::Strategy::decomposed;
  } else {
    ctpc::require(cfg.strategy == "joint" || cfg.strategy == "decomposed", ctpc::ErrorCode::invalid_argument,
                  "strategy must be joint or decomposed", "--strategy");
    strategy = cfg.strategy == "joint" ? ctpc::Strategy::joint : ctpc::Strategy::decomposed;
  }
  const auto sol = ctpc::solve_adaptive(fs, spec, objective, mode, strategy, options_for(cfg),
                                        ctpc::kDefaultMaxStates, cfg.threads);
  emit(cfg, ctpc::io::to_json(sol));
  return 0;
}

int run_robust(const Config& cfg, bool seed_given, bool samples_given) {
  const json in = load(cfg.input, "--input");
  const auto input = ctpc::io::guarded([&] { return ctpc::io::robust_input_from_json(in); });
  const auto spec = ctpc::io::guarded([&] { return cost_for(cfg, in); });
  ctpc::RobustOptions ropts;
  if (!cfg.opts.empty()) ropts = ctpc::io::robust_options_from_json(load(cfg.opts, "--opts"), "opts");
  if (seed_given || cfg.opts.empty()) ropts.seed = cfg.seed;
  if (samples_given || cfg.opts.empty()) ropts.samples = cfg.samples;
  ropts.threads = cfg.threads;
  const auto sol = ctpc::solve_robust(input.problem, input.distribution, input.outage, spec, ropts);
  emit(cfg, ctpc::io::to_json(sol));
  return 0;
}

int run_verify(const Config& cfg) {
  std::ostringstream os;
  const int failures = ctpc::verify::run_report(ctpc::verify::acceptance_suite(), os);
  os << (failures == 0 ? "all checks passed\n" : std::to_string(failures) + " check(s) failed\n");
  emit(cfg, os.str());
  return failures == 0 ? 0 : 1;
}

int exit_code(ctpc::ErrorCode code) {
  switch (code) {
    case ctpc::ErrorCode::invalid_argument:
    case ctpc::ErrorCode::dimension_mismatch:
    case ctpc::ErrorCode::parse_error: return 2;
    case ctpc::ErrorCode::infeasible: return 3;
    case ctpc::ErrorCode::not_converged: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Completion-time optimal power control"};
  app.require_subcommand(1);
  Config cfg;

  auto common = [&cfg](CLI::App* sub, bool needs_input) {
    auto* in = sub->add_option("--input,-i", cfg.input, "input JSON file");
    if (needs_input) in->required();
    sub->add_option("--output,-o", cfg.output, "output file (default stdout)");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
  };
  auto with_cost = [&cfg](CLI::App* sub) {
    sub->add_option("--cost", cfg.cost, "cost spec JSON file or inline JSON object");
    sub->add_option("--opts", cfg.opts, "solver options JSON file or inline JSON object");
  };

  auto* solve = app.add_subcommand("solve", "optimal powers for a known gain matrix");
  common(solve, true);
  with_cost(solve);

  auto* region = app.add_subcommand("region", "trace the completion-time region");
  common(region, true);
  region->add_option("--opts", cfg.opts, "solver options JSON file or inline JSON object");
  region->add_option("--weights", cfg.weights, "number of sweep weights K (two users)")->check(CLI::PositiveNumber);
  region->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* fading = app.add_subcommand("fading", "power adaptation over discrete fading states");
  common(fading, true);
  with_cost(fading);
  fading->add_option("--mode", cfg.mode, "average or short_term");
  fading->add_option("--objective", cfg.objective, "cost_of_expectation or expected_cost");
  fading->add_option("--strategy", cfg.strategy, "joint or decomposed");

  auto* robust = app.add_subcommand("robust", "outage-constrained power control");
  common(robust, true);
  with_cost(robust);
  auto* seed_opt = robust->add_option("--seed", cfg.seed, "sampling seed");
  auto* samples_opt =
      robust->add_option("--samples", cfg.samples, "sample count for non-Rayleigh rows")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "run the oracle and property suites");
  common(verify, false);
  verify->add_option("--seed", cfg.seed, "accepted for symmetry; the suites use fixed seeds");
  verify->add_option("--samples", cfg.samples, "accepted for symmetry; the suites use fixed sample counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    if (solve->parsed()) return run_solve(cfg);
    if (region->parsed()) return run_region(cfg);
    if (fading->parsed()) return run_fading(cfg);
    if (robust->parsed()) return run_robust(cfg, seed_opt->count() > 0, samples_opt->count() > 0);
    if (verify->parsed()) return run_verify(cfg);
  } catch (const ctpc::Error& e) {
    std::cerr << ctpc::io::error_json(e).dump() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 1;
}
