#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pgdlab/bench.hpp"
#include "pgdlab/version.hpp"

namespace {

using pgdlab::RunSpec;

struct SpecFlags {
  std::string config_path;
  int problem = 0;
  int n = 0;
  double bx = 0.0;
  double bt = 0.0;
  std::string rhs;
  std::string solver;
  int iters = 0;
  double alpha = 0.0;
  double lambda = 0.0;
  double fp_eps = 0.0;
  int fp_max = 0;
  std::string fp_stop;
  std::string fp_init;
  int expsum_terms = 0;
  bool stop_converged = false;
  std::uint64_t seed = 0;
  std::string out;
};

void add_spec_flags(CLI::App* cmd, SpecFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (same field names)");
  cmd->add_option("--problem", f.problem, "problem id: 1 or 2");
  cmd->add_option("--n", f.n, "Fourier truncation N (modes -N..N per direction)");
  cmd->add_option("--bx", f.bx, "x drift coefficient");
  cmd->add_option("--bt", f.bt, "t drift coefficient");
  cmd->add_option("--rhs", f.rhs, "smooth | counterexample | FILE");
  cmd->add_option("--solver", f.solver, "solver name");
  cmd->add_option("--iters", f.iters, "outer (rank) iterations");
  cmd->add_option("--alpha", f.alpha, "implicit-part relaxation (>= 1)");
  cmd->add_option("--lambda", f.lambda, "Riesz-surrogate damping (>= 1)");
  cmd->add_option("--fp-eps", f.fp_eps, "fixed-point change threshold");
  cmd->add_option("--fp-max", f.fp_max, "fixed-point sweep cap");
  cmd->add_option("--fp-stop", f.fp_stop, "eps_change | max_iters | whichever_first");
  cmd->add_option("--fp-init", f.fp_init, "ones | random_unit");
  cmd->add_option("--expsum-terms", f.expsum_terms, "exponential-sum terms");
  cmd->add_flag("--stop-converged", f.stop_converged,
                "cut the outer loop once the converging threshold is reached");
  cmd->add_option("--seed", f.seed, "seed for random fixed-point inits");
  cmd->add_option("--out", f.out, "output CSV path (sidecar at PATH.json)");
}

/// Builds the run spec: solver defaults, then config file, then explicit flags.
RunSpec resolve_spec(const CLI::App* cmd, const SpecFlags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (cmd->count("--config") > 0) {
    std::ifstream in(f.config_path);
    if (!in) throw pgdlab::ConfigError("cannot open config '" + f.config_path + "'");
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw pgdlab::ConfigError(std::string("bad config JSON: ") + e.what());
    }
    if (!j.is_object()) throw pgdlab::ConfigError("config must be a JSON object");
  }
  if (cmd->count("--solver") > 0) j["solver"] = f.solver;
  if (cmd->count("--problem") > 0) j["problem"] = f.problem;
  if (cmd->count("--n") > 0) j["n"] = f.n;
  if (cmd->count("--bx") > 0) j["bx"] = f.bx;
  if (cmd->count("--bt") > 0) j["bt"] = f.bt;
  if (cmd->count("--rhs") > 0) j["rhs"] = f.rhs;
  if (cmd->count("--iters") > 0) j["iters"] = f.iters;
  if (cmd->count("--alpha") > 0) j["alpha"] = f.alpha;
  if (cmd->count("--lambda") > 0) j["lambda"] = f.lambda;
  if (cmd->count("--fp-eps") > 0) j["fp-eps"] = f.fp_eps;
  if (cmd->count("--fp-max") > 0) j["fp-max"] = f.fp_max;
  if (cmd->count("--fp-stop") > 0) j["fp-stop"] = f.fp_stop;
  if (cmd->count("--fp-init") > 0) j["fp-init"] = f.fp_init;
  if (cmd->count("--expsum-terms") > 0) j["expsum-terms"] = f.expsum_terms;
  if (cmd->count("--stop-converged") > 0) j["stop-converged"] = f.stop_converged;
  if (cmd->count("--seed") > 0) j["seed"] = f.seed;
  if (cmd->count("--out") > 0) j["out"] = f.out;
  return pgdlab::run_spec_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy rank-one benchmark harness for periodic spectral problems"};
  app.set_version_flag("--version", pgdlab::kVersion);
  app.require_subcommand(1);

  SpecFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run one solver and emit a CSV trace");
  add_spec_flags(run_cmd, run_flags);

  SpecFlags sweep_flags;
  std::vector<double> b_values;
  std::vector<int> n_values;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a (b, N) grid and summarize thresholds");
  add_spec_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--b-values", b_values, "drift values (b = bx = bt)")
      ->delimiter(',');
  sweep_cmd->add_option("--n-values", n_values, "truncations N")->delimiter(',');

  SpecFlags cmp_flags;
  std::vector<std::string> solvers;
  CLI::App* cmp_cmd =
      app.add_subcommand("compare", "run several solvers on one problem");
  add_spec_flags(cmp_cmd, cmp_flags);
  cmp_cmd->add_option("--solvers", solvers, "two or more solver names")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return pgdlab::cli_run(resolve_spec(run_cmd, run_flags));
    if (sweep_cmd->parsed())
      return pgdlab::cli_sweep(resolve_spec(sweep_cmd, sweep_flags), b_values, n_values);
    if (cmp_cmd->parsed())
      return pgdlab::cli_compare(resolve_spec(cmp_cmd, cmp_flags), solvers);
  } catch (const pgdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
