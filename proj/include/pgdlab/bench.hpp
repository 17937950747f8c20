#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pgdlab/problems.hpp"
#include "pgdlab/solvers.hpp"

namespace pgdlab {

/// Invalid configuration; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One benchmark run: problem, right-hand side, solver, seed, output path.
/// rhs is "smooth", "counterexample", or a path to an RHS coefficient file
/// (the two literal names take precedence over files of the same name).
struct RunSpec {
  int problem_id = 2;
  int n = 20;
  double b_x = 0.0;
  double b_t = 0.0;
  std::string rhs = "smooth";
  SolverConfig solver = SolverConfig::defaults_for(Algorithm::pgd_galerkin);
  std::uint64_t seed = 0;
  std::string out_path = "trace.csv";

  bool operator==(const RunSpec&) const;
};

/// JSON round trip uses the CLI flag names as keys.
nlohmann::json to_json(const RunSpec& spec);
RunSpec run_spec_from_json(const nlohmann::json& j);

void validate(const RunSpec& spec);
ProblemInstance build_problem(const RunSpec& spec);

struct RunArtifacts {
  RunSpec spec;
  SolveResult result;
  std::string csv;
  nlohmann::json sidecar;
};

/// Runs a spec in memory and renders its CSV trace and JSON sidecar.
RunArtifacts execute_run(const RunSpec& spec);

/// Rendered per-iteration trace; elapsed_ms is the only non-reproducible column.
std::string render_trace_csv(const ConvergenceTrace& trace);

/// CLI entry points. Write out_path (CSV) and out_path + ".json" (sidecar);
/// return the process exit code: 0 on completion (blowup included), 2 on
/// configuration errors.
int cli_run(const RunSpec& spec);
int cli_sweep(const RunSpec& base, const std::vector<double>& b_values,
              const std::vector<int>& n_values);
int cli_compare(const RunSpec& base, const std::vector<std::string>& solver_names);

/// Worker cap for sweep/compare cells: PGDLAB_THREADS, else hardware threads.
int sweep_thread_cap();

}  // namespace pgdlab
