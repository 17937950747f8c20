#include "pgdlab/bench.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <thread>
#include <utility>

#include "pgdlab/version.hpp"

namespace pgdlab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_ms(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

const char* stop_rule_name(AlsStop rule) {
  switch (rule) {
    case AlsStop::eps_change: return "eps_change";
    case AlsStop::max_iters: return "max_iters";
    case AlsStop::whichever_first: return "whichever_first";
  }
  return "unknown";
}

AlsStop parse_stop_rule(const std::string& s) {
  if (s == "eps_change") return AlsStop::eps_change;
  if (s == "max_iters") return AlsStop::max_iters;
  if (s == "whichever_first") return AlsStop::whichever_first;
  throw ConfigError("unknown fixed-point stop rule '" + s + "'");
}

const char* init_rule_name(AlsInit rule) {
  switch (rule) {
    case AlsInit::ones: return "ones";
    case AlsInit::random_unit: return "random_unit";
    case AlsInit::given: return "given";
  }
  return "unknown";
}

AlsInit parse_init_rule(const std::string& s) {
  if (s == "ones") return AlsInit::ones;
  if (s == "random_unit") return AlsInit::random_unit;
  throw ConfigError("unknown fixed-point init rule '" + s + "'");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

void write_outputs(const RunArtifacts& artifacts) {
  write_file(artifacts.spec.out_path, artifacts.csv);
  write_file(artifacts.spec.out_path + ".json", artifacts.sidecar.dump(2) + "\n");
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

struct SummaryCell {
  double b = 0.0;
  int n = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  Classification classification = Classification::bounded;
  double elapsed_ms_total = 0.0;
};

SummaryCell summarize(const RunSpec& spec, const SolveResult& result) {
  SummaryCell cell;
  cell.b = spec.b_x;
  cell.n = spec.n;
  const auto& t = result.trace;
  cell.final_residual = t.residual_fro.empty() ? t.initial_residual
                                               : t.residual_fro.back();
  cell.classification = t.classification;
  for (double ms : t.elapsed_ms) cell.elapsed_ms_total += ms;
  return cell;
}

/// Runs `count` jobs with at most sweep_thread_cap() workers.
void run_cells(int count, const std::function<void(int)>& job) {
  const int cap = std::max(1, std::min(count, sweep_thread_cap()));
  if (cap == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(cap);
  for (int w = 0; w < cap; ++w)
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
    });
  for (auto& w : workers) w.join();
}

}  // namespace

bool RunSpec::operator==(const RunSpec& other) const {
  return problem_id == other.problem_id && n == other.n && b_x == other.b_x &&
         b_t == other.b_t && rhs == other.rhs && seed == other.seed &&
         out_path == other.out_path &&
         solver.algorithm == other.solver.algorithm &&
         solver.n_outer == other.solver.n_outer && solver.alpha == other.solver.alpha &&
         solver.lambda == other.solver.lambda &&
         solver.expsum_terms == other.solver.expsum_terms &&
         solver.stop_when_converged == other.solver.stop_when_converged &&
         solver.als.eps == other.solver.als.eps &&
         solver.als.m_max == other.solver.als.m_max &&
         solver.als.stop_rule == other.solver.als.stop_rule &&
         solver.als.init_rule == other.solver.als.init_rule &&
         solver.als.seed == other.solver.als.seed;
}

nlohmann::json to_json(const RunSpec& spec) {
  nlohmann::json j;
  j["problem"] = spec.problem_id;
  j["n"] = spec.n;
  j["bx"] = spec.b_x;
  j["bt"] = spec.b_t;
  j["rhs"] = spec.rhs;
  j["solver"] = algorithm_name(spec.solver.algorithm);
  j["iters"] = spec.solver.n_outer;
  j["alpha"] = spec.solver.alpha;
  j["lambda"] = spec.solver.lambda;
  j["fp-eps"] = spec.solver.als.eps;
  j["fp-max"] = spec.solver.als.m_max;
  j["fp-stop"] = stop_rule_name(spec.solver.als.stop_rule);
  j["fp-init"] = init_rule_name(spec.solver.als.init_rule);
  j["expsum-terms"] = spec.solver.expsum_terms;
  j["stop-converged"] = spec.solver.stop_when_converged;
  j["seed"] = spec.seed;
  j["out"] = spec.out_path;
  return j;
}

RunSpec run_spec_from_json(const nlohmann::json& j) {
  RunSpec spec;
  try {
    const std::string solver_name = j.value("solver", "pgd_galerkin");
    spec.solver = SolverConfig::defaults_for(parse_algorithm(solver_name));
    spec.problem_id = j.value("problem", spec.problem_id);
    spec.n = j.value("n", spec.n);
    spec.b_x = j.value("bx", spec.b_x);
    spec.b_t = j.value("bt", spec.b_t);
    spec.rhs = j.value("rhs", spec.rhs);
    spec.solver.n_outer = j.value("iters", spec.solver.n_outer);
    spec.solver.alpha = j.value("alpha", spec.solver.alpha);
    spec.solver.lambda = j.value("lambda", spec.solver.lambda);
    spec.solver.als.eps = j.value("fp-eps", spec.solver.als.eps);
    spec.solver.als.m_max = j.value("fp-max", spec.solver.als.m_max);
    if (j.contains("fp-stop"))
      spec.solver.als.stop_rule = parse_stop_rule(j.at("fp-stop").get<std::string>());
    if (j.contains("fp-init"))
      spec.solver.als.init_rule = parse_init_rule(j.at("fp-init").get<std::string>());
    spec.solver.expsum_terms = j.value("expsum-terms", spec.solver.expsum_terms);
    spec.solver.stop_when_converged =
        j.value("stop-converged", spec.solver.stop_when_converged);
    spec.seed = j.value("seed", spec.seed);
    spec.out_path = j.value("out", spec.out_path);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return spec;
}

void validate(const RunSpec& spec) {
  if (spec.problem_id != 1 && spec.problem_id != 2)
    throw ConfigError("problem must be 1 or 2");
  if (spec.n < 1) throw ConfigError("n must be >= 1");
  if (spec.solver.n_outer < 1) throw ConfigError("iters must be >= 1");
  if (!(spec.solver.als.eps > 0.0)) throw ConfigError("fp-eps must be > 0");
  if (spec.solver.als.m_max < 1) throw ConfigError("fp-max must be >= 1");
  if (spec.solver.expsum_terms < 1) throw ConfigError("expsum-terms must be >= 1");
  if (spec.solver.als.init_rule == AlsInit::given)
    throw ConfigError("fp-init 'given' is not available from configuration");
  if ((spec.solver.algorithm == Algorithm::decomposition ||
       spec.solver.algorithm == Algorithm::decomposition_alpha ||
       spec.solver.algorithm == Algorithm::appendix_coupled) &&
      spec.solver.alpha < 1.0)
    throw ConfigError("alpha must be >= 1");
  if (spec.solver.algorithm == Algorithm::appendix_lambda && spec.solver.lambda < 1.0)
    throw ConfigError("lambda must be >= 1");
  if (spec.rhs.empty()) throw ConfigError("rhs must not be empty");
}

ProblemInstance build_problem(const RunSpec& spec) {
  validate(spec);
  const ModeGrid grid = ModeGrid::square(spec.n);
  std::optional<CoeffMatrix> rhs;
  if (spec.rhs == "smooth") {
    rhs = rhs_smooth(grid);
  } else if (spec.rhs == "counterexample") {
    rhs = rhs_counterexample(grid);
  } else {
    std::pair<ModeGrid, CoeffMatrix> loaded;
    try {
      loaded = load_rhs_file(spec.rhs);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (!(loaded.first == grid))
      throw ConfigError("rhs file grid does not match --n");
    rhs = std::move(loaded.second);
  }
  return spec.problem_id == 1
             ? assemble_problem1(grid, spec.b_x, std::move(rhs))
             : assemble_problem2(grid, spec.b_x, spec.b_t, std::move(rhs));
}

std::string render_trace_csv(const ConvergenceTrace& trace) {
  std::string csv = "iter,residual_fro,error_fro,energy,fp_iters,elapsed_ms\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    csv += std::to_string(i + 1);
    csv += ',';
    csv += fmt_double(trace.residual_fro[i]);
    csv += ',';
    csv += fmt_double(trace.error_fro[i]);
    csv += ',';
    csv += fmt_double(trace.energy[i]);
    csv += ',';
    csv += std::to_string(trace.fp_iters[i]);
    csv += ',';
    csv += fmt_ms(trace.elapsed_ms[i]);
    csv += '\n';
  }
  return csv;
}

RunArtifacts execute_run(const RunSpec& spec) {
  const ProblemInstance problem = build_problem(spec);
  SolverConfig solver_cfg = spec.solver;
  solver_cfg.als.seed = spec.seed;

  RunArtifacts artifacts;
  artifacts.spec = spec;
  artifacts.result = run_solver(problem, solver_cfg);
  artifacts.csv = render_trace_csv(artifacts.result.trace);

  const ConvergenceTrace& trace = artifacts.result.trace;
  nlohmann::json j;
  j["config"] = to_json(spec);
  j["library_version"] = kVersion;
  j["classification"] = classification_name(trace.classification);
  j["initial_residual_fro"] = trace.initial_residual;
  j["final_residual_fro"] = trace.residual_fro.empty() ? trace.initial_residual
                                                       : trace.residual_fro.back();
  j["iterations"] = trace.size();
  double total_ms = 0.0;
  for (double ms : trace.elapsed_ms) total_ms += ms;
  j["elapsed_ms_total"] = total_ms;
  if (artifacts.result.expsum_sup_error)
    j["expsum_sup_error"] = *artifacts.result.expsum_sup_error;
  if (!trace.dual_residual.empty())
    j["final_dual_residual"] = trace.dual_residual.back();
  if (!trace.dual_residual_approx.empty())
    j["final_dual_residual_approx"] = trace.dual_residual_approx.back();
  if (artifacts.result.coupled) {
    int unstable = 0;
    for (char c : artifacts.result.coupled->stabilized)
      if (!c) ++unstable;
    j["coupled_unstable_steps"] = unstable;
  }
  artifacts.sidecar = j;
  return artifacts;
}

int cli_run(const RunSpec& spec) {
  return guarded([&] {
    write_outputs(execute_run(spec));
    return 0;
  });
}

int sweep_thread_cap() {
  if (const char* env = std::getenv("PGDLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int cli_sweep(const RunSpec& base, const std::vector<double>& b_values,
              const std::vector<int>& n_values) {
  return guarded([&]() -> int {
    if (b_values.empty() || n_values.empty())
      throw ConfigError("sweep needs nonempty --b-values and --n-values");

    struct Cell {
      RunSpec spec;
      SummaryCell summary;
    };
    std::vector<Cell> cells;
    for (int n : n_values)
      for (double b : b_values) {
        Cell cell;
        cell.spec = base;
        cell.spec.n = n;
        cell.spec.b_x = b;
        cell.spec.b_t = b;
        cells.push_back(std::move(cell));
      }
    for (const Cell& c : cells) validate(c.spec);  // fail before spawning work

    std::vector<std::string> failures(cells.size());
    run_cells(static_cast<int>(cells.size()), [&](int i) {
      try {
        const RunArtifacts artifacts = execute_run(cells[i].spec);
        cells[i].summary = summarize(cells[i].spec, artifacts.result);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    });
    for (const std::string& f : failures)
      if (!f.empty()) throw std::runtime_error(f);

    std::string csv = "b,n,final_residual_fro,classification\n";
    for (const Cell& c : cells) {
      csv += fmt_double(c.summary.b);
      csv += ',';
      csv += std::to_string(c.summary.n);
      csv += ',';
      csv += fmt_double(c.summary.final_residual);
      csv += ',';
      csv += classification_name(c.summary.classification);
      csv += '\n';
    }

    nlohmann::json j;
    j["config"] = to_json(base);
    j["b_values"] = b_values;
    j["n_values"] = n_values;
    j["library_version"] = kVersion;
    nlohmann::json cells_json = nlohmann::json::array();
    for (const Cell& c : cells)
      cells_json.push_back({{"b", c.summary.b},
                            {"n", c.summary.n},
                            {"final_residual_fro", c.summary.final_residual},
                            {"classification",
                             classification_name(c.summary.classification)}});
    j["cells"] = cells_json;

    nlohmann::json brackets;
    for (int n : n_values) {
      std::optional<double> largest_conv;
      std::optional<double> smallest_blow;
      for (const Cell& c : cells) {
        if (c.summary.n != n) continue;
        if (c.summary.classification == Classification::converging &&
            (!largest_conv || c.summary.b > *largest_conv))
          largest_conv = c.summary.b;
        if (c.summary.classification == Classification::blowup &&
            (!smallest_blow || c.summary.b < *smallest_blow))
          smallest_blow = c.summary.b;
      }
      nlohmann::json entry;
      entry["largest_converging_b"] =
          largest_conv ? nlohmann::json(*largest_conv) : nlohmann::json();
      entry["smallest_blowup_b"] =
          smallest_blow ? nlohmann::json(*smallest_blow) : nlohmann::json();
      brackets[std::to_string(n)] = entry;
    }
    j["brackets"] = brackets;

    write_file(base.out_path, csv);
    write_file(base.out_path + ".json", j.dump(2) + "\n");
    return 0;
  });
}

int cli_compare(const RunSpec& base, const std::vector<std::string>& solver_names) {
  return guarded([&]() -> int {
    if (solver_names.size() < 2)
      throw ConfigError("compare needs at least two solvers");

    std::vector<RunSpec> specs;
    for (const std::string& name : solver_names) {
      RunSpec spec = base;
      const SolverConfig base_solver = base.solver;
      spec.solver = SolverConfig::defaults_for(parse_algorithm(name));
      spec.solver.n_outer = base_solver.n_outer;
      spec.solver.alpha = base_solver.alpha;
      spec.solver.lambda = base_solver.lambda;
      spec.solver.expsum_terms = base_solver.expsum_terms;
      spec.solver.stop_when_converged = base_solver.stop_when_converged;
      validate(spec);
      specs.push_back(std::move(spec));
    }

    std::vector<SolveResult> results(specs.size());
    std::vector<std::string> failures(specs.size());
    run_cells(static_cast<int>(specs.size()), [&](int i) {
      try {
        results[i] = execute_run(specs[i]).result;
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    });
    for (const std::string& f : failures)
      if (!f.empty()) throw std::runtime_error(f);

    std::size_t rows = 0;
    for (const SolveResult& r : results) rows = std::max(rows, r.trace.size());

    std::string csv = "iter";
    for (const std::string& name : solver_names) csv += "," + name;
    csv += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
      csv += std::to_string(i + 1);
      for (const SolveResult& r : results) {
        csv += ',';
        if (i < r.trace.size()) csv += fmt_double(r.trace.residual_fro[i]);
      }
      csv += '\n';
    }

    nlohmann::json j;
    j["config"] = to_json(base);
    j["library_version"] = kVersion;
    nlohmann::json per_solver;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const SummaryCell cell = summarize(specs[i], results[i]);
      nlohmann::json entry;
      entry["classification"] = classification_name(cell.classification);
      entry["final_residual_fro"] = cell.final_residual;
      entry["elapsed_ms_total"] = cell.elapsed_ms_total;
      entry["iterations"] = results[i].trace.size();
      if (results[i].trace.size() > 0)
        entry["per_term_ms"] =
            cell.elapsed_ms_total / static_cast<double>(results[i].trace.size());
      per_solver[solver_names[i]] = entry;
    }
    j["solvers"] = per_solver;

    write_file(base.out_path, csv);
    write_file(base.out_path + ".json", j.dump(2) + "\n");
    return 0;
  });
}

}  // namespace pgdlab
