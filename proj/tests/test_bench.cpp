#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <sys/resource.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pgdlab/bench.hpp"

using namespace pgdlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "pgdlab_bench_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PGDLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

// strips the trailing elapsed_ms column of a trace CSV
std::string without_elapsed(const std::string& csv) {
  std::string out;
  for (const std::string& line : lines_of(csv))
    out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

RunSpec example_spec() {
  RunSpec spec;
  spec.problem_id = 2;
  spec.n = 10;
  spec.b_x = spec.b_t = 0.5;
  spec.solver = SolverConfig::defaults_for(Algorithm::decomposition);
  spec.solver.n_outer = 40;
  spec.seed = 7;
  spec.out_path = (scratch_dir() / "example.csv").string();
  return spec;
}

}  // namespace

TEST_CASE("run spec round-trips losslessly through JSON") {
  RunSpec spec = example_spec();
  spec.rhs = "counterexample";
  spec.solver.als.init_rule = AlsInit::random_unit;
  spec.solver.als.stop_rule = AlsStop::eps_change;
  spec.solver.alpha = 2.5;
  spec.solver.lambda = 3.0;
  spec.solver.expsum_terms = 17;
  spec.solver.stop_when_converged = true;
  CHECK(run_spec_from_json(to_json(spec)) == spec);

  RunSpec other = run_spec_from_json(to_json(example_spec()));
  CHECK(other == example_spec());
  CHECK_FALSE(other == spec);
}

TEST_CASE("json keys follow the flag names") {
  const nlohmann::json j = to_json(example_spec());
  for (const char* key : {"problem", "n", "bx", "bt", "rhs", "solver", "iters",
                          "alpha", "lambda", "fp-eps", "fp-max", "expsum-terms",
                          "seed", "out"})
    CHECK(j.contains(key));
}

TEST_CASE("execute_run emits one CSV row per outer iteration") {
  RunSpec spec = example_spec();
  spec.n = 20;
  spec.solver.n_outer = 150;
  const RunArtifacts artifacts = execute_run(spec);
  const auto rows = lines_of(artifacts.csv);
  REQUIRE(rows.size() == 151);
  CHECK(rows[0] == "iter,residual_fro,error_fro,energy,fp_iters,elapsed_ms");
  CHECK(rows[1].substr(0, 2) == "1,");
  CHECK(artifacts.sidecar["classification"] == "converging");
  CHECK(artifacts.sidecar["library_version"] == "0.1.0");
}

TEST_CASE("identical specs give identical CSV bytes apart from elapsed_ms") {
  RunSpec spec = example_spec();
  spec.solver.als.init_rule = AlsInit::random_unit;
  spec.seed = 42;
  const RunArtifacts a = execute_run(spec);
  const RunArtifacts b = execute_run(spec);
  CHECK(without_elapsed(a.csv) == without_elapsed(b.csv));
}

TEST_CASE("sidecar echo re-parses to the original spec") {
  RunSpec spec = example_spec();
  const RunArtifacts artifacts = execute_run(spec);
  CHECK(run_spec_from_json(artifacts.sidecar["config"]) == spec);
}

TEST_CASE("sidecar classification matches a reclassification of the CSV column") {
  RunSpec spec = example_spec();
  spec.b_x = spec.b_t = 1.7;  // past the threshold: blows up
  spec.solver.n_outer = 400;
  const RunArtifacts artifacts = execute_run(spec);
  std::vector<double> residuals;
  const auto rows = lines_of(artifacts.csv);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto first_comma = rows[i].find(',');
    const auto second_comma = rows[i].find(',', first_comma + 1);
    residuals.push_back(
        std::stod(rows[i].substr(first_comma + 1, second_comma - first_comma - 1)));
  }
  CHECK(classification_name(classify(artifacts.sidecar["initial_residual_fro"],
                                     residuals)) ==
        artifacts.sidecar["classification"].get<std::string>());
  CHECK(artifacts.sidecar["classification"] == "blowup");
}

TEST_CASE("config validation failures") {
  RunSpec spec = example_spec();
  spec.solver.n_outer = 0;
  CHECK_THROWS_AS(validate(spec), ConfigError);
  spec = example_spec();
  spec.problem_id = 3;
  CHECK_THROWS_AS(validate(spec), ConfigError);
  spec = example_spec();
  spec.n = 0;
  CHECK_THROWS_AS(validate(spec), ConfigError);
  spec = example_spec();
  spec.solver.algorithm = Algorithm::appendix_lambda;
  spec.solver.lambda = 0.9;
  CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("rhs file grid mismatch is a config error") {
  const fs::path rhs_path = scratch_dir() / "rhs_small.txt";
  {
    std::ofstream out(rhs_path);
    out << "1 1\n";
    for (int k = -1; k <= 1; ++k)
      for (int l = -1; l <= 1; ++l) out << k << " " << l << " 1 0\n";
  }
  RunSpec spec = example_spec();
  spec.rhs = rhs_path.string();
  spec.n = 4;
  CHECK_THROWS_AS(build_problem(spec), ConfigError);
  spec.n = 1;
  CHECK(build_problem(spec).rhs(0, 0) == Complex(1.0));
}

TEST_CASE("cli run: happy path and config failures") {
  const fs::path out = scratch_dir() / "cli_run.csv";
  const std::string base = "run --problem 2 --n 8 --bx 0.5 --bt 0.5 "
                           "--solver decomposition --iters 30 --out " +
                           out.string();
  CHECK(run_cli(base) == 0);
  CHECK(fs::exists(out));
  CHECK(fs::exists(out.string() + ".json"));
  CHECK(lines_of(slurp(out)).size() == 31);

  CHECK(run_cli("run --problem 2 --n 8 --iters 0 --solver decomposition --out " +
                (scratch_dir() / "x.csv").string()) == 2);
  CHECK(run_cli("run --problem 2 --n 8 --iters 5 --solver nope --out " +
                (scratch_dir() / "x.csv").string()) == 2);
  CHECK(run_cli("run --problem 7 --n 8 --iters 5 --solver decomposition --out " +
                (scratch_dir() / "x.csv").string()) == 2);
  CHECK(run_cli("run --problem 2 --n 8 --iters 5 --solver decomposition "
                "--rhs /nonexistent/file.txt --out " +
                (scratch_dir() / "x.csv").string()) == 2);
}

TEST_CASE("cli run: duplicate rhs file entries exit with code 2") {
  const fs::path rhs_path = scratch_dir() / "rhs_dup.txt";
  {
    std::ofstream outf(rhs_path);
    outf << "1 1\n0 0 1 0\n0 0 2 0\n";
    for (int i = 0; i < 7; ++i) outf << "1 1 0 0\n";
  }
  CHECK(run_cli("run --problem 2 --n 1 --iters 5 --solver decomposition --rhs " +
                rhs_path.string() + " --out " +
                (scratch_dir() / "dup.csv").string()) == 2);
}

TEST_CASE("cli run: blowup still exits 0") {
  const fs::path out = scratch_dir() / "cli_blowup.csv";
  CHECK(run_cli("run --problem 2 --n 8 --bx 2 --bt 2 --solver decomposition "
                "--iters 300 --out " +
                out.string()) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out.string() + ".json"));
  CHECK(j["classification"] == "blowup");
}

TEST_CASE("cli run: config file plus flag overrides") {
  const fs::path cfg_path = scratch_dir() / "cfg.json";
  const fs::path out = scratch_dir() / "cfg_run.csv";
  RunSpec spec = example_spec();
  spec.out_path = out.string();
  {
    std::ofstream outf(cfg_path);
    outf << to_json(spec).dump(2);
  }
  CHECK(run_cli("run --config " + cfg_path.string() + " --iters 12") == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out.string() + ".json"));
  CHECK(j["config"]["iters"] == 12);
  CHECK(j["config"]["bx"] == 0.5);
  CHECK(j["iterations"] == 12);
}

TEST_CASE("cli sweep: brackets and single-cell consistency") {
  const fs::path out = scratch_dir() / "sweep.csv";
  CHECK(run_cli("sweep --problem 2 --solver decomposition --iters 400 "
                "--stop-converged --b-values 1.0,2.0 --n-values 8 --out " +
                out.string()) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out.string() + ".json"));
  CHECK(j["brackets"]["8"]["largest_converging_b"] == 1.0);
  CHECK(j["brackets"]["8"]["smallest_blowup_b"] == 2.0);
  const auto rows = lines_of(slurp(out));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "b,n,final_residual_fro,classification");

  // a single (b, N) cell reproduces the plain run's sidecar fields
  const fs::path single = scratch_dir() / "sweep_single.csv";
  CHECK(run_cli("sweep --problem 2 --solver decomposition --iters 60 "
                "--b-values 0.5 --n-values 8 --out " +
                single.string()) == 0);
  const fs::path run_out = scratch_dir() / "run_single.csv";
  CHECK(run_cli("run --problem 2 --n 8 --bx 0.5 --bt 0.5 --solver decomposition "
                "--iters 60 --out " +
                run_out.string()) == 0);
  const nlohmann::json js = nlohmann::json::parse(slurp(single.string() + ".json"));
  const nlohmann::json jr = nlohmann::json::parse(slurp(run_out.string() + ".json"));
  CHECK(js["cells"][0]["final_residual_fro"] == jr["final_residual_fro"]);
  CHECK(js["cells"][0]["classification"] == jr["classification"]);

  CHECK(run_cli("sweep --problem 2 --solver decomposition --iters 10 "
                "--n-values 8 --out " +
                (scratch_dir() / "bad.csv").string()) == 2);
}

TEST_CASE("cli compare: aligned residual columns") {
  const fs::path out = scratch_dir() / "compare.csv";
  CHECK(run_cli("compare --problem 2 --n 8 --bx 0.5 --bt 0.5 --iters 25 "
                "--solvers pgd_galerkin,minimax,dual_greedy,decomposition --out " +
                out.string()) == 0);
  const auto rows = lines_of(slurp(out));
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0] == "iter,pgd_galerkin,minimax,dual_greedy,decomposition");
  const nlohmann::json j = nlohmann::json::parse(slurp(out.string() + ".json"));
  for (const char* name : {"pgd_galerkin", "minimax", "dual_greedy", "decomposition"})
    CHECK(j["solvers"].contains(name));

  CHECK(run_cli("compare --problem 2 --n 8 --iters 5 --solvers pgd_galerkin --out " +
                (scratch_dir() / "bad2.csv").string()) == 2);
}

TEST_CASE("dual-based solvers cost about twice per term") {
  // per-term cost measured as child CPU time (robust against scheduler
  // bursts, unlike wall clock); best of three repetitions per solver
  auto child_cpu_ms = [] {
    rusage ru{};
    getrusage(RUSAGE_CHILDREN, &ru);
    return 1000.0 * (double(ru.ru_utime.tv_sec) + double(ru.ru_stime.tv_sec)) +
           1e-3 * (double(ru.ru_utime.tv_usec) + double(ru.ru_stime.tv_usec));
  };
  auto cpu_of_run = [&](const std::string& solver) {
    const fs::path out = scratch_dir() / ("timing_" + solver + ".csv");
    const double before = child_cpu_ms();
    REQUIRE(run_cli("run --problem 2 --n 50 --bx 1 --bt 1 --iters 150 --solver " +
                    solver + " --out " + out.string()) == 0);
    return child_cpu_ms() - before;
  };
  double best_galerkin = 1e300;
  double best_minimax = 1e300;
  double best_dual = 1e300;
  for (int rep = 0; rep < 3; ++rep) {
    best_galerkin = std::min(best_galerkin, cpu_of_run("pgd_galerkin"));
    best_minimax = std::min(best_minimax, cpu_of_run("minimax"));
    best_dual = std::min(best_dual, cpu_of_run("dual_greedy"));
  }
  for (double cpu : {best_minimax, best_dual}) {
    const double ratio = cpu / best_galerkin;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 3.0);
  }
}

TEST_CASE("thread cap honors the environment variable") {
  setenv("PGDLAB_THREADS", "3", 1);
  CHECK(sweep_thread_cap() == 3);
  setenv("PGDLAB_THREADS", "0", 1);
  CHECK(sweep_thread_cap() >= 1);
  unsetenv("PGDLAB_THREADS");
  CHECK(sweep_thread_cap() >= 1);
}
