#include "pgdlab/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "pgdlab/exp_sum.hpp"

namespace pgdlab {

namespace {

using Op = SeparableOperator<Complex>;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t mix_seed(std::uint64_t seed, int n) {
  // splitmix64 step, so per-term random inits are decorrelated but reproducible
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(n);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

AlsConfig als_for_step(const SolverConfig& cfg, int n) {
  AlsConfig a = cfg.als;
  if (a.init_rule == AlsInit::random_unit) a.seed = mix_seed(a.seed, n);
  return a;
}

struct StepOutcome {
  RankOnePair<Complex> term;
  AlsReport report;
};

/// Shared outer loop. `residual_form` defines the traced residual
/// F - (form) u and the energy column; `step` maps the current residual
/// matrix to the next rank-one term.
template <typename ResidualForm, typename StepFn>
SolveResult greedy_loop(const ProblemInstance& p, const SolverConfig& cfg,
                        const ResidualForm& residual_form, const CoeffMatrix& target,
                        StepFn&& step) {
  if (cfg.n_outer < 1)
    throw std::invalid_argument("solver: n_outer must be >= 1");

  SolveResult out;
  out.approx = SeparatedApprox<Complex>(p.grid);
  ConvergenceTrace& trace = out.trace;

  const CoeffMatrix& f = p.rhs;
  CoeffMatrix u = CoeffMatrix::Zero(p.grid.dim_x(), p.grid.dim_t());
  CoeffMatrix residual = f;
  trace.initial_residual = f.norm();

  for (int n = 1; n <= cfg.n_outer; ++n) {
    if (residual.norm() == 0.0) break;  // nothing left to expand
    const auto t0 = Clock::now();

    StepOutcome step_out = step(residual, n);
    out.approx.append(step_out.term);
    out.als_reports.push_back(step_out.report);
    u.noalias() += step_out.term.outer();
    residual = f - residual_form.apply(u);

    const double res_norm = residual.norm();
    trace.residual_fro.push_back(res_norm);
    trace.error_fro.push_back((u - target).norm());
    trace.energy.push_back(0.5 * std::real(frobenius_dot(residual_form.apply(u), u)) -
                           std::real(frobenius_dot(f, u)));
    trace.fp_iters.push_back(step_out.report.iterations_used);
    trace.elapsed_ms.push_back(ms_since(t0));

    if (!std::isfinite(res_norm) || res_norm > kBlowupCutoff) break;
    if (cfg.stop_when_converged &&
        res_norm < kConvergedFactor * trace.initial_residual)
      break;
  }

  trace.classification = classify(trace.initial_residual, trace.residual_fro);
  return out;
}

void require_nonzero_term(const RankOnePair<Complex>& term, const CoeffMatrix& residual,
                          double initial, int n, const char* who) {
  if (term.is_zero() && residual.norm() > 1e-12 * std::max(initial, 1.0))
    throw std::runtime_error(std::string(who) +
                             ": rank-one step collapsed to zero at outer step " +
                             std::to_string(n) + " with nonzero residual");
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::symmetric_greedy: return "symmetric_greedy";
    case Algorithm::pgd_galerkin: return "pgd_galerkin";
    case Algorithm::minres_l2: return "minres_l2";
    case Algorithm::minres_dual_exact: return "minres_dual_exact";
    case Algorithm::minres_dual_expsum: return "minres_dual_expsum";
    case Algorithm::minimax: return "minimax";
    case Algorithm::dual_greedy: return "dual_greedy";
    case Algorithm::decomposition: return "decomposition";
    case Algorithm::decomposition_alpha: return "decomposition_alpha";
    case Algorithm::appendix_coupled: return "appendix_coupled";
    case Algorithm::appendix_lambda: return "appendix_lambda";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a :
       {Algorithm::symmetric_greedy, Algorithm::pgd_galerkin, Algorithm::minres_l2,
        Algorithm::minres_dual_exact, Algorithm::minres_dual_expsum, Algorithm::minimax,
        Algorithm::dual_greedy, Algorithm::decomposition, Algorithm::decomposition_alpha,
        Algorithm::appendix_coupled, Algorithm::appendix_lambda})
    if (name == algorithm_name(a)) return a;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

SolverConfig SolverConfig::defaults_for(Algorithm a) {
  SolverConfig cfg;
  cfg.algorithm = a;
  switch (a) {
    case Algorithm::symmetric_greedy:
    case Algorithm::decomposition:
    case Algorithm::decomposition_alpha:
    case Algorithm::appendix_lambda:
      cfg.als.stop_rule = AlsStop::whichever_first;
      cfg.als.eps = 1e-8;
      cfg.als.m_max = 200;
      break;
    case Algorithm::minres_l2:
    case Algorithm::minres_dual_exact:
    case Algorithm::minres_dual_expsum:
      cfg.als.stop_rule = AlsStop::whichever_first;
      cfg.als.eps = 1e-8;
      cfg.als.m_max = 20;
      break;
    case Algorithm::pgd_galerkin:
    case Algorithm::minimax:
    case Algorithm::dual_greedy:
    case Algorithm::appendix_coupled:
      cfg.als.stop_rule = AlsStop::max_iters;
      cfg.als.m_max = 20;
      break;
  }
  return cfg;
}

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::converging: return "converging";
    case Classification::bounded: return "bounded";
    case Classification::blowup: return "blowup";
  }
  return "unknown";
}

Classification classify(double initial_residual, const std::vector<double>& residuals) {
  if (residuals.empty())
    return initial_residual == 0.0 ? Classification::converging
                                   : Classification::bounded;
  const double final_res = residuals.back();
  if (final_res == 0.0) return Classification::converging;
  if (final_res < kConvergedFactor * initial_residual) return Classification::converging;
  for (double r : residuals)
    if (!std::isfinite(r) || r > 1e3 * initial_residual) return Classification::blowup;
  return Classification::bounded;
}

SolveResult run_symmetric_greedy(const ProblemInstance& p, const SolverConfig& cfg) {
  if (!p.op_skew.is_zero())
    throw std::invalid_argument(
        "symmetric_greedy: operator has a nonzero anti-Hermitian part");
  return greedy_loop(p, cfg, p.op, oracle_solve(p).u_exact,
                     [&](const CoeffMatrix& residual, int n) {
                       auto [term, report] =
                           als_symmetric(p.op, residual, p.gram, als_for_step(cfg, n));
                       require_nonzero_term(term, residual, p.rhs.norm(), n,
                                            "symmetric_greedy");
                       return StepOutcome{std::move(term), report};
                     });
}

SolveResult run_pgd_galerkin(const ProblemInstance& p, const SolverConfig& cfg) {
  return greedy_loop(p, cfg, p.op, oracle_solve(p).u_exact,
                     [&](const CoeffMatrix& residual, int n) {
                       auto [term, report] =
                           als_galerkin(p.op, residual, als_for_step(cfg, n));
                       (void)n;  // terms are appended even when not converged
                       return StepOutcome{std::move(term), report};
                     });
}

SolveResult run_decomposition(const ProblemInstance& p, const SolverConfig& cfg) {
  if (cfg.alpha < 1.0)
    throw std::invalid_argument("decomposition: alpha must be >= 1");
  const Op form = (cfg.alpha == 1.0) ? p.op_sym : p.op_sym.scaled(Complex(cfg.alpha));
  return greedy_loop(p, cfg, p.op, oracle_solve(p).u_exact,
                     [&, form](const CoeffMatrix& residual, int n) {
                       auto [term, report] =
                           als_symmetric(form, residual, p.gram, als_for_step(cfg, n));
                       return StepOutcome{std::move(term), report};
                     });
}

SolveResult run_minres_l2(const ProblemInstance& p, const SolverConfig& cfg) {
  // the oracle, and hence every assembled problem, is diagonal; the normal
  // form |sigma|^2 is then diagonal as well
  if (!p.op.is_diagonal())
    throw std::invalid_argument("minres_l2: needs a diagonal operator symbol");
  const CoeffMatrix sigma = p.op.symbol();
  const DiagonalOperator<Complex> normal_form(sigma.cwiseAbs2().cast<Complex>());
  const CoeffMatrix sigma_conj = sigma.conjugate();
  return greedy_loop(
      p, cfg, p.op, oracle_solve(p).u_exact,
      [&, normal_form, sigma_conj](const CoeffMatrix& residual, int n) {
        const CoeffMatrix functional = sigma_conj.cwiseProduct(residual);
        auto [term, report] =
            als_symmetric(normal_form, functional, p.gram, als_for_step(cfg, n));
        return StepOutcome{std::move(term), report};
      });
}

SolveResult run_minres_dual(const ProblemInstance& p, const SolverConfig& cfg,
                            DualResidualMode mode) {
  if (!p.gram.g_v_diag)
    throw std::invalid_argument("minres_dual: needs the diagonal Riesz symbol");
  if (!p.op.is_diagonal())
    throw std::invalid_argument("minres_dual: needs a diagonal operator symbol");
  const CoeffMatrix& gv = *p.gram.g_v_diag;

  CoeffMatrix riesz_inv_symbol;
  std::optional<double> sup_err;
  if (mode == DualResidualMode::exact) {
    riesz_inv_symbol = gv.cwiseInverse();
  } else {
    if (cfg.expsum_terms < 1)
      throw std::invalid_argument("minres_dual: expsum_terms must be >= 1");
    const double lo = gv.real().minCoeff();
    const double hi = gv.real().maxCoeff();
    const ExpSumApprox sum = exp_sum_inverse(std::min(1.0, lo), cfg.expsum_terms,
                                             std::max(hi, lo + 1.0));
    riesz_inv_symbol = expsum_riesz_inverse(p.gram, sum).symbol();
    sup_err = sum.sup_rel_error;
  }

  const CoeffMatrix sigma = p.op.symbol();
  const DiagonalOperator<Complex> normal_form(
      sigma.conjugate().cwiseProduct(riesz_inv_symbol).cwiseProduct(sigma));
  const CoeffMatrix sigma_conj = sigma.conjugate();

  SolveResult out = greedy_loop(
      p, cfg, p.op, oracle_solve(p).u_exact,
      [&](const CoeffMatrix& residual, int n) {
        const CoeffMatrix functional =
            sigma_conj.cwiseProduct(riesz_inv_symbol.cwiseProduct(residual));
        auto [term, report] =
            als_symmetric(normal_form, functional, p.gram, als_for_step(cfg, n));
        return StepOutcome{std::move(term), report};
      });
  out.expsum_sup_error = sup_err;

  // Reconstruct the dual-norm residual history from the stored terms.
  CoeffMatrix u = CoeffMatrix::Zero(p.grid.dim_x(), p.grid.dim_t());
  out.trace.dual_residual.reserve(out.trace.size());
  for (std::size_t i = 0; i < out.approx.terms.size(); ++i) {
    u.noalias() += out.approx.terms[i].outer();
    const CoeffMatrix res = p.rhs - p.op.apply(u);
    out.trace.dual_residual.push_back(std::sqrt(std::max(
        0.0, std::real(frobenius_dot(res.cwiseQuotient(gv), res)))));
    if (mode == DualResidualMode::expsum)
      out.trace.dual_residual_approx.push_back(std::sqrt(std::max(
          0.0, std::real(frobenius_dot(riesz_inv_symbol.cwiseProduct(res), res)))));
  }
  return out;
}

SolveResult run_minimax(const ProblemInstance& p, const SolverConfig& cfg) {
  return greedy_loop(
      p, cfg, p.op, oracle_solve(p).u_exact,
      [&](const CoeffMatrix& residual, int n) {
        auto [primal, dual, report] =
            als_minimax(p.op, p.gram, residual, als_for_step(cfg, n));
        (void)dual;  // the dual pair is a by-product of the step
        if (report.status == AlsStatus::singular_system)
          throw std::runtime_error("minimax: singular coupled half system at outer step " +
                                   std::to_string(n));
        return StepOutcome{std::move(primal), report};
      });
}

SolveResult run_dual_greedy(const ProblemInstance& p, const SolverConfig& cfg) {
  return greedy_loop(
      p, cfg, p.op, oracle_solve(p).u_exact,
      [&](const CoeffMatrix& residual, int n) {
        auto [primal, dual, report] =
            als_dual_greedy(p.op, p.gram, residual, als_for_step(cfg, n));
        (void)dual;
        if (report.status == AlsStatus::dual_degenerate ||
            report.status == AlsStatus::singular_system)
          throw std::runtime_error(
              "dual_greedy: oblique half system singular at outer step " +
              std::to_string(n));
        return StepOutcome{std::move(primal), report};
      });
}

SolveResult run_appendix_coupled(const ProblemInstance& p, const SolverConfig& cfg) {
  if (cfg.alpha <= 0.0)
    throw std::invalid_argument("appendix_coupled: alpha must be > 0");
  SolveResult out;
  CoupledDiagnostics diag;
  {
    auto step = [&](const CoeffMatrix& residual, int n) {
      auto [primal, dual, report] =
          als_coupled(p.op, p.gram, residual, cfg.alpha, als_for_step(cfg, n));
      if (report.status == AlsStatus::singular_system)
        throw std::runtime_error("appendix_coupled: singular block system at outer step " +
                                 std::to_string(n));
      diag.stabilized.push_back(
          (report.converged || report.final_change < cfg.als.eps) ? 1 : 0);
      diag.dual_injective_norm.push_back(norm_v(dual.outer(), p.gram));
      return StepOutcome{std::move(primal), report};
    };
    out = greedy_loop(p, cfg, p.op, oracle_solve(p).u_exact, step);
  }
  out.coupled = std::move(diag);
  return out;
}

SolveResult run_appendix_lambda(const ProblemInstance& p, const SolverConfig& cfg) {
  if (cfg.lambda < 1.0)
    throw std::invalid_argument("appendix_lambda: lambda must be >= 1");
  if (!p.gram.g_v_diag)
    throw std::invalid_argument("appendix_lambda: needs the diagonal Riesz symbol");
  const Op form = (cfg.lambda == 1.0) ? p.gram.g_v
                                      : p.gram.g_v.scaled(Complex(cfg.lambda));
  // Target is the Riesz representative of the right-hand side.
  const CoeffMatrix target = p.rhs.cwiseQuotient(*p.gram.g_v_diag);
  return greedy_loop(p, cfg, p.gram.g_v, target,
                     [&, form](const CoeffMatrix& residual, int n) {
                       auto [term, report] =
                           als_symmetric(form, residual, p.gram, als_for_step(cfg, n));
                       return StepOutcome{std::move(term), report};
                     });
}

SolveResult run_solver(const ProblemInstance& p, const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::symmetric_greedy: return run_symmetric_greedy(p, cfg);
    case Algorithm::pgd_galerkin: return run_pgd_galerkin(p, cfg);
    case Algorithm::minres_l2: return run_minres_l2(p, cfg);
    case Algorithm::minres_dual_exact:
      return run_minres_dual(p, cfg, DualResidualMode::exact);
    case Algorithm::minres_dual_expsum:
      return run_minres_dual(p, cfg, DualResidualMode::expsum);
    case Algorithm::minimax: return run_minimax(p, cfg);
    case Algorithm::dual_greedy: return run_dual_greedy(p, cfg);
    case Algorithm::decomposition: {
      SolverConfig plain = cfg;
      plain.alpha = 1.0;
      return run_decomposition(p, plain);
    }
    case Algorithm::decomposition_alpha: return run_decomposition(p, cfg);
    case Algorithm::appendix_coupled: return run_appendix_coupled(p, cfg);
    case Algorithm::appendix_lambda: return run_appendix_lambda(p, cfg);
  }
  throw std::invalid_argument("run_solver: unknown algorithm");
}

}  // namespace pgdlab
