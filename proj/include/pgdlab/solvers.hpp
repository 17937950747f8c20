#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgdlab/als.hpp"
#include "pgdlab/problems.hpp"
#include "pgdlab/separated.hpp"
#include "pgdlab/types.hpp"

namespace pgdlab {

enum class Algorithm {
  symmetric_greedy,
  pgd_galerkin,
  minres_l2,
  minres_dual_exact,
  minres_dual_expsum,
  minimax,
  dual_greedy,
  decomposition,
  decomposition_alpha,
  appendix_coupled,
  appendix_lambda,
};

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct SolverConfig {
  Algorithm algorithm = Algorithm::pgd_galerkin;
  int n_outer = 100;
  double alpha = 1.0;   // relaxation of the implicit part; 1 is the plain split
  double lambda = 2.0;  // Riesz-surrogate damping, >= 1
  AlsConfig als;
  int expsum_terms = 64;
  bool stop_when_converged = false;  // cut the outer loop at the converging threshold

  /// Per-algorithm fixed-point defaults: eps-driven stopping for the
  /// energy-minimizing loops, a plain sweep cap for the others.
  static SolverConfig defaults_for(Algorithm a);
};

enum class Classification { converging, bounded, blowup };

const char* classification_name(Classification c);

/// Post-hoc label from the residual history: converging when the final
/// residual fell below 1e-6 x initial, blowup when any residual exceeded
/// 1e3 x initial, bounded otherwise.
Classification classify(double initial_residual,
                        const std::vector<double>& residuals);

/// Residual norm at which an outer loop is cut off and labeled blowup.
inline constexpr double kBlowupCutoff = 1e12;

/// Threshold used by both the classifier and stop_when_converged.
inline constexpr double kConvergedFactor = 1e-6;

struct ConvergenceTrace {
  double initial_residual = 0.0;
  std::vector<double> residual_fro;
  std::vector<double> error_fro;
  std::vector<double> energy;
  std::vector<int> fp_iters;
  std::vector<double> elapsed_ms;
  // Dual-norm residuals, recorded by the dual minimal-residual runs only:
  // the exact dual norm and, when an exponential-sum inverse is in play,
  // the approximated one it actually minimizes.
  std::vector<double> dual_residual;
  std::vector<double> dual_residual_approx;
  Classification classification = Classification::bounded;

  std::size_t size() const { return residual_fro.size(); }
};

struct CoupledDiagnostics {
  std::vector<char> stabilized;           // per outer step: fixed point settled
  std::vector<double> dual_injective_norm;  // |r~ (x) s~|_V per outer step
};

struct SolveResult {
  SeparatedApprox<Complex> approx;
  ConvergenceTrace trace;
  std::vector<AlsReport> als_reports;
  std::optional<CoupledDiagnostics> coupled;
  std::optional<double> expsum_sup_error;
};

/// Greedy rank-one loop for a Hermitian coercive operator; requires the
/// problem's anti-Hermitian part to vanish.
SolveResult run_symmetric_greedy(const ProblemInstance& p, const SolverConfig& cfg);

/// Greedy loop on the stationarity equations of the full non-symmetric form;
/// terms are appended whether or not the fixed point settled.
SolveResult run_pgd_galerkin(const ProblemInstance& p, const SolverConfig& cfg);

/// Greedy minimization of |A u - F| in the plain Frobenius norm via the
/// normal-equation form A* A.
SolveResult run_minres_l2(const ProblemInstance& p, const SolverConfig& cfg);

enum class DualResidualMode { exact, expsum };

/// Greedy minimization of the residual measured in the dual norm, i.e. on
/// A* R_V^{-1} A. The Riesz inverse is either the exact diagonal or its
/// separable exponential-sum surrogate.
SolveResult run_minres_dual(const ProblemInstance& p, const SolverConfig& cfg,
                            DualResidualMode mode);

/// Saddle-point greedy: each term is the primal part of a coupled
/// primal/dual stationarity pair.
SolveResult run_minimax(const ProblemInstance& p, const SolverConfig& cfg);

/// Two-stage greedy: a peak-direction pair in the V inner product, then the
/// primal pair tested against it.
SolveResult run_dual_greedy(const ProblemInstance& p, const SolverConfig& cfg);

/// Implicit/explicit split: each term minimizes the Hermitian-part energy of
/// the updated iterate with the skew part frozen on the right-hand side.
/// cfg.alpha >= 1 relaxes the implicit part.
SolveResult run_decomposition(const ProblemInstance& p, const SolverConfig& cfg);

/// Coupled primal/dual iteration whose fixed point is not well defined in
/// general; runs the blockwise alternation and records whether it settled.
SolveResult run_appendix_coupled(const ProblemInstance& p, const SolverConfig& cfg);

/// Damped greedy on the V inner product itself: converges to the Riesz
/// representative of the right-hand side for lambda >= 1. The trace records
/// the residual to that representative.
SolveResult run_appendix_lambda(const ProblemInstance& p, const SolverConfig& cfg);

/// Dispatch on cfg.algorithm.
SolveResult run_solver(const ProblemInstance& p, const SolverConfig& cfg);

}  // namespace pgdlab
