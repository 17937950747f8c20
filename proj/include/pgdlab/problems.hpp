#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include "pgdlab/gram.hpp"
#include "pgdlab/mode_grid.hpp"
#include "pgdlab/operators.hpp"
#include "pgdlab/types.hpp"

namespace pgdlab {

struct ProblemParams {
  double b_x = 0.0;
  double b_t = 0.0;
  int problem_id = 0;
};

/// A discretized periodic convection-diffusion problem on the Fourier grid:
/// the operator A, its Hermitian/anti-Hermitian split, the inner-product
/// structures, and the right-hand side coefficient matrix.
struct ProblemInstance {
  ModeGrid grid;
  SeparableOperator<Complex> op;
  SeparableOperator<Complex> op_sym;
  SeparableOperator<Complex> op_skew;
  GramStructure<Complex> gram;
  CoeffMatrix rhs;
  ProblemParams params;
};

struct OracleSolution {
  CoeffMatrix u_exact;
  CoeffMatrix symbol;  // per-mode multiplier sigma(k, l) of the operator
};

/// Problem 1: (D_x + b_x N_x + I) acting on the x factor only.
/// V_x carries the H^1 Gram diag(1 + k^2); V_t the L^2 identity.
/// The right-hand side defaults to rhs_smooth.
ProblemInstance assemble_problem1(const ModeGrid& grid, double b_x,
                                  std::optional<CoeffMatrix> rhs = std::nullopt);

/// Problem 2: D_x + b_x N_x + I on x plus D_t + b_t N_t on t.
/// V is the full H^1 product space with symbol 1 + k^2 + l^2; that symbol is
/// stored exactly in g_v_diag and as the algebraically equal two-term
/// separable operator diag(1 + k^2) (x) I + I (x) diag(l^2).
ProblemInstance assemble_problem2(const ModeGrid& grid, double b_x, double b_t,
                                  std::optional<CoeffMatrix> rhs = std::nullopt);

/// Smooth right-hand side f_kl = 1 / (k^2 + l^2 + 1).
CoeffMatrix rhs_smooth(const ModeGrid& grid);

/// The forced-zero counterexample: exactly two unit entries at (k, l) = (1, -1)
/// and (-1, 1), the minimal odd shear profile.
CoeffMatrix rhs_counterexample(const ModeGrid& grid);

/// Exact dense solution via the diagonal Fourier symbol, u_kl = f_kl / sigma_kl.
OracleSolution oracle_solve(const ProblemInstance& p);

/// Symmetric saddle-point reformulation over flattened coefficient vectors
/// (row-major over (k, l)): block system [[0, A*], [A, -R_V]] (v, v~) = (0, L).
struct CohenSystem {
  DenseMatrix<Complex> lhs;
  DenseVector<Complex> rhs;
  ModeGrid grid;
};

struct CohenSolution {
  CoeffMatrix v;
  CoeffMatrix v_tilde;
};

CohenSystem assemble_cohen_system(const ProblemInstance& p);
CohenSolution solve_cohen_system(const CohenSystem& sys);

/// Text RHS ingestion: first line "nx nt", then (2nx+1)*(2nt+1) lines
/// "k l re im". Rejects duplicate or out-of-range (k, l) and bad counts.
std::pair<ModeGrid, CoeffMatrix> load_rhs(std::istream& in);
std::pair<ModeGrid, CoeffMatrix> load_rhs_file(const std::string& path);

}  // namespace pgdlab
