#include "pgdlab/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pgdlab {

namespace {

using Op = SeparableOperator<Complex>;
using Factor = Op::Factor;

CoeffMatrix identity(Eigen::Index d) { return CoeffMatrix::Identity(d, d); }

CoeffMatrix laplace_diag(int n) {
  return diagonal_over_modes<Complex>(
      n, [](int k) { return Complex(static_cast<double>(k) * k, 0.0); });
}

CoeffMatrix drift_diag(int n) {
  return diagonal_over_modes<Complex>(
      n, [](int k) { return Complex(0.0, static_cast<double>(k)); });
}

CoeffMatrix h1_diag(int n) {
  return diagonal_over_modes<Complex>(
      n, [](int k) { return Complex(1.0 + static_cast<double>(k) * k, 0.0); });
}

CoeffMatrix pick_rhs(std::optional<CoeffMatrix> rhs, const ModeGrid& grid) {
  if (!rhs) return rhs_smooth(grid);
  if (rhs->rows() != grid.dim_x() || rhs->cols() != grid.dim_t())
    throw std::invalid_argument("assemble: right-hand side does not match grid");
  return std::move(*rhs);
}

// Kronecker lift of one factor pair onto row-major flattened coefficients:
// flat index of (i, j) is i * dim_t + j.
void add_kron(DenseMatrix<Complex>& dst, const CoeffMatrix& ax, const CoeffMatrix& at) {
  const Eigen::Index dx = ax.rows();
  const Eigen::Index dt = at.rows();
  for (Eigen::Index ix = 0; ix < dx; ++ix)
    for (Eigen::Index jx = 0; jx < dx; ++jx) {
      const Complex axv = ax(ix, jx);
      if (axv == Complex(0.0)) continue;
      dst.block(ix * dt, jx * dt, dt, dt) += axv * at;
    }
}

DenseMatrix<Complex> dense_from_separable(const Op& op) {
  const Eigen::Index d = op.dim_x() * op.dim_t();
  DenseMatrix<Complex> m = DenseMatrix<Complex>::Zero(d, d);
  for (const auto& f : op.factors()) add_kron(m, f.ax, f.at);
  return m;
}

}  // namespace

ProblemInstance assemble_problem1(const ModeGrid& grid, double b_x,
                                  std::optional<CoeffMatrix> rhs) {
  const Eigen::Index dt = grid.dim_t();
  const CoeffMatrix dxm = laplace_diag(grid.n_x);
  const CoeffMatrix nxm = drift_diag(grid.n_x);
  const CoeffMatrix ix = identity(grid.dim_x());
  const CoeffMatrix it = identity(dt);

  ProblemInstance p;
  p.grid = grid;
  p.op = Op({Factor{dxm + b_x * nxm + ix, it}});
  p.op_sym = Op({Factor{dxm + ix, it}});
  p.op_skew = Op({Factor{b_x * nxm, it}});

  p.gram.g_x = h1_diag(grid.n_x);
  p.gram.g_t = it;
  p.gram.g_v = Op({Factor{p.gram.g_x, it}});
  CoeffMatrix diag(grid.dim_x(), dt);
  for (Eigen::Index i = 0; i < grid.dim_x(); ++i) {
    const double k = grid.mode_x(i);
    diag.row(i).setConstant(Complex(1.0 + k * k, 0.0));
  }
  p.gram.g_v_diag = std::move(diag);

  p.rhs = pick_rhs(std::move(rhs), grid);
  p.params = {b_x, 0.0, 1};
  return p;
}

ProblemInstance assemble_problem2(const ModeGrid& grid, double b_x, double b_t,
                                  std::optional<CoeffMatrix> rhs) {
  const CoeffMatrix dxm = laplace_diag(grid.n_x);
  const CoeffMatrix nxm = drift_diag(grid.n_x);
  const CoeffMatrix dtm = laplace_diag(grid.n_t);
  const CoeffMatrix ntm = drift_diag(grid.n_t);
  const CoeffMatrix ix = identity(grid.dim_x());
  const CoeffMatrix it = identity(grid.dim_t());

  ProblemInstance p;
  p.grid = grid;
  p.op = Op({Factor{dxm + b_x * nxm, it}, Factor{ix, dtm + b_t * ntm}, Factor{ix, it}});
  p.op_sym = Op({Factor{dxm, it}, Factor{ix, dtm}, Factor{ix, it}});
  p.op_skew = Op({Factor{b_x * nxm, it}, Factor{ix, b_t * ntm}});

  p.gram.g_x = h1_diag(grid.n_x);
  p.gram.g_t = h1_diag(grid.n_t);
  p.gram.g_v = Op({Factor{h1_diag(grid.n_x), it}, Factor{ix, laplace_diag(grid.n_t)}});
  CoeffMatrix diag(grid.dim_x(), grid.dim_t());
  for (Eigen::Index i = 0; i < grid.dim_x(); ++i)
    for (Eigen::Index j = 0; j < grid.dim_t(); ++j) {
      const double k = grid.mode_x(i);
      const double l = grid.mode_t(j);
      diag(i, j) = Complex(1.0 + k * k + l * l, 0.0);
    }
  p.gram.g_v_diag = std::move(diag);

  p.rhs = pick_rhs(std::move(rhs), grid);
  p.params = {b_x, b_t, 2};
  return p;
}

CoeffMatrix rhs_smooth(const ModeGrid& grid) {
  CoeffMatrix f(grid.dim_x(), grid.dim_t());
  for (Eigen::Index i = 0; i < grid.dim_x(); ++i)
    for (Eigen::Index j = 0; j < grid.dim_t(); ++j) {
      const double k = grid.mode_x(i);
      const double l = grid.mode_t(j);
      f(i, j) = Complex(1.0 / (k * k + l * l + 1.0), 0.0);
    }
  return f;
}

CoeffMatrix rhs_counterexample(const ModeGrid& grid) {
  if (grid.n_x < 1 || grid.n_t < 1)
    throw std::invalid_argument("rhs_counterexample: needs n_x, n_t >= 1");
  CoeffMatrix f = CoeffMatrix::Zero(grid.dim_x(), grid.dim_t());
  f(grid.index_x(1), grid.index_t(-1)) = Complex(1.0, 0.0);
  f(grid.index_x(-1), grid.index_t(1)) = Complex(1.0, 0.0);
  return f;
}

OracleSolution oracle_solve(const ProblemInstance& p) {
  if (!p.op.is_diagonal())
    throw std::invalid_argument("oracle_solve: operator has no diagonal symbol");
  const CoeffMatrix& sigma = p.op.symbol();
  if (sigma.cwiseAbs().minCoeff() == 0.0)
    throw std::domain_error("oracle_solve: vanishing symbol entry");
  OracleSolution sol;
  sol.symbol = sigma;
  sol.u_exact = p.rhs.cwiseQuotient(sigma);
  return sol;
}

CohenSystem assemble_cohen_system(const ProblemInstance& p) {
  const Eigen::Index d = p.grid.dim_x() * p.grid.dim_t();
  const DenseMatrix<Complex> a = dense_from_separable(p.op);
  const DenseMatrix<Complex> rv = dense_from_separable(p.gram.g_v);

  CohenSystem sys;
  sys.grid = p.grid;
  sys.lhs = DenseMatrix<Complex>::Zero(2 * d, 2 * d);
  sys.lhs.topRightCorner(d, d) = a.adjoint();
  sys.lhs.bottomLeftCorner(d, d) = a;
  sys.lhs.bottomRightCorner(d, d) = -rv;

  sys.rhs = DenseVector<Complex>::Zero(2 * d);
  const Eigen::Index dt = p.grid.dim_t();
  for (Eigen::Index i = 0; i < p.grid.dim_x(); ++i)
    for (Eigen::Index j = 0; j < dt; ++j) sys.rhs(d + i * dt + j) = p.rhs(i, j);
  return sys;
}

CohenSolution solve_cohen_system(const CohenSystem& sys) {
  Eigen::FullPivLU<DenseMatrix<Complex>> lu(sys.lhs);
  if (!lu.isInvertible())
    throw std::runtime_error("solve_cohen_system: singular block system");
  const DenseVector<Complex> sol = lu.solve(sys.rhs);

  const Eigen::Index dx = sys.grid.dim_x();
  const Eigen::Index dt = sys.grid.dim_t();
  const Eigen::Index d = dx * dt;
  CohenSolution out;
  out.v.resize(dx, dt);
  out.v_tilde.resize(dx, dt);
  for (Eigen::Index i = 0; i < dx; ++i)
    for (Eigen::Index j = 0; j < dt; ++j) {
      out.v(i, j) = sol(i * dt + j);
      out.v_tilde(i, j) = sol(d + i * dt + j);
    }
  return out;
}

std::pair<ModeGrid, CoeffMatrix> load_rhs(std::istream& in) {
  int nx = 0;
  int nt = 0;
  if (!(in >> nx >> nt))
    throw std::runtime_error("rhs file: expected header line 'nx nt'");
  if (nx < 1 || nt < 1) throw std::runtime_error("rhs file: truncations must be >= 1");
  const ModeGrid grid(nx, nt);

  CoeffMatrix f = CoeffMatrix::Zero(grid.dim_x(), grid.dim_t());
  std::vector<char> seen(static_cast<std::size_t>(grid.dim_x() * grid.dim_t()), 0);
  const long expected = static_cast<long>(grid.dim_x() * grid.dim_t());
  for (long entry = 0; entry < expected; ++entry) {
    int k = 0;
    int l = 0;
    double re = 0.0;
    double im = 0.0;
    if (!(in >> k >> l >> re >> im))
      throw std::runtime_error("rhs file: expected " + std::to_string(expected) +
                               " entries 'k l re im'");
    if (!grid.contains(k, l))
      throw std::runtime_error("rhs file: mode (" + std::to_string(k) + ", " +
                               std::to_string(l) + ") out of range");
    const std::size_t flat =
        static_cast<std::size_t>(grid.index_x(k) * grid.dim_t() + grid.index_t(l));
    if (seen[flat])
      throw std::runtime_error("rhs file: duplicate mode (" + std::to_string(k) +
                               ", " + std::to_string(l) + ")");
    seen[flat] = 1;
    f(grid.index_x(k), grid.index_t(l)) = Complex(re, im);
  }
  std::string extra;
  if (in >> extra) throw std::runtime_error("rhs file: trailing data after entries");
  return {grid, std::move(f)};
}

std::pair<ModeGrid, CoeffMatrix> load_rhs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("rhs file: cannot open '" + path + "'");
  return load_rhs(in);
}

}  // namespace pgdlab
