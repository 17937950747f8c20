#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgdlab/separated.hpp"
#include "pgdlab/types.hpp"

namespace pgdlab {

/// Reduced one-factor system produced by testing an operator against a fixed
/// factor of a rank-one pair. Either a dense matrix or, when the operator is
/// diagonal in the Fourier basis, just the diagonal.
template <typename Scalar>
class HalfSystem {
 public:
  static HalfSystem dense(DenseMatrix<Scalar> m) {
    HalfSystem h;
    h.dense_ = std::move(m);
    return h;
  }
  static HalfSystem diagonal(DenseVector<Scalar> d) {
    HalfSystem h;
    h.diag_ = std::move(d);
    return h;
  }

  bool is_diagonal() const { return diag_.has_value(); }
  Eigen::Index size() const {
    return is_diagonal() ? diag_->size() : dense_->rows();
  }

  DenseVector<Scalar> apply(const DenseVector<Scalar>& v) const {
    return is_diagonal() ? diag_->cwiseProduct(v).eval() : (*dense_ * v).eval();
  }
  DenseVector<Scalar> apply_adjoint(const DenseVector<Scalar>& v) const {
    return is_diagonal() ? diag_->conjugate().cwiseProduct(v).eval()
                         : (dense_->adjoint() * v).eval();
  }

  HalfSystem adjoint() const {
    return is_diagonal() ? diagonal(diag_->conjugate())
                         : dense(dense_->adjoint());
  }

  DenseMatrix<Scalar> to_dense() const {
    return is_diagonal() ? DenseMatrix<Scalar>(diag_->asDiagonal())
                         : *dense_;
  }

  /// Solves M x = b. Sets `singular` instead of throwing so callers can report
  /// the condition in their own terms.
  DenseVector<Scalar> solve(const DenseVector<Scalar>& b, bool& singular) const {
    singular = false;
    if (is_diagonal()) {
      const double max_abs = diag_->cwiseAbs().maxCoeff();
      if (!(max_abs > 0.0) || diag_->cwiseAbs().minCoeff() < 1e-14 * max_abs) {
        singular = true;
        return DenseVector<Scalar>::Zero(b.size());
      }
      return b.cwiseQuotient(*diag_);
    }
    Eigen::FullPivLU<DenseMatrix<Scalar>> lu(*dense_);
    if (!lu.isInvertible()) {
      singular = true;
      return DenseVector<Scalar>::Zero(b.size());
    }
    return lu.solve(b);
  }

 private:
  std::optional<DenseMatrix<Scalar>> dense_;
  std::optional<DenseVector<Scalar>> diag_;
};

/// Finite sum of tensorized factor pairs sum_i Ax_i (x) At_i, acting on
/// coefficient matrices as M -> sum_i Ax_i M At_i^T. With this convention
/// the image of a rank-one pair (r, s) is the separated sum of (Ax_i r, At_i s).
///
/// When every factor matrix is diagonal the operator caches its Fourier
/// symbol sigma(k, l) = sum_i dx_i(k) dt_i(l), and all dense applications
/// and rank-one half systems run entrywise on the symbol.
template <typename Scalar>
class SeparableOperator {
 public:
  using MatrixType = DenseMatrix<Scalar>;
  using VectorType = DenseVector<Scalar>;
  struct Factor {
    MatrixType ax;
    MatrixType at;
  };

  SeparableOperator() = default;
  explicit SeparableOperator(std::vector<Factor> factors)
      : factors_(std::move(factors)) {
    validate_dims();
    build_symbol_cache();
  }

  static SeparableOperator identity(Eigen::Index dx, Eigen::Index dt) {
    return SeparableOperator(
        {Factor{MatrixType::Identity(dx, dx), MatrixType::Identity(dt, dt)}});
  }

  bool empty() const { return factors_.empty(); }
  Eigen::Index dim_x() const { return factors_.empty() ? 0 : factors_[0].ax.rows(); }
  Eigen::Index dim_t() const { return factors_.empty() ? 0 : factors_[0].at.rows(); }
  const std::vector<Factor>& factors() const { return factors_; }

  bool is_diagonal() const { return symbol_.has_value(); }
  const MatrixType& symbol() const {
    if (!symbol_)
      throw std::logic_error("SeparableOperator: symbol requires diagonal factors");
    return *symbol_;
  }

  /// sum_i Ax_i m At_i^T
  MatrixType apply(const MatrixType& m) const {
    check_shape(m);
    if (symbol_) return symbol_->cwiseProduct(m);
    MatrixType acc = MatrixType::Zero(dim_x(), dim_t());
    for (const auto& f : factors_) acc.noalias() += f.ax * m * f.at.transpose();
    return acc;
  }

  std::vector<RankOnePair<Scalar>> apply_rank_one(
      const RankOnePair<Scalar>& term) const {
    if (term.r.size() != dim_x() || term.s.size() != dim_t())
      throw std::invalid_argument("SeparableOperator: rank-one term dimension mismatch");
    std::vector<RankOnePair<Scalar>> out;
    out.reserve(factors_.size());
    for (const auto& f : factors_)
      out.push_back({(f.ax * term.r).eval(), (f.at * term.s).eval()});
    return out;
  }

  SeparatedApprox<Scalar> apply(const SeparatedApprox<Scalar>& u) const {
    SeparatedApprox<Scalar> out(u.grid);
    for (const auto& term : u.terms)
      for (auto& image : apply_rank_one(term)) out.terms.push_back(std::move(image));
    return out;
  }

  /// Adjoint with respect to the Frobenius pairing: factor pairs (Ax^H, At^H).
  SeparableOperator adjoint() const {
    std::vector<Factor> fs;
    fs.reserve(factors_.size());
    for (const auto& f : factors_)
      fs.push_back({f.ax.adjoint().eval(), f.at.adjoint().eval()});
    return SeparableOperator(std::move(fs));
  }

  SeparableOperator scaled(Scalar c) const {
    std::vector<Factor> fs;
    fs.reserve(factors_.size());
    for (const auto& f : factors_) fs.push_back({(c * f.ax).eval(), f.at});
    return SeparableOperator(std::move(fs));
  }

  friend SeparableOperator operator+(const SeparableOperator& a,
                                     const SeparableOperator& b) {
    std::vector<Factor> fs = a.factors_;
    fs.insert(fs.end(), b.factors_.begin(), b.factors_.end());
    return SeparableOperator(std::move(fs));
  }

  /// Composition b after a, with factor pairs (Bx Ax, Bt At).
  friend SeparableOperator compose(const SeparableOperator& b,
                                   const SeparableOperator& a) {
    std::vector<Factor> fs;
    fs.reserve(a.factors_.size() * b.factors_.size());
    for (const auto& fb : b.factors_)
      for (const auto& fa : a.factors_)
        fs.push_back({(fb.ax * fa.ax).eval(), (fb.at * fa.at).eval()});
    return SeparableOperator(std::move(fs));
  }

  /// Reduced x-factor system sum_i <At_i s, s_test> Ax_i, where
  /// <a, b> = sum a conj(b).
  HalfSystem<Scalar> x_system(const VectorType& s, const VectorType& s_test) const {
    if (symbol_)
      return HalfSystem<Scalar>::diagonal(
          (*symbol_) * s.cwiseProduct(s_test.conjugate()));
    MatrixType m = MatrixType::Zero(dim_x(), dim_x());
    for (const auto& f : factors_) m.noalias() += s_test.dot(f.at * s) * f.ax;
    return HalfSystem<Scalar>::dense(std::move(m));
  }

  /// Reduced t-factor system sum_i <Ax_i r, r_test> At_i.
  HalfSystem<Scalar> t_system(const VectorType& r, const VectorType& r_test) const {
    if (symbol_)
      return HalfSystem<Scalar>::diagonal(
          symbol_->transpose() * r.cwiseProduct(r_test.conjugate()));
    MatrixType m = MatrixType::Zero(dim_t(), dim_t());
    for (const auto& f : factors_) m.noalias() += r_test.dot(f.ax * r) * f.at;
    return HalfSystem<Scalar>::dense(std::move(m));
  }

  /// True when every factor pair has a numerically zero product.
  bool is_zero() const {
    for (const auto& f : factors_)
      if (f.ax.norm() * f.at.norm() != 0.0) return false;
    return true;
  }

 private:
  void validate_dims() const {
    for (const auto& f : factors_) {
      if (f.ax.rows() != f.ax.cols() || f.at.rows() != f.at.cols())
        throw std::invalid_argument("SeparableOperator: factors must be square");
      if (f.ax.rows() != dim_x() || f.at.rows() != dim_t())
        throw std::invalid_argument("SeparableOperator: inconsistent factor dimensions");
    }
  }

  static bool matrix_is_diagonal(const MatrixType& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (i != j && m(i, j) != Scalar(0)) return false;
    return true;
  }

  void build_symbol_cache() {
    if (factors_.empty()) return;
    for (const auto& f : factors_)
      if (!matrix_is_diagonal(f.ax) || !matrix_is_diagonal(f.at)) return;
    MatrixType sym = MatrixType::Zero(dim_x(), dim_t());
    for (const auto& f : factors_)
      sym.noalias() += f.ax.diagonal() * f.at.diagonal().transpose();
    symbol_ = std::move(sym);
  }

  void check_shape(const MatrixType& m) const {
    if (m.rows() != dim_x() || m.cols() != dim_t())
      throw std::invalid_argument("SeparableOperator: coefficient matrix shape mismatch");
  }

  std::vector<Factor> factors_;
  std::optional<MatrixType> symbol_;
};

/// f - A densify(u): the traced residual of a separated iterate.
template <typename Scalar>
DenseMatrix<Scalar> residual_matrix(const SeparableOperator<Scalar>& op,
                                    const SeparatedApprox<Scalar>& u,
                                    const DenseMatrix<Scalar>& f) {
  if (f.rows() != op.dim_x() || f.cols() != op.dim_t())
    throw std::invalid_argument("residual_matrix: shape mismatch");
  return f - op.apply(densify(u));
}

/// Operator that is diagonal in the tensorized Fourier basis: acts entrywise
/// by its symbol. Used for normal-equation forms like A^* R_V^{-1} A whose
/// symbol is available but which are not finite sums of tensor factors.
template <typename Scalar>
class DiagonalOperator {
 public:
  using MatrixType = DenseMatrix<Scalar>;
  using VectorType = DenseVector<Scalar>;

  DiagonalOperator() = default;
  explicit DiagonalOperator(MatrixType symbol) : symbol_(std::move(symbol)) {}

  Eigen::Index dim_x() const { return symbol_.rows(); }
  Eigen::Index dim_t() const { return symbol_.cols(); }
  const MatrixType& symbol() const { return symbol_; }
  bool is_diagonal() const { return true; }

  MatrixType apply(const MatrixType& m) const {
    if (m.rows() != symbol_.rows() || m.cols() != symbol_.cols())
      throw std::invalid_argument("DiagonalOperator: coefficient matrix shape mismatch");
    return symbol_.cwiseProduct(m);
  }

  DiagonalOperator adjoint() const {
    return DiagonalOperator(symbol_.conjugate());
  }

  HalfSystem<Scalar> x_system(const VectorType& s, const VectorType& s_test) const {
    return HalfSystem<Scalar>::diagonal(symbol_ * s.cwiseProduct(s_test.conjugate()));
  }
  HalfSystem<Scalar> t_system(const VectorType& r, const VectorType& r_test) const {
    return HalfSystem<Scalar>::diagonal(symbol_.transpose() *
                                        r.cwiseProduct(r_test.conjugate()));
  }

 private:
  MatrixType symbol_;
};

}  // namespace pgdlab
