#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pgdlab/mode_grid.hpp"
#include "pgdlab/types.hpp"

namespace pgdlab {

/// One rank-one term r (x) s, stored as the two factor coefficient vectors.
/// Its coefficient matrix is the outer product r * s^T.
template <typename Scalar>
struct RankOnePair {
  DenseVector<Scalar> r;
  DenseVector<Scalar> s;

  RankOnePair() = default;
  RankOnePair(DenseVector<Scalar> r_, DenseVector<Scalar> s_)
      : r(std::move(r_)), s(std::move(s_)) {}

  static RankOnePair zero(const ModeGrid& g) {
    return {DenseVector<Scalar>::Zero(g.dim_x()),
            DenseVector<Scalar>::Zero(g.dim_t())};
  }
  static RankOnePair ones(const ModeGrid& g) {
    return {DenseVector<Scalar>::Ones(g.dim_x()),
            DenseVector<Scalar>::Ones(g.dim_t())};
  }

  DenseMatrix<Scalar> outer() const { return r * s.transpose(); }

  double product_norm() const { return r.norm() * s.norm(); }
  bool is_zero(double tol = 0.0) const { return product_norm() <= tol; }
  bool all_finite() const { return r.allFinite() && s.allFinite(); }
};

/// Frobenius distance between the products of two rank-one pairs, computed
/// without densifying: with dr = p.r - q.r and ds = p.s - q.s the product
/// difference is dr s^T + q.r ds^T, whose norm expands over factor dots of
/// the small increments. Accurate when the two pairs share a scaling gauge;
/// a pure rescaling mismatch between equal products reintroduces cancellation.
template <typename Scalar>
double product_distance(const RankOnePair<Scalar>& p,
                        const RankOnePair<Scalar>& q) {
  const DenseVector<Scalar> dr = p.r - q.r;
  const DenseVector<Scalar> ds = p.s - q.s;
  const double a2 = dr.squaredNorm() * p.s.squaredNorm();
  const double b2 = q.r.squaredNorm() * ds.squaredNorm();
  // <dr s^T, q.r ds^T>_F = <dr, q.r> <s, ds> with <x, y> = sum x conj(y)
  const Scalar cross = q.r.dot(dr) * ds.dot(p.s);
  const double d2 = a2 + b2 + 2.0 * std::real(cross);
  return std::sqrt(std::max(0.0, d2));
}

/// Ordered sum of rank-one terms over a fixed mode grid.
template <typename Scalar>
struct SeparatedApprox {
  std::vector<RankOnePair<Scalar>> terms;
  ModeGrid grid;

  SeparatedApprox() = default;
  explicit SeparatedApprox(const ModeGrid& g) : grid(g) {}

  std::size_t rank() const { return terms.size(); }

  void append(RankOnePair<Scalar> term) {
    if (term.r.size() != grid.dim_x() || term.s.size() != grid.dim_t())
      throw std::invalid_argument("SeparatedApprox: term does not match grid");
    terms.push_back(std::move(term));
  }
};

/// Dense coefficient matrix of a separated sum. Terms are accumulated left
/// to right so that repeated runs are bit-reproducible.
template <typename Scalar>
DenseMatrix<Scalar> densify(const SeparatedApprox<Scalar>& u) {
  DenseMatrix<Scalar> acc =
      DenseMatrix<Scalar>::Zero(u.grid.dim_x(), u.grid.dim_t());
  for (const auto& term : u.terms) {
    if (term.r.size() != acc.rows() || term.s.size() != acc.cols())
      throw std::invalid_argument("densify: term dimensions do not match grid");
    acc.noalias() += term.r * term.s.transpose();
  }
  return acc;
}

}  // namespace pgdlab
