#pragma once

#include <complex>

#include <Eigen/Dense>

namespace pgdlab {

using Complex = std::complex<double>;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Coefficient matrix on the truncated Fourier grid: entry (i, j) holds the
/// coefficient of the basis function indexed by wave numbers k = i - n_x,
/// l = j - n_t.
using CoeffMatrix = DenseMatrix<Complex>;
using CoeffVector = DenseVector<Complex>;

/// Frobenius pairing <a, b> = sum_ij a_ij * conj(b_ij).
/// Linear in the first argument, conjugate-linear in the second.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar frobenius_dot(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  return a.cwiseProduct(b.conjugate()).sum();
}

}  // namespace pgdlab
