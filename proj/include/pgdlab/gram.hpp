#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "pgdlab/operators.hpp"
#include "pgdlab/types.hpp"

namespace pgdlab {

/// Inner-product data for the spaces V_x, V_t and V in coefficient space.
/// g_x and g_t are the Hermitian positive-definite factor Grams; g_v is the
/// Riesz map of V as a separable operator. When the V inner product is
/// diagonal in the Fourier basis, g_v_diag holds its exact symbol.
template <typename Scalar>
struct GramStructure {
  DenseMatrix<Scalar> g_x;
  DenseMatrix<Scalar> g_t;
  SeparableOperator<Scalar> g_v;
  std::optional<DenseMatrix<Scalar>> g_v_diag;
};

/// <R_V a, b> = sum_kl (g_v a)_kl conj(b_kl); conjugate-linear in b.
template <typename Scalar>
Scalar inner_v(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b,
               const GramStructure<Scalar>& gram) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("inner_v: shape mismatch");
  return frobenius_dot(gram.g_v.apply(a), b);
}

template <typename Scalar>
double norm_v(const DenseMatrix<Scalar>& a, const GramStructure<Scalar>& gram) {
  return std::sqrt(std::max(0.0, std::real(inner_v(a, a, gram))));
}

/// |r|_{g_x} = sqrt(r^H G_x r)
template <typename Scalar>
double factor_norm_x(const DenseVector<Scalar>& r,
                     const GramStructure<Scalar>& gram) {
  return std::sqrt(std::max(0.0, std::real(r.dot(gram.g_x * r))));
}

template <typename Scalar>
double factor_norm_t(const DenseVector<Scalar>& s,
                     const GramStructure<Scalar>& gram) {
  return std::sqrt(std::max(0.0, std::real(s.dot(gram.g_t * s))));
}

}  // namespace pgdlab
