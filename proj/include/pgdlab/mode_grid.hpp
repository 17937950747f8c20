#pragma once

#include <stdexcept>

#include "pgdlab/types.hpp"

namespace pgdlab {

/// Truncated Fourier mode grid. Wave numbers along x run through
/// -n_x, ..., n_x and along t through -n_t, ..., n_t, so the coefficient
/// space has dimensions (2 n_x + 1) x (2 n_t + 1).
struct ModeGrid {
  int n_x = 1;
  int n_t = 1;

  ModeGrid() = default;
  ModeGrid(int nx, int nt) : n_x(nx), n_t(nt) {
    if (nx < 1 || nt < 1)
      throw std::invalid_argument("ModeGrid: truncations must be >= 1");
  }
  static ModeGrid square(int n) { return ModeGrid(n, n); }

  Eigen::Index dim_x() const { return 2 * static_cast<Eigen::Index>(n_x) + 1; }
  Eigen::Index dim_t() const { return 2 * static_cast<Eigen::Index>(n_t) + 1; }

  int mode_x(Eigen::Index i) const { return static_cast<int>(i) - n_x; }
  int mode_t(Eigen::Index j) const { return static_cast<int>(j) - n_t; }
  Eigen::Index index_x(int k) const { return static_cast<Eigen::Index>(k + n_x); }
  Eigen::Index index_t(int l) const { return static_cast<Eigen::Index>(l + n_t); }

  bool contains(int k, int l) const {
    return -n_x <= k && k <= n_x && -n_t <= l && l <= n_t;
  }

  bool operator==(const ModeGrid&) const = default;
};

/// Diagonal (2n+1) x (2n+1) matrix with entry f(k) at wave number k.
template <typename Scalar, typename SymbolFn>
DenseMatrix<Scalar> diagonal_over_modes(int n, SymbolFn&& f) {
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(n) + 1;
  DenseMatrix<Scalar> m = DenseMatrix<Scalar>::Zero(dim, dim);
  for (int k = -n; k <= n; ++k) m(k + n, k + n) = f(k);
  return m;
}

}  // namespace pgdlab
