#pragma once

#include <vector>

#include "pgdlab/gram.hpp"
#include "pgdlab/operators.hpp"
#include "pgdlab/types.hpp"

namespace pgdlab {

/// Approximation 1/x ~ sum_l weight_l * exp(-rate_l * x) on [x_min, x_max].
/// The quality contract is the measured sup relative error on a log-spaced
/// sample grid, reported in sup_rel_error; nothing else is promised.
struct ExpSumApprox {
  std::vector<double> weights;
  std::vector<double> rates;
  double x_min = 1.0;
  double x_max = 1.0;
  double sup_rel_error = 0.0;

  double evaluate(double x) const;
};

/// Builds an n_terms exponential sum for 1/x on [x_min, x_max] by trapezoid
/// quadrature of int_0^inf exp(-x t) dt in the substitution t = exp(tau)
/// (log-uniform nodes). The node window is tuned by a search over target
/// accuracies; the returned sup_rel_error is measured by direct sampling.
ExpSumApprox exp_sum_inverse(double x_min, int n_terms, double x_max = 1e4);

/// Separable expansion of R_V^{-1} induced by an exponential sum: each g_v
/// factor pair must have an identity on one side, so the symbol splits as
/// dx(k) + dt(l) and exp(-c R_V) tensorizes into diagonal exponentials.
struct ExpSumRieszInverse {
  std::vector<CoeffVector> ex;  // x-side diagonals, weights folded in
  std::vector<CoeffVector> et;  // t-side diagonals
  double sup_rel_error = 0.0;

  CoeffMatrix symbol() const;
  CoeffMatrix apply(const CoeffMatrix& m) const;
  SeparableOperator<Complex> to_operator() const;
};

ExpSumRieszInverse expsum_riesz_inverse(const GramStructure<Complex>& gram,
                                        const ExpSumApprox& sum);

}  // namespace pgdlab
