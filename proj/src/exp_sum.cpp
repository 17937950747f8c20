#include "pgdlab/exp_sum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pgdlab {

namespace {

constexpr int kSampleGridSize = 600;

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> xs(n);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    xs[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
  return xs;
}

double measure_sup_rel_error(const std::vector<double>& weights,
                             const std::vector<double>& rates,
                             const std::vector<double>& grid) {
  double worst = 0.0;
  for (double x : grid) {
    double acc = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      acc += weights[l] * std::exp(-rates[l] * x);
    worst = std::max(worst, std::abs(acc * x - 1.0));
  }
  return worst;
}

struct Ladder {
  std::vector<double> weights;
  std::vector<double> rates;
};

// Trapezoid nodes for int exp(tau - x exp(tau)) dtau over [tau_lo, tau_hi].
Ladder build_ladder(double tau_lo, double tau_hi, int n) {
  Ladder lad;
  lad.weights.resize(n);
  lad.rates.resize(n);
  const double h = (n > 1) ? (tau_hi - tau_lo) / (n - 1) : 0.0;
  for (int j = 0; j < n; ++j) {
    const double tau = (n > 1) ? tau_lo + j * h : 0.5 * (tau_lo + tau_hi);
    const double c = std::exp(tau);
    double w = (n > 1) ? h * c : c;  // n == 1 weight fixed up by the caller
    // Endpoint trapezoid halving
    if (n > 1 && (j == 0 || j == n - 1)) w *= 0.5;
    lad.weights[j] = w;
    lad.rates[j] = c;
  }
  return lad;
}

}  // namespace

double ExpSumApprox::evaluate(double x) const {
  double acc = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    acc += weights[l] * std::exp(-rates[l] * x);
  return acc;
}

namespace {

// Best n-node construction in isolation: a tangency sweep for n = 1, node
// windows sized for a sweep of target accuracies otherwise. The measured
// error on the sample grid picks the winner.
ExpSumApprox best_direct(double x_min, int n, double x_max,
                         const std::vector<double>& grid) {
  ExpSumApprox best;
  best.x_min = x_min;
  best.x_max = x_max;
  best.sup_rel_error = std::numeric_limits<double>::infinity();

  if (n == 1) {
    for (double x0 : log_spaced(x_min, x_max, 48)) {
      const std::vector<double> w = {std::exp(1.0) / x0};
      const std::vector<double> c = {1.0 / x0};
      const double err = measure_sup_rel_error(w, c, grid);
      if (err < best.sup_rel_error) {
        best.weights = w;
        best.rates = c;
        best.sup_rel_error = err;
      }
    }
    return best;
  }

  for (double log10_eps = -0.5; log10_eps >= -16.0; log10_eps -= 0.5) {
    const double eps = std::pow(10.0, log10_eps);
    const double tau_lo = std::log(eps / 3.0) - std::log(x_max);
    const double tau_hi = std::log(std::log(3.0 / eps) / x_min);
    if (!(tau_hi > tau_lo)) continue;
    Ladder lad = build_ladder(tau_lo, tau_hi, n);
    const double err = measure_sup_rel_error(lad.weights, lad.rates, grid);
    if (err < best.sup_rel_error) {
      best.weights = std::move(lad.weights);
      best.rates = std::move(lad.rates);
      best.sup_rel_error = err;
    }
  }
  return best;
}

}  // namespace

ExpSumApprox exp_sum_inverse(double x_min, int n_terms, double x_max) {
  if (!(x_min > 0.0)) throw std::invalid_argument("exp_sum_inverse: x_min must be > 0");
  if (x_min > 1.0)
    throw std::invalid_argument("exp_sum_inverse: valid range requires x_min <= 1");
  if (n_terms < 1) throw std::invalid_argument("exp_sum_inverse: n_terms must be >= 1");
  if (!(x_max > x_min)) throw std::invalid_argument("exp_sum_inverse: x_max must exceed x_min");

  const std::vector<double> grid = log_spaced(x_min, x_max, kSampleGridSize);

  // Build up from one term so the error is nonincreasing in the term count:
  // at each size the direct construction competes with the padded best of
  // the previous size. Padding terms carry zero weight.
  ExpSumApprox best = best_direct(x_min, 1, x_max, grid);
  for (int k = 2; k <= n_terms; ++k) {
    ExpSumApprox direct = best_direct(x_min, k, x_max, grid);
    best.weights.push_back(0.0);
    best.rates.push_back(1.0);
    if (direct.sup_rel_error < best.sup_rel_error) best = std::move(direct);
  }
  return best;
}

CoeffMatrix ExpSumRieszInverse::symbol() const {
  CoeffMatrix sym = CoeffMatrix::Zero(ex.empty() ? 0 : ex[0].size(),
                                      et.empty() ? 0 : et[0].size());
  for (std::size_t l = 0; l < ex.size(); ++l)
    sym.noalias() += ex[l] * et[l].transpose();
  return sym;
}

CoeffMatrix ExpSumRieszInverse::apply(const CoeffMatrix& m) const {
  return symbol().cwiseProduct(m);
}

SeparableOperator<Complex> ExpSumRieszInverse::to_operator() const {
  std::vector<SeparableOperator<Complex>::Factor> fs;
  fs.reserve(ex.size());
  for (std::size_t l = 0; l < ex.size(); ++l)
    fs.push_back({CoeffMatrix(ex[l].asDiagonal()), CoeffMatrix(et[l].asDiagonal())});
  return SeparableOperator<Complex>(std::move(fs));
}

ExpSumRieszInverse expsum_riesz_inverse(const GramStructure<Complex>& gram,
                                        const ExpSumApprox& sum) {
  const auto& factors = gram.g_v.factors();
  if (factors.empty())
    throw std::invalid_argument("expsum_riesz_inverse: empty Riesz operator");
  const Eigen::Index dx = gram.g_v.dim_x();
  const Eigen::Index dt = gram.g_v.dim_t();

  // Split the Riesz symbol additively: every factor pair must carry an
  // identity on one side so that exp(-c R_V) tensorizes.
  CoeffVector dx_total = CoeffVector::Zero(dx);
  CoeffVector dt_total = CoeffVector::Zero(dt);
  const CoeffMatrix ix = CoeffMatrix::Identity(dx, dx);
  const CoeffMatrix it = CoeffMatrix::Identity(dt, dt);
  for (const auto& f : factors) {
    const bool x_is_id = (f.ax - ix).norm() == 0.0;
    const bool t_is_id = (f.at - it).norm() == 0.0;
    if (t_is_id)
      dx_total += f.ax.diagonal();
    else if (x_is_id)
      dt_total += f.at.diagonal();
    else
      throw std::invalid_argument(
          "expsum_riesz_inverse: Riesz operator is not an additive tensor sum");
  }
  if (dx_total.imag().norm() != 0.0 || dt_total.imag().norm() != 0.0)
    throw std::invalid_argument("expsum_riesz_inverse: Riesz symbol must be real");

  ExpSumRieszInverse out;
  out.sup_rel_error = sum.sup_rel_error;
  out.ex.reserve(sum.weights.size());
  out.et.reserve(sum.weights.size());
  for (std::size_t l = 0; l < sum.weights.size(); ++l) {
    const double c = sum.rates[l];
    out.ex.push_back(sum.weights[l] *
                     (-c * dx_total.real().array()).exp().matrix().cast<Complex>());
    out.et.push_back((-c * dt_total.real().array()).exp().matrix().cast<Complex>());
  }
  return out;
}

}  // namespace pgdlab
