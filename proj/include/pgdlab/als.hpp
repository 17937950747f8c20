#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <utility>

#include "pgdlab/gram.hpp"
#include "pgdlab/operators.hpp"
#include "pgdlab/separated.hpp"
#include "pgdlab/types.hpp"

namespace pgdlab {

enum class AlsStop { eps_change, max_iters, whichever_first };
enum class AlsInit { ones, random_unit, given };

struct AlsConfig {
  double eps = 1e-8;  // Frobenius change threshold on the rank-one product
  int m_max = 20;     // sweep cap
  AlsStop stop_rule = AlsStop::whichever_first;
  AlsInit init_rule = AlsInit::ones;
  std::uint64_t seed = 0;
};

enum class AlsStatus {
  ok,
  zero_collapse,    // a factor fell below the collapse threshold mid-sweep
  singular_system,  // a reduced half system was singular
  dual_degenerate,  // dual-tested half system singular (oblique stage)
};

struct AlsReport {
  int iterations_used = 0;
  bool converged = false;  // the eps rule fired
  double final_change = std::numeric_limits<double>::quiet_NaN();
  bool divergence_flag = false;   // change grew by >10x over 5 consecutive sweeps
  bool oscillation_flag = false;  // no decay trend over the last sweeps
  bool energy_monotone = true;    // tracked for Hermitian forms only
  AlsStatus status = AlsStatus::ok;
};

namespace als_detail {

inline constexpr double kCollapseTol = 1e-14;

inline RankOnePair<Complex> zero_pair(Eigen::Index dx, Eigen::Index dt) {
  return {CoeffVector::Zero(dx), CoeffVector::Zero(dt)};
}

inline RankOnePair<Complex> initial_pair(Eigen::Index dx, Eigen::Index dt,
                                         const AlsConfig& cfg,
                                         const RankOnePair<Complex>* given) {
  if (cfg.init_rule == AlsInit::given || given != nullptr) {
    if (given == nullptr)
      throw std::invalid_argument("ALS: init_rule 'given' requires an initial pair");
    return *given;
  }
  RankOnePair<Complex> p;
  if (cfg.init_rule == AlsInit::ones) {
    p.r = CoeffVector::Ones(dx);
    p.s = CoeffVector::Ones(dt);
    return p;
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](Eigen::Index n) {
    CoeffVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v(i) = Complex(re, im);
    }
    v /= v.norm();
    return v;
  };
  p.r = draw(dx);
  p.s = draw(dt);
  return p;
}

/// Tracks the change sequence: divergence when it grows 10x over 5 sweeps,
/// oscillation when the final change shows no decay against the recent window.
class ChangeMonitor {
 public:
  void record(double change) {
    if (history_.size() >= 5) {
      const double past = history_[history_.size() - 5];
      if (past > 0.0 && change > 10.0 * past) divergence_ = true;
    }
    history_.push_back(change);
    if (history_.size() > 16) history_.pop_front();
  }

  bool divergence() const { return divergence_; }

  bool oscillation(double eps) const {
    if (history_.empty()) return false;
    const double last = history_.back();
    if (!(last > eps)) return false;
    double window_max = 0.0;
    const std::size_t n = std::min<std::size_t>(history_.size(), 5);
    for (std::size_t i = history_.size() - n; i < history_.size(); ++i)
      window_max = std::max(window_max, history_[i]);
    return window_max > 0.0 && last >= 0.9 * window_max;
  }

 private:
  std::deque<double> history_;
  bool divergence_ = false;
};

// The sweep cap applies under every rule; only the eps test is optional.
inline bool eps_rule_active(AlsStop rule) {
  return rule == AlsStop::eps_change || rule == AlsStop::whichever_first;
}

/// Rescale so that |r| = |s| in the given factor norms; the product r (x) s
/// is unchanged. No-op when either factor vanishes.
inline void rebalance(CoeffVector& r, CoeffVector& s,
                      const GramStructure<Complex>* gram) {
  const double nr = gram ? factor_norm_x(r, *gram) : r.norm();
  const double ns = gram ? factor_norm_t(s, *gram) : s.norm();
  if (nr <= 0.0 || ns <= 0.0) return;
  const double gamma = std::sqrt(ns / nr);
  r *= gamma;
  s /= gamma;
}

}  // namespace als_detail

/// Alternating half solves for the stationarity system of a quadratic form:
/// given s, solve the exact reduced x system; given r, the reduced t system.
/// Stops by product change (eps), sweep cap, or whichever fires first.
///
/// `track_energy` enables the per-sweep descent check of the quadratic
/// objective 1/2 <B v, v> - Re<rhs, v>; meaningful for Hermitian forms.
template <typename Form>
std::pair<RankOnePair<Complex>, AlsReport> als_alternate(
    const Form& form, const CoeffMatrix& rhs_fun, const AlsConfig& cfg,
    const RankOnePair<Complex>* init = nullptr,
    const GramStructure<Complex>* rebalance_gram = nullptr,
    bool track_energy = false) {
  using als_detail::kCollapseTol;
  const Eigen::Index dx = rhs_fun.rows();
  const Eigen::Index dt = rhs_fun.cols();
  if (form.dim_x() != dx || form.dim_t() != dt)
    throw std::invalid_argument("ALS: form and functional dimensions disagree");

  AlsReport report;
  RankOnePair<Complex> cur = als_detail::initial_pair(dx, dt, cfg, init);
  RankOnePair<Complex> prev = cur;
  als_detail::ChangeMonitor monitor;
  double prev_energy = std::numeric_limits<double>::infinity();

  auto zero_exit = [&](int m, AlsStatus status) {
    report.iterations_used = m;
    report.converged = false;
    report.status = status;
    return std::make_pair(als_detail::zero_pair(dx, dt), report);
  };

  for (int m = 1; m <= cfg.m_max; ++m) {
    bool singular = false;
    // x half solve: form(r (x) s, dr (x) s) = <rhs, dr (x) s> for all dr
    cur.r = form.x_system(cur.s, cur.s).solve(rhs_fun * cur.s.conjugate(), singular);
    if (singular) return zero_exit(m, AlsStatus::singular_system);
    if (!cur.r.allFinite()) return zero_exit(m, AlsStatus::singular_system);
    if (cur.r.norm() < kCollapseTol) return zero_exit(m, AlsStatus::zero_collapse);

    // t half solve
    auto hs_t = form.t_system(cur.r, cur.r);
    const CoeffVector rhs_t = rhs_fun.transpose() * cur.r.conjugate();
    cur.s = hs_t.solve(rhs_t, singular);
    if (singular) return zero_exit(m, AlsStatus::singular_system);
    if (!cur.s.allFinite()) return zero_exit(m, AlsStatus::singular_system);
    if (cur.s.norm() < kCollapseTol) return zero_exit(m, AlsStatus::zero_collapse);

    if (track_energy) {
      const double energy =
          0.5 * std::real(cur.s.dot(hs_t.apply(cur.s))) - std::real(cur.s.dot(rhs_t));
      const double slack = 1e-12 * std::abs(prev_energy) + 1e-14;
      if (energy > prev_energy + slack) report.energy_monotone = false;
      prev_energy = energy;
    }

    // Rebalance first so consecutive pairs share a gauge and the change
    // metric stays accurate near convergence.
    als_detail::rebalance(cur.r, cur.s, rebalance_gram);
    const double change = product_distance(cur, prev);
    monitor.record(change);
    report.iterations_used = m;
    report.final_change = change;
    prev = cur;

    if (als_detail::eps_rule_active(cfg.stop_rule) && change < cfg.eps) {
      report.converged = true;
      break;
    }
  }

  report.divergence_flag = monitor.divergence();
  report.oscillation_flag = !report.converged && monitor.oscillation(cfg.eps);
  return {cur, report};
}

/// ALS for a Hermitian coercive form (energy minimization steps). The
/// functional rhs_fun is the dense representation of v -> l(v) - a(u, v).
template <typename Form>
std::pair<RankOnePair<Complex>, AlsReport> als_symmetric(
    const Form& bs, const CoeffMatrix& rhs_fun, const GramStructure<Complex>& gram,
    const AlsConfig& cfg, const RankOnePair<Complex>* init = nullptr) {
  return als_alternate(bs, rhs_fun, cfg, init, &gram, /*track_energy=*/true);
}

/// ALS on the full non-symmetric form; the alternation is the same, only the
/// form differs and no energy descent is tracked.
template <typename Form>
std::pair<RankOnePair<Complex>, AlsReport> als_galerkin(
    const Form& a_op, const CoeffMatrix& rhs_fun, const AlsConfig& cfg,
    const RankOnePair<Complex>* init = nullptr) {
  return als_alternate(a_op, rhs_fun, cfg, init, nullptr, /*track_energy=*/false);
}

/// Coupled primal/dual alternation for the saddle-point step
///   max over duals, min over primals of 1/2 |v|_V^2 - a(u + v, v~) + l(v~).
/// The x block solves its two reduced equations in order (primal then dual),
/// then the t block does the same.
template <typename Form>
std::tuple<RankOnePair<Complex>, RankOnePair<Complex>, AlsReport> als_minimax(
    const Form& a_op, const GramStructure<Complex>& gram, const CoeffMatrix& rhs_fun,
    const AlsConfig& cfg, const RankOnePair<Complex>* init_primal = nullptr,
    const RankOnePair<Complex>* init_dual = nullptr) {
  using als_detail::kCollapseTol;
  const Eigen::Index dx = rhs_fun.rows();
  const Eigen::Index dt = rhs_fun.cols();

  AlsReport report;
  RankOnePair<Complex> primal = als_detail::initial_pair(dx, dt, cfg, init_primal);
  AlsConfig dual_cfg = cfg;
  dual_cfg.seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
  RankOnePair<Complex> dual = als_detail::initial_pair(dx, dt, dual_cfg, init_dual);
  RankOnePair<Complex> prev = primal;
  als_detail::ChangeMonitor monitor;

  auto zero_exit = [&](int m, AlsStatus status) {
    report.iterations_used = m;
    report.converged = false;
    report.status = status;
    return std::make_tuple(als_detail::zero_pair(dx, dt),
                           als_detail::zero_pair(dx, dt), report);
  };

  for (int m = 1; m <= cfg.m_max; ++m) {
    bool singular = false;
    // x block, first equation: a(u + r (x) s, dr~ (x) s~) = l(dr~ (x) s~)
    primal.r = a_op.x_system(primal.s, dual.s)
                   .solve(rhs_fun * dual.s.conjugate(), singular);
    if (singular) return zero_exit(m, AlsStatus::singular_system);
    if (primal.r.norm() < kCollapseTol) return zero_exit(m, AlsStatus::zero_collapse);
    // x block, second equation: a(dr (x) s, r~ (x) s~) = <dr (x) s, r (x) s>_V
    dual.r = a_op.x_system(primal.s, dual.s)
                 .adjoint()
                 .solve(gram.g_v.x_system(primal.s, primal.s).apply_adjoint(primal.r),
                        singular);
    if (singular) return zero_exit(m, AlsStatus::singular_system);
    if (dual.r.norm() < kCollapseTol) return zero_exit(m, AlsStatus::zero_collapse);

    // t block, first equation
    primal.s = a_op.t_system(primal.r, dual.r)
                   .solve(rhs_fun.transpose() * dual.r.conjugate(), singular);
    if (singular) return zero_exit(m, AlsStatus::singular_system);
    if (primal.s.norm() < kCollapseTol) return zero_exit(m, AlsStatus::zero_collapse);
    // t block, second equation
    dual.s = a_op.t_system(primal.r, dual.r)
                 .adjoint()
                 .solve(gram.g_v.t_system(primal.r, primal.r).apply_adjoint(primal.s),
                        singular);
    if (singular) return zero_exit(m, AlsStatus::singular_system);
    if (dual.s.norm() < kCollapseTol) return zero_exit(m, AlsStatus::zero_collapse);

    if (!primal.all_finite() || !dual.all_finite())
      return zero_exit(m, AlsStatus::singular_system);

    als_detail::rebalance(primal.r, primal.s, &gram);
    als_detail::rebalance(dual.r, dual.s, &gram);
    const double change = product_distance(primal, prev);
    monitor.record(change);
    report.iterations_used = m;
    report.final_change = change;
    prev = primal;

    if (als_detail::eps_rule_active(cfg.stop_rule) && change < cfg.eps) {
      report.converged = true;
      break;
    }
  }

  report.divergence_flag = monitor.divergence();
  report.oscillation_flag = !report.converged && monitor.oscillation(cfg.eps);
  return {primal, dual, report};
}

/// Two decoupled fixed-point loops. Stage 1 approximates the peak direction
/// of the current functional by a symmetric alternation in the V inner
/// product; stage 2 solves the a-form equations tested obliquely against the
/// frozen dual pair.
template <typename Form>
std::tuple<RankOnePair<Complex>, RankOnePair<Complex>, AlsReport> als_dual_greedy(
    const Form& a_op, const GramStructure<Complex>& gram, const CoeffMatrix& rhs_fun,
    const AlsConfig& cfg, const RankOnePair<Complex>* init_primal = nullptr,
    const RankOnePair<Complex>* init_dual = nullptr) {
  using als_detail::kCollapseTol;
  const Eigen::Index dx = rhs_fun.rows();
  const Eigen::Index dt = rhs_fun.cols();

  AlsConfig dual_cfg = cfg;
  dual_cfg.seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
  auto [dual, dual_report] = als_alternate(gram.g_v, rhs_fun, dual_cfg, init_dual,
                                           &gram, /*track_energy=*/true);

  AlsReport report;
  report.iterations_used = dual_report.iterations_used;
  report.energy_monotone = dual_report.energy_monotone;
  if (dual_report.status != AlsStatus::ok || dual.is_zero()) {
    report.status = dual_report.status;
    report.final_change = dual_report.final_change;
    return {als_detail::zero_pair(dx, dt), dual, report};
  }

  RankOnePair<Complex> primal = als_detail::initial_pair(dx, dt, cfg, init_primal);
  RankOnePair<Complex> prev = primal;
  als_detail::ChangeMonitor monitor;

  auto degenerate_exit = [&](int m) {
    report.iterations_used += m;
    report.converged = false;
    report.status = AlsStatus::dual_degenerate;
    return std::make_tuple(als_detail::zero_pair(dx, dt), dual, report);
  };

  for (int m = 1; m <= cfg.m_max; ++m) {
    bool singular = false;
    // a(r (x) s, dr~ (x) s~_n) = <rhs, dr~ (x) s~_n> for all dr~
    primal.r = a_op.x_system(primal.s, dual.s)
                   .solve(rhs_fun * dual.s.conjugate(), singular);
    if (singular) return degenerate_exit(m);
    if (!primal.r.allFinite()) return degenerate_exit(m);
    if (primal.r.norm() < kCollapseTol) {
      report.iterations_used += m;
      report.status = AlsStatus::zero_collapse;
      return {als_detail::zero_pair(dx, dt), dual, report};
    }
    // a(r (x) s, r~_n (x) ds~) = <rhs, r~_n (x) ds~> for all ds~
    primal.s = a_op.t_system(primal.r, dual.r)
                   .solve(rhs_fun.transpose() * dual.r.conjugate(), singular);
    if (singular) return degenerate_exit(m);
    if (!primal.s.allFinite()) return degenerate_exit(m);
    if (primal.s.norm() < kCollapseTol) {
      report.iterations_used += m;
      report.status = AlsStatus::zero_collapse;
      return {als_detail::zero_pair(dx, dt), dual, report};
    }

    als_detail::rebalance(primal.r, primal.s, &gram);
    const double change = product_distance(primal, prev);
    monitor.record(change);
    report.iterations_used = dual_report.iterations_used + m;
    report.final_change = change;
    prev = primal;

    if (als_detail::eps_rule_active(cfg.stop_rule) && change < cfg.eps) {
      report.converged = dual_report.converged;
      break;
    }
  }

  report.divergence_flag = monitor.divergence();
  report.oscillation_flag = !report.converged && monitor.oscillation(cfg.eps);
  return {primal, dual, report};
}

/// Fully coupled primal/dual alternation for the stationarity system
///   <r~ (x) s~, d~>_V = l(d~) - a(u + r (x) s, d~)
///   alpha <r (x) s, d>_V = a(d, r~ (x) s~)
/// solved blockwise: the x block couples (r, r~) through a 2x2 block system,
/// then the t block couples (s, s~). The iterations are not expected to
/// stabilize in general; callers read final_change to decide.
template <typename Form>
std::tuple<RankOnePair<Complex>, RankOnePair<Complex>, AlsReport> als_coupled(
    const Form& a_op, const GramStructure<Complex>& gram, const CoeffMatrix& rhs_fun,
    double alpha, const AlsConfig& cfg,
    const RankOnePair<Complex>* init_primal = nullptr,
    const RankOnePair<Complex>* init_dual = nullptr) {
  using als_detail::kCollapseTol;
  const Eigen::Index dx = rhs_fun.rows();
  const Eigen::Index dt = rhs_fun.cols();

  AlsReport report;
  RankOnePair<Complex> primal = als_detail::initial_pair(dx, dt, cfg, init_primal);
  RankOnePair<Complex> dual = als_detail::initial_pair(dx, dt, cfg, init_dual);
  RankOnePair<Complex> prev = primal;
  als_detail::ChangeMonitor monitor;

  auto zero_exit = [&](int m, AlsStatus status) {
    report.iterations_used = m;
    report.converged = false;
    report.status = status;
    return std::make_tuple(als_detail::zero_pair(dx, dt),
                           als_detail::zero_pair(dx, dt), report);
  };

  auto block_solve = [&](const DenseMatrix<Complex>& ma,
                         const DenseMatrix<Complex>& g_dual,
                         const DenseMatrix<Complex>& g_primal,
                         const CoeffVector& rhs_top, CoeffVector& out_primal,
                         CoeffVector& out_dual) -> bool {
    const Eigen::Index n = ma.rows();
    DenseMatrix<Complex> block(2 * n, 2 * n);
    block.topLeftCorner(n, n) = ma;
    block.topRightCorner(n, n) = g_dual;
    block.bottomLeftCorner(n, n) = alpha * g_primal.adjoint();
    block.bottomRightCorner(n, n) = -ma.adjoint();
    CoeffVector rhs_vec = CoeffVector::Zero(2 * n);
    rhs_vec.head(n) = rhs_top;
    Eigen::FullPivLU<DenseMatrix<Complex>> lu(block);
    if (!lu.isInvertible()) return false;
    const CoeffVector sol = lu.solve(rhs_vec);
    out_primal = sol.head(n);
    out_dual = sol.tail(n);
    return true;
  };

  for (int m = 1; m <= cfg.m_max; ++m) {
    // x block: unknowns (r, r~) with (s, s~) frozen
    if (!block_solve(a_op.x_system(primal.s, dual.s).to_dense(),
                     gram.g_v.x_system(dual.s, dual.s).to_dense(),
                     gram.g_v.x_system(primal.s, primal.s).to_dense(),
                     rhs_fun * dual.s.conjugate(), primal.r, dual.r))
      return zero_exit(m, AlsStatus::singular_system);
    if (!primal.r.allFinite() || !dual.r.allFinite())
      return zero_exit(m, AlsStatus::singular_system);
    if (primal.r.norm() < kCollapseTol || dual.r.norm() < kCollapseTol)
      return zero_exit(m, AlsStatus::zero_collapse);

    // t block: unknowns (s, s~) with the fresh (r, r~)
    if (!block_solve(a_op.t_system(primal.r, dual.r).to_dense(),
                     gram.g_v.t_system(dual.r, dual.r).to_dense(),
                     gram.g_v.t_system(primal.r, primal.r).to_dense(),
                     rhs_fun.transpose() * dual.r.conjugate(), primal.s, dual.s))
      return zero_exit(m, AlsStatus::singular_system);
    if (!primal.s.allFinite() || !dual.s.allFinite())
      return zero_exit(m, AlsStatus::singular_system);
    if (primal.s.norm() < kCollapseTol || dual.s.norm() < kCollapseTol)
      return zero_exit(m, AlsStatus::zero_collapse);

    als_detail::rebalance(primal.r, primal.s, &gram);
    als_detail::rebalance(dual.r, dual.s, &gram);
    const double change = product_distance(primal, prev);
    monitor.record(change);
    report.iterations_used = m;
    report.final_change = change;
    prev = primal;

    if (als_detail::eps_rule_active(cfg.stop_rule) && change < cfg.eps) {
      report.converged = true;
      break;
    }
  }

  report.divergence_flag = monitor.divergence();
  report.oscillation_flag = !report.converged && monitor.oscillation(cfg.eps);
  return {primal, dual, report};
}

}  // namespace pgdlab
