#pragma once

// Conservative estimate of the mixing mass above a threshold:
//
//   zeta_hat(gamma) = min { nu((gamma, inf)) : ||F_n - F_nu||_inf <= tau(alpha, n) }
//
// with nu restricted to a finite grid of effect sizes. Both the direct
// program and the bisection on the tail-capped distance are solved through
// their LP duals, whose basis is as small as the mean grid rather than the
// number of constraint points. Primal weights come back as the dual
// multipliers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailbound/ecdf.hpp"
#include "tailbound/errors.hpp"
#include "tailbound/kernels.hpp"
#include "tailbound/lp.hpp"

namespace tailbound {

enum class Method { direct_lp, bisect };

inline const char* to_string(Method m) { return m == Method::direct_lp ? "direct" : "bisect"; }

struct EstimatorConfig {
  double alpha = 0.05;
  std::size_t grid_points = 200;
  // Grid extends this many kernel scales beyond the data range.
  double grid_pad = 3.0;
  std::size_t max_constraint_points = 1024;
  Method method = Method::direct_lp;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (grid_points < 3) throw ParameterError("grid_points must be >= 3");
    if (!(grid_pad >= 0.0) || !std::isfinite(grid_pad)) {
      throw ParameterError("grid_pad must be a nonnegative finite number");
    }
    if (max_constraint_points < 2) throw ParameterError("max_constraint_points must be >= 2");
  }
};

// Sorted, strictly increasing effect sizes. Always holds the query
// thresholds exactly (and 0 when it is in the model's domain), so mass can
// sit at a threshold without counting toward the tail.
struct MeanGrid {
  std::vector<double> points;

  std::size_t size() const noexcept { return points.size(); }
  bool contains(double x) const {
    return std::binary_search(points.begin(), points.end(), x);
  }
};

struct ZetaEstimate {
  double gamma = 0.0;
  double zeta_hat = 0.0;
  double alpha = 0.0;
  double tau = 0.0;
  Method method = Method::direct_lp;
  std::size_t n = 0;
  // Solver diagnostics.
  std::string status = "optimal";
  double residual = 0.0;  // exact sup distance of the witness distribution
  std::size_t lp_solves = 0;
  std::size_t lp_iterations = 0;
  std::size_t constraint_points = 0;
  std::size_t grid_size = 0;
  bool coarsened = false;
  MixingDistribution witness;
};

struct EstimateCurve {
  std::vector<ZetaEstimate> entries;
};

namespace detail {

inline double kernel_scale(const ObservationModel& model, const EmpiricalCdf& ecdf) {
  switch (model.family()) {
    case Family::gaussian: return model.sigma();
    case Family::poisson: return std::sqrt(std::max(ecdf.max(), 1.0));
    case Family::binomial: return 1.0;
  }
  return 1.0;
}

// Uniform points on [lo, hi] plus anchors, merged so that no grid point sits
// within a hair of an anchor.
inline MeanGrid build_grid(double lo, double hi, std::size_t count, std::span<const double> anchors) {
  std::vector<double> pts;
  pts.reserve(count + anchors.size());
  if (hi > lo) {
    for (std::size_t i = 0; i < count; ++i) {
      pts.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
  } else {
    pts.push_back(lo);
  }
  const double hair = 1e-10 * std::max(hi - lo, 1.0);
  std::vector<double> sorted_anchors(anchors.begin(), anchors.end());
  std::sort(sorted_anchors.begin(), sorted_anchors.end());
  std::erase_if(pts, [&](double p) {
    const auto it = std::lower_bound(sorted_anchors.begin(), sorted_anchors.end(), p - hair);
    return it != sorted_anchors.end() && *it <= p + hair;
  });
  pts.insert(pts.end(), sorted_anchors.begin(), sorted_anchors.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return MeanGrid{std::move(pts)};
}

}  // namespace detail

// Mean grid spanning the data range padded by grid_pad kernel scales,
// intersected with the model's domain, with 0 and every anchor inserted.
inline MeanGrid make_grid(const ObservationModel& model, const EmpiricalCdf& ecdf,
                          std::span<const double> anchors, const EstimatorConfig& cfg) {
  cfg.validate();
  for (double g : anchors) detail::require_domain(model, g);
  double lo;
  double hi;
  if (model.family() == Family::binomial) {
    lo = 0.0;
    hi = 1.0;
  } else {
    const double pad = cfg.grid_pad * detail::kernel_scale(model, ecdf);
    lo = std::max(ecdf.min() - pad, model.domain_min());
    hi = std::min(ecdf.max() + pad, model.domain_max());
  }
  std::vector<double> all(anchors.begin(), anchors.end());
  if (model.in_domain(0.0)) all.push_back(0.0);
  return detail::build_grid(lo, hi, cfg.grid_points, all);
}

inline MeanGrid make_grid(const ObservationModel& model, const EmpiricalCdf& ecdf, double gamma,
                          const EstimatorConfig& cfg) {
  const double anchors[] = {gamma};
  return make_grid(model, ecdf, std::span<const double>(anchors), cfg);
}

namespace detail {

// cdf[j * cols + k] = P(X <= t_j | mu = grid_k)
struct CdfMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t j, std::size_t k) const { return values[j * cols + k]; }
};

inline CdfMatrix cdf_matrix(const ObservationModel& model, std::span<const double> points,
                            const MeanGrid& grid) {
  CdfMatrix m;
  m.rows = points.size();
  m.cols = grid.size();
  m.values.resize(m.rows * m.cols);
  for (std::size_t j = 0; j < m.rows; ++j) {
    for (std::size_t k = 0; k < m.cols; ++k) {
      m.values[j * m.cols + k] = kernel_cdf(model, grid.points[k], points[j]);
    }
  }
  return m;
}

struct LpOutcome {
  lp::Status status = lp::Status::optimal;
  double value = 0.0;
  std::vector<double> weights;
  std::size_t iterations = 0;
};

inline std::vector<double> weights_from_duals(const lp::LpSolution& sol, std::size_t count) {
  std::vector<double> w(count);
  for (std::size_t k = 0; k < count; ++k) w[k] = std::max(-sol.duals[k], 0.0);
  return w;
}

// min sum_{k in tail} w_k  s.t.  w in simplex,
//   upper_env_j - tau <= (A w)_j <= lower_env_j + tau.
// Solved as the dual
//   max v + sum lo_j z_j - sum hi_j y_j
//   s.t. v + sum_j A_jk (z_j - y_j) <= c_k,  z, y >= 0.
inline LpOutcome min_tail_within(const CdfMatrix& cdf, const ConstraintPoints& cp,
                                 const std::vector<char>& tail, double tau) {
  std::vector<std::size_t> lower_rows;
  std::vector<std::size_t> upper_rows;
  for (std::size_t j = 0; j < cp.size(); ++j) {
    if (cp.upper_env[j] - tau > 0.0) lower_rows.push_back(j);
    if (cp.lower_env[j] + tau < 1.0) upper_rows.push_back(j);
  }
  const std::size_t grid = cdf.cols;
  LpOutcome out;
  if (lower_rows.empty() && upper_rows.empty()) {
    // Only the simplex constraint: park everything on a non-tail point.
    out.weights.assign(grid, 0.0);
    const auto it = std::find(tail.begin(), tail.end(), 0);
    if (it == tail.end()) {
      out.weights[0] = 1.0;
      out.value = 1.0;
    } else {
      out.weights[static_cast<std::size_t>(it - tail.begin())] = 1.0;
    }
    return out;
  }

  const std::size_t nz = lower_rows.size();
  const std::size_t ny = upper_rows.size();
  lp::LinearProgram prog(1 + nz + ny);
  prog.lower[0] = -lp::kInf;
  prog.objective[0] = -1.0;
  for (std::size_t a = 0; a < nz; ++a) prog.objective[1 + a] = -(cp.upper_env[lower_rows[a]] - tau);
  for (std::size_t b = 0; b < ny; ++b) prog.objective[1 + nz + b] = cp.lower_env[upper_rows[b]] + tau;
  prog.rows.reserve(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    std::vector<double> coef(1 + nz + ny);
    coef[0] = 1.0;
    for (std::size_t a = 0; a < nz; ++a) coef[1 + a] = cdf(lower_rows[a], k);
    for (std::size_t b = 0; b < ny; ++b) coef[1 + nz + b] = -cdf(upper_rows[b], k);
    prog.add_row(std::move(coef), lp::Relation::less_equal, tail[k] ? 1.0 : 0.0);
  }
  const auto sol = lp::solve(prog);
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status == lp::Status::optimal) {
    out.value = -sol.objective_value;
    out.weights = weights_from_duals(sol, grid);
  }
  return out;
}

// min s  s.t.  w in simplex, sum_{k in tail} w_k <= cap,
//   upper_env_j - s <= (A w)_j <= lower_env_j + s.
// Dual:
//   max v - cap r + sum b_j z_j - sum a_j y_j
//   s.t. v - r [k in tail] + sum_j A_jk (z_j - y_j) <= 0,  sum z + sum y <= 1.
inline LpOutcome min_distance_with_tail_cap(const CdfMatrix& cdf, const ConstraintPoints& cp,
                                            const std::vector<char>& tail, double cap) {
  std::vector<std::size_t> lower_rows;
  std::vector<std::size_t> upper_rows;
  for (std::size_t j = 0; j < cp.size(); ++j) {
    if (cp.upper_env[j] > 0.0) lower_rows.push_back(j);
    if (cp.lower_env[j] < 1.0) upper_rows.push_back(j);
  }
  const bool any_tail = std::find(tail.begin(), tail.end(), 1) != tail.end();
  const bool capped = any_tail && cap < 1.0;
  const std::size_t grid = cdf.cols;
  const std::size_t nz = lower_rows.size();
  const std::size_t ny = upper_rows.size();
  const std::size_t off = capped ? 2 : 1;

  lp::LinearProgram prog(off + nz + ny);
  prog.lower[0] = -lp::kInf;
  prog.objective[0] = -1.0;
  if (capped) prog.objective[1] = std::max(cap, 0.0);
  for (std::size_t a = 0; a < nz; ++a) prog.objective[off + a] = -cp.upper_env[lower_rows[a]];
  for (std::size_t b = 0; b < ny; ++b) prog.objective[off + nz + b] = cp.lower_env[upper_rows[b]];
  prog.rows.reserve(grid + 1);
  for (std::size_t k = 0; k < grid; ++k) {
    std::vector<double> coef(off + nz + ny);
    coef[0] = 1.0;
    if (capped) coef[1] = tail[k] ? -1.0 : 0.0;
    for (std::size_t a = 0; a < nz; ++a) coef[off + a] = cdf(lower_rows[a], k);
    for (std::size_t b = 0; b < ny; ++b) coef[off + nz + b] = -cdf(upper_rows[b], k);
    prog.add_row(std::move(coef), lp::Relation::less_equal, 0.0);
  }
  std::vector<double> srow(off + nz + ny, 0.0);
  for (std::size_t a = 0; a < nz + ny; ++a) srow[off + a] = 1.0;
  prog.add_row(std::move(srow), lp::Relation::less_equal, 1.0);

  const auto sol = lp::solve(prog);
  LpOutcome out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status == lp::Status::optimal) {
    out.value = std::max(-sol.objective_value, 0.0);
    out.weights = weights_from_duals(sol, grid);
  }
  return out;
}

inline std::vector<char> tail_mask(const MeanGrid& grid, double gamma) {
  std::vector<char> mask(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) mask[k] = grid.points[k] > gamma ? 1 : 0;
  return mask;
}

// Everything one data set needs, shared across thresholds.
struct Problem {
  const EmpiricalCdf* ecdf;
  ObservationModel model;
  EstimatorConfig cfg;
  MeanGrid grid;
  ConstraintPoints cp;
  CdfMatrix cdf;
  double tau;

  Problem(const EmpiricalCdf& e, const ObservationModel& m, std::span<const double> gammas,
          const EstimatorConfig& c)
      : ecdf(&e),
        model(m),
        cfg(c),
        grid(make_grid(m, e, gammas, c)),
        cp(constraint_points(e, m, c.max_constraint_points)),
        cdf(cdf_matrix(m, cp.points, grid)),
        tau(dkw_threshold(c.alpha, e.size())) {}

  ZetaEstimate blank(double gamma, Method method) const {
    ZetaEstimate est;
    est.gamma = gamma;
    est.alpha = cfg.alpha;
    est.tau = tau;
    est.method = method;
    est.n = ecdf->size();
    est.constraint_points = cp.size();
    est.grid_size = grid.size();
    est.coarsened = cp.coarsened;
    return est;
  }

  void attach_witness(ZetaEstimate& est, const std::vector<double>& weights) const {
    est.witness = MixingDistribution::from_solver_weights(grid.points, weights);
    est.residual = sup_distance(*ecdf, model, est.witness);
  }

  [[noreturn]] void fail(const LpOutcome& out, double gamma) const {
    if (out.status == lp::Status::unbounded || out.status == lp::Status::infeasible) {
      throw ModelMisfit("no mixture of " + model.describe() + " kernels lies within tau = " +
                        std::to_string(tau) + " of the data (gamma = " + std::to_string(gamma) +
                        ")");
    }
    throw NumericalError(std::string("LP solver stopped with status ") + lp::to_string(out.status) +
                         " after " + std::to_string(out.iterations) + " iterations");
  }

  ZetaEstimate direct(double gamma) const {
    auto est = blank(gamma, Method::direct_lp);
    const auto tail = tail_mask(grid, gamma);
    const auto out = min_tail_within(cdf, cp, tail, tau);
    est.lp_solves = 1;
    est.lp_iterations = out.iterations;
    if (out.status != lp::Status::optimal) fail(out, gamma);
    est.zeta_hat = std::clamp(out.value, 0.0, 1.0) + 0.0;  // no -0
    attach_witness(est, out.weights);
    return est;
  }

  LpOutcome statistic(double gamma, double zeta) const {
    return min_distance_with_tail_cap(cdf, cp, tail_mask(grid, gamma), zeta);
  }

  // Binary search over i/n, rejecting "at most i/n mass above gamma" when the
  // best tail-capped fit is farther than tau. A rejection must clear tau by
  // 1e-9 so that solver round-off never tips the search upward.
  ZetaEstimate bisect(double gamma) const {
    auto est = blank(gamma, Method::bisect);
    const std::size_t n = ecdf->size();
    auto reject = [&](const LpOutcome& out) { return out.value > tau + 1e-9; };

    auto full = statistic(gamma, 1.0);
    est.lp_solves = 1;
    est.lp_iterations = full.iterations;
    if (full.status != lp::Status::optimal) fail(full, gamma);
    if (reject(full)) {
      full.status = lp::Status::infeasible;
      fail(full, gamma);
    }

    std::size_t i_min = 0;
    std::size_t i_max = n;
    std::vector<double> accepted = full.weights;
    while (i_max - i_min > 1) {
      const std::size_t i_avg = (i_min + i_max) / 2;
      const auto out = statistic(gamma, static_cast<double>(i_avg) / static_cast<double>(n));
      ++est.lp_solves;
      est.lp_iterations += out.iterations;
      if (out.status != lp::Status::optimal) fail(out, gamma);
      if (reject(out)) {
        i_min = i_avg;
      } else {
        i_max = i_avg;
        accepted = out.weights;
      }
    }
    est.zeta_hat = static_cast<double>(i_min) / static_cast<double>(n);
    attach_witness(est, accepted);
    return est;
  }

  ZetaEstimate run(double gamma, Method method) const {
    return method == Method::direct_lp ? direct(gamma) : bisect(gamma);
  }
};

}  // namespace detail

// Direct program: one LP.
inline ZetaEstimate estimate_zeta(const EmpiricalCdf& ecdf, const ObservationModel& model,
                                  double gamma, const EstimatorConfig& cfg) {
  const double gammas[] = {gamma};
  const detail::Problem problem(ecdf, model, gammas, cfg);
  return problem.direct(gamma);
}

// T(X; zeta, gamma) = min over nu with tail(nu, gamma) <= zeta of ||F_n - F_nu||_inf.
inline double test_statistic(const EmpiricalCdf& ecdf, const ObservationModel& model, double gamma,
                             double zeta, const EstimatorConfig& cfg) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw ParameterError("zeta must lie in [0, 1]");
  const double gammas[] = {gamma};
  const detail::Problem problem(ecdf, model, gammas, cfg);
  const auto out = problem.statistic(gamma, zeta);
  if (out.status != lp::Status::optimal) problem.fail(out, gamma);
  return out.value;
}

// Binary search over i/n with the tail-capped distance as the test.
inline ZetaEstimate estimate_zeta_bisect(const EmpiricalCdf& ecdf, const ObservationModel& model,
                                         double gamma, const EstimatorConfig& cfg) {
  const double gammas[] = {gamma};
  const detail::Problem problem(ecdf, model, gammas, cfg);
  return problem.bisect(gamma);
}

// One estimate per threshold at a common alpha: the guarantee holds for all
// thresholds at once, so no multiplicity correction. All thresholds share
// one mean grid, which makes the curve nonincreasing up to solver round-off;
// that round-off is removed with a running minimum.
inline EstimateCurve estimate_curve(const EmpiricalCdf& ecdf, const ObservationModel& model,
                                    std::span<const double> gammas, const EstimatorConfig& cfg) {
  if (gammas.empty()) throw ParameterError("estimate_curve needs at least one threshold");
  if (!std::is_sorted(gammas.begin(), gammas.end())) {
    throw ParameterError("thresholds must be sorted ascending");
  }
  const detail::Problem problem(ecdf, model, gammas, cfg);
  EstimateCurve curve;
  curve.entries.reserve(gammas.size());
  for (double g : gammas) {
    auto est = problem.run(g, cfg.method);
    if (!curve.entries.empty()) {
      est.zeta_hat = std::min(est.zeta_hat, curve.entries.back().zeta_hat);
    }
    curve.entries.push_back(std::move(est));
  }
  return curve;
}

// Dispatches on cfg.method.
inline ZetaEstimate estimate(const EmpiricalCdf& ecdf, const ObservationModel& model, double gamma,
                             const EstimatorConfig& cfg) {
  return cfg.method == Method::direct_lp ? estimate_zeta(ecdf, model, gamma, cfg)
                                         : estimate_zeta_bisect(ecdf, model, gamma, cfg);
}

}  // namespace tailbound
