#pragma once

// Comparison estimators: Bonferroni discovery counting and the grid NPMLE
// plug-in. Neither carries the one-sided guarantee of estimate_zeta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "tailbound/ecdf.hpp"
#include "tailbound/errors.hpp"
#include "tailbound/estimator.hpp"
#include "tailbound/kernels.hpp"

namespace tailbound {

// Critical value c of a one-sided level-(alpha/n) test of H0: mu <= gamma,
// rejecting when X > c. For integer families c is the smallest integer with
// P(X > c | gamma) <= alpha / n.
inline double fwer_critical_value(const ObservationModel& model, double gamma, double alpha,
                                  std::size_t n) {
  detail::require_domain(model, gamma);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (n == 0) throw ParameterError("n must be >= 1");
  const double level = alpha / static_cast<double>(n);
  if (model.family() == Family::gaussian) {
    const boost::math::normal_distribution<double> null(gamma, model.sigma());
    return boost::math::quantile(boost::math::complement(null, level));
  }
  const double upper = model.family() == Family::binomial
                           ? static_cast<double>(model.trials())
                           : std::numeric_limits<double>::infinity();
  double c = std::floor(model.family() == Family::binomial ? gamma * model.trials() : gamma);
  while (c < upper && kernel_sf(model, gamma, c) > level) c += 1.0;
  return c;
}

// Fraction of hypotheses individually rejected by Bonferroni at level alpha.
inline double fwer_count(const EmpiricalCdf& ecdf, const ObservationModel& model, double gamma,
                         double alpha) {
  const double c = fwer_critical_value(model, gamma, alpha, ecdf.size());
  return 1.0 - ecdf(c);
}

struct NpmleConfig {
  std::size_t grid_points = 200;
  double grid_pad = 3.0;
  std::size_t max_iterations = 2000;
  // Stop when the relative log-likelihood gain drops below this.
  double tolerance = 1e-8;
};

struct NpmleFit {
  MixingDistribution mixing;
  MeanGrid grid;
  std::vector<double> grid_weights;
  std::vector<double> log_likelihood;  // one entry per iterate, starting at the uniform weights
  std::size_t iterations = 0;
  bool converged = false;
};

// Fixed-grid nonparametric MLE of the mixing distribution by EM on the
// weights:  w_k <- w_k * (1/n) sum_i f_k(X_i) / sum_l w_l f_l(X_i).
inline NpmleFit npmle_fit(const EmpiricalCdf& ecdf, const ObservationModel& model,
                          const NpmleConfig& cfg = {}) {
  if (cfg.grid_points < 2) throw ParameterError("NPMLE grid needs at least 2 points");
  EstimatorConfig grid_cfg;
  grid_cfg.grid_points = std::max<std::size_t>(cfg.grid_points, 3);
  grid_cfg.grid_pad = cfg.grid_pad;

  NpmleFit fit;
  fit.grid = make_grid(model, ecdf, std::span<const double>{}, grid_cfg);
  const std::size_t K = fit.grid.size();

  // Group tied observations.
  std::vector<double> values;
  std::vector<double> counts;
  for (const auto& j : ecdf.jumps()) {
    values.push_back(j.value);
    counts.push_back((j.right - j.left) * static_cast<double>(ecdf.size()));
  }
  const std::size_t D = values.size();
  const double n = static_cast<double>(ecdf.size());

  std::vector<double> dens(D * K);
  for (std::size_t i = 0; i < D; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      dens[i * K + k] = kernel_density(model, fit.grid.points[k], values[i]);
    }
  }

  std::vector<double> w(K, 1.0 / static_cast<double>(K));
  std::vector<double> mix(D);
  auto evaluate = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += w[k] * dens[i * K + k];
      if (!(s > 0.0)) {
        throw NumericalError("observation " + std::to_string(values[i]) +
                             " has zero likelihood under every grid kernel");
      }
      mix[i] = s;
      ll += counts[i] * std::log(s);
    }
    return ll;
  };

  fit.log_likelihood.push_back(evaluate());
  std::vector<double> next(K);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < D; ++i) {
      const double r = counts[i] / (n * mix[i]);
      for (std::size_t k = 0; k < K; ++k) next[k] += r * dens[i * K + k];
    }
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      w[k] *= next[k];
      total += w[k];
    }
    for (double& x : w) x /= total;
    const double ll = evaluate();
    const double prev = fit.log_likelihood.back();
    fit.log_likelihood.push_back(ll);
    fit.iterations = it + 1;
    if (std::abs(ll - prev) <= cfg.tolerance * std::max(std::abs(prev), 1.0)) {
      fit.converged = true;
      break;
    }
  }
  fit.grid_weights = w;
  fit.mixing = MixingDistribution::from_solver_weights(fit.grid.points, w);
  return fit;
}

// Plug-in estimate: tail mass of a fitted mixing distribution.
inline double plugin_zeta(const MixingDistribution& nu, double gamma) {
  return mixture_tail(nu, gamma);
}

}  // namespace tailbound
