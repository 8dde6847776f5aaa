#pragma once

// Closed-form quantities for the two-spike Gaussian model, and the
// population-level LP they bound. Used as independent test oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "tailbound/ecdf.hpp"
#include "tailbound/errors.hpp"
#include "tailbound/estimator.hpp"
#include "tailbound/kernels.hpp"

namespace tailbound::theory {

// (1 - zeta) delta_0 + zeta delta_gamma.
inline MixingDistribution two_spike(double zeta, double gamma) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw ParameterError("zeta must lie in [0, 1]");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (zeta == 0.0) return MixingDistribution::point_mass(0.0);
  if (zeta == 1.0) return MixingDistribution::point_mass(gamma);
  return MixingDistribution({0.0, gamma}, {1.0 - zeta, zeta});
}

// The closest distribution with half the tail mass:
// (1 - zeta/2) delta_0 + (zeta/2) delta_{2 gamma}.
inline MixingDistribution nu_opt(double zeta, double gamma) {
  if (!(zeta > 0.0 && zeta <= 1.0)) throw ParameterError("zeta must lie in (0, 1]");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  return MixingDistribution({0.0, 2.0 * gamma}, {1.0 - 0.5 * zeta, 0.5 * zeta});
}

struct ExtremalPoints {
  double t_plus;   // gap F_opt - F_star is positive here
  double t_minus;  // and negative here, with equal magnitude
};

// Critical points of the CDF gap between nu_opt and the two-spike truth
// (unit scale): t = 3g/2 + log(1 -/+ sqrt(1 - exp(-g^2))) / g.
// Written via log1p so that t_plus + t_minus = 2g holds to rounding.
inline ExtremalPoints extremal_points(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be positive");
  const double s = std::sqrt(-std::expm1(-gamma * gamma));
  const double log_plus = std::log1p(s);
  // log(1 - s) = log(1 - s^2) - log(1 + s) = -gamma^2 - log(1 + s)
  const double log_minus = -gamma * gamma - log_plus;
  return {1.5 * gamma + log_minus / gamma, 1.5 * gamma + log_plus / gamma};
}

struct DistanceBound {
  double exact = 0.0;
  double small_gamma = 0.0;  // 23 zeta gamma / (24 sigma sqrt(2 pi))
  bool small_gamma_valid = false;
};

// Lower bound on the distance from the two-spike CDF to any CDF with no mass
// above 0: zeta (Phi_sigma(gamma/2) - Phi_sigma(-gamma/2)).
inline DistanceBound detection_distance_bound(double zeta, double gamma, double sigma) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw ParameterError("zeta must lie in [0, 1]");
  if (!(gamma > 0.0 && sigma > 0.0)) throw ParameterError("gamma and sigma must be positive");
  DistanceBound out;
  out.exact = zeta * (1.0 - 2.0 * standard_normal_cdf(-0.5 * gamma / sigma));
  out.small_gamma = 23.0 * zeta * gamma / (24.0 * sigma * std::sqrt(2.0 * std::numbers::pi));
  out.small_gamma_valid = gamma <= sigma;
  return out;
}

// Lower bound on the distance to any CDF with at most half the tail mass
// above 0: 0.01 (gamma/sigma)^2 zeta, for gamma <= sigma.
inline double estimation_distance_bound(double zeta, double gamma, double sigma) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw ParameterError("zeta must lie in [0, 1]");
  if (!(gamma >= 0.0 && sigma > 0.0)) throw ParameterError("need gamma >= 0 and sigma > 0");
  const double r = gamma / sigma;
  return 0.01 * r * r * zeta;
}

// max_j |F_a(t_j) - F_b(t_j)| over `count` evenly spaced t in [lo, hi].
inline double dense_scan_distance(const ObservationModel& model, const MixingDistribution& a,
                                  const MixingDistribution& b, double lo, double hi,
                                  std::size_t count) {
  if (count < 2 || !(hi > lo)) throw ParameterError("dense scan needs count >= 2 and hi > lo");
  double best = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    best = std::max(best, std::abs(mixture_cdf(model, a, t) - mixture_cdf(model, b, t)));
  }
  return best;
}

// Evaluation abscissae for population distances: `count` points spanning the
// atoms +/- 8 kernel scales (Gaussian), or every integer carrying kernel
// mass above 1e-12 (integer families).
inline std::vector<double> population_points(const ObservationModel& model, double atom_lo,
                                             double atom_hi, std::size_t count = 2000) {
  std::vector<double> pts;
  if (model.family() == Family::gaussian) {
    const double lo = atom_lo - 8.0 * model.sigma();
    const double hi = atom_hi + 8.0 * model.sigma();
    for (std::size_t i = 0; i < count; ++i) {
      pts.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return pts;
  }
  double top = model.family() == Family::binomial ? model.trials() : 0.0;
  if (model.family() == Family::poisson) {
    top = std::ceil(atom_hi);
    while (kernel_sf(model, atom_hi, top) > 1e-12) top += 1.0;
  }
  for (double k = 0.0; k <= top; k += 1.0) pts.push_back(k);
  return pts;
}

// min ||F_nu - F_star||_inf over nu on `grid` with nu((gamma, inf)) <= zeta_cap,
// evaluated on population_points.
inline double population_min_distance(const ObservationModel& model,
                                      const MixingDistribution& nu_star, double zeta_cap,
                                      double gamma, const MeanGrid& grid) {
  nu_star.validate_for(model);
  if (grid.size() == 0) throw ParameterError("empty mean grid");
  for (double x : grid.points) tailbound::detail::require_domain(model, x);
  const double lo = std::min(nu_star.support().front(), grid.points.front());
  const double hi = std::max(nu_star.support().back(), grid.points.back());

  ConstraintPoints cp;
  cp.points = population_points(model, lo, hi);
  for (double t : cp.points) {
    const double f = mixture_cdf(model, nu_star, t);
    cp.lower_env.push_back(f);
    cp.upper_env.push_back(f);
  }
  const auto cdf = tailbound::detail::cdf_matrix(model, cp.points, grid);
  const auto out = tailbound::detail::min_distance_with_tail_cap(
      cdf, cp, tailbound::detail::tail_mask(grid, gamma), zeta_cap);
  if (out.status != lp::Status::optimal) {
    throw NumericalError(std::string("population distance LP ended with status ") +
                         lp::to_string(out.status));
  }
  return out.value;
}

}  // namespace tailbound::theory
