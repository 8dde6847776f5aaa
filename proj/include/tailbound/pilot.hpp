#pragma once

// Design calculators for pilot and follow-up experiments under the two-spike
// Gaussian model. All logarithms are natural.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "tailbound/errors.hpp"
#include "tailbound/kernels.hpp"

namespace tailbound::pilot {

namespace detail {

inline void require_probability(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError(std::string(name) + " must lie in (0, 1)");
}

inline void require_fraction(double zeta) {
  if (!(zeta > 0.0 && zeta <= 1.0)) throw ParameterError("zeta must lie in (0, 1]");
}

inline std::uint64_t ceil_count(double v) {
  if (!std::isfinite(v) || v > 1.8e19) throw ParameterError("sample size overflows");
  return static_cast<std::uint64_t>(std::ceil(v - 1e-12 * std::max(1.0, v)));
}

// Gaussian mass within half a gap of its center, Phi_sigma(g/2) - Phi_sigma(-g/2).
inline double central_mass(double gamma, double sigma) {
  return 1.0 - 2.0 * standard_normal_cdf(-0.5 * gamma / sigma);
}

}  // namespace detail

// Smallest effect a uniform pilot of `budget` replicates detects with
// probability >= 1 - delta: 4 sqrt(log(2/delta) / (zeta^2 B)).
inline double min_detectable_effect(double budget, double zeta, double delta) {
  if (!(budget > 0.0)) throw ParameterError("budget must be positive");
  detail::require_fraction(zeta);
  detail::require_probability(delta, "delta");
  return 4.0 * std::sqrt(std::log(2.0 / delta) / (zeta * zeta * budget));
}

// ceil(4 log(2/delta) / zeta^2).
inline std::uint64_t min_pilot_hypotheses(double zeta, double delta) {
  detail::require_fraction(zeta);
  detail::require_probability(delta, "delta");
  return detail::ceil_count(4.0 * std::log(2.0 / delta) / (zeta * zeta));
}

// Replicates per hypothesis for a follow-up that identifies effects above
// gamma: ceil(gamma^-2 log(n) log(1 / zeta_hat)).
inline std::uint64_t followup_replicates(double n, double gamma, double zeta_hat) {
  if (!(n >= 1.0)) throw ParameterError("n must be >= 1");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(zeta_hat > 0.0 && zeta_hat <= 1.0)) {
    throw ParameterError("zeta_hat must lie in (0, 1]; the follow-up cost is undefined at 0");
  }
  return detail::ceil_count(std::log(n) * std::log(1.0 / zeta_hat) / (gamma * gamma));
}

struct DetectionSampleSize {
  std::uint64_t exact = 0;       // from the Gaussian central mass
  std::uint64_t small_gamma = 0; // 16 sigma^2 log(2/delta) / (zeta^2 gamma^2)
  bool small_gamma_valid = false; // the simplified form is an upper bound when gamma <= sigma
};

// Samples that guarantee zeta_hat(0) > 0 with probability >= 1 - delta
// (alpha = delta) under the two-spike model.
inline DetectionSampleSize detection_sample_complexity(double zeta, double gamma, double sigma,
                                                       double delta) {
  detail::require_fraction(zeta);
  detail::require_probability(delta, "delta");
  if (!(gamma > 0.0 && sigma > 0.0)) throw ParameterError("gamma and sigma must be positive");
  const double l = std::log(2.0 / delta);
  const double mass = detail::central_mass(gamma, sigma);
  DetectionSampleSize out;
  out.exact = detail::ceil_count(2.0 * l / (zeta * zeta * mass * mass));
  out.small_gamma = detail::ceil_count(16.0 * sigma * sigma * l / (zeta * zeta * gamma * gamma));
  out.small_gamma_valid = gamma <= sigma;
  return out;
}

// Samples that guarantee zeta_hat(0) in (zeta/2, zeta] with probability
// >= 1 - delta: log(4/(alpha delta)) / (0.01 (gamma/sigma)^2 zeta)^2,
// valid for gamma <= sigma.
inline std::uint64_t estimation_sample_complexity(double zeta, double gamma, double sigma,
                                                  double delta, double alpha) {
  detail::require_fraction(zeta);
  detail::require_probability(delta, "delta");
  detail::require_probability(alpha, "alpha");
  if (!(gamma > 0.0 && sigma > 0.0)) throw ParameterError("gamma and sigma must be positive");
  if (gamma > sigma) throw ParameterError("estimation bound requires gamma <= sigma");
  const double ratio = gamma / sigma;
  const double dist = 0.01 * ratio * ratio * zeta;
  return detail::ceil_count(std::log(4.0 / (alpha * delta)) / (dist * dist));
}

struct PilotPlan {
  double budget = 0.0;            // B = m * t after rounding
  std::uint64_t hypotheses = 0;   // m
  std::uint64_t replicates = 0;   // t
  double delta = 0.0;
  double zeta = 0.0;
  double min_detectable_gamma = 0.0;
  std::uint64_t required_hypotheses = 0;
  bool feasible = false;
};

// Spreads the budget as widely as possible: m = min(available, B),
// t = floor(B / m). The plan is feasible when m meets the pilot minimum.
inline PilotPlan plan_pilot(std::uint64_t budget, std::uint64_t available, double zeta,
                            double delta) {
  if (budget == 0 || available == 0) throw ParameterError("budget and available must be >= 1");
  PilotPlan plan;
  plan.zeta = zeta;
  plan.delta = delta;
  plan.hypotheses = std::min(available, budget);
  plan.replicates = budget / plan.hypotheses;
  plan.budget = static_cast<double>(plan.hypotheses * plan.replicates);
  plan.required_hypotheses = min_pilot_hypotheses(zeta, delta);
  plan.min_detectable_gamma = min_detectable_effect(plan.budget, zeta, delta);
  plan.feasible = plan.hypotheses >= plan.required_hypotheses;
  return plan;
}

}  // namespace tailbound::pilot
