#pragma once

// Observation families f_mu and the CDFs of their finite mixtures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tailbound/errors.hpp"

namespace tailbound {

enum class Family { gaussian, poisson, binomial };
enum class SupportKind { continuous, integer };

// Normal CDF at z via erfc; accurate in both tails.
inline double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double standard_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

class ObservationModel {
 public:
  static ObservationModel gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ParameterError("gaussian scale must be positive and finite");
    }
    return ObservationModel(Family::gaussian, sigma, 0);
  }

  static ObservationModel poisson() { return ObservationModel(Family::poisson, 1.0, 0); }

  static ObservationModel binomial(int trials) {
    if (trials < 1) throw ParameterError("binomial trial count must be >= 1");
    return ObservationModel(Family::binomial, 1.0, trials);
  }

  Family family() const noexcept { return family_; }
  double sigma() const noexcept { return sigma_; }
  int trials() const noexcept { return trials_; }

  SupportKind support_kind() const noexcept {
    return family_ == Family::gaussian ? SupportKind::continuous : SupportKind::integer;
  }
  bool integer_support() const noexcept { return support_kind() == SupportKind::integer; }

  // Mean-parameter domain. Poisson includes the degenerate rate 0.
  double domain_min() const noexcept {
    return family_ == Family::gaussian ? -std::numeric_limits<double>::infinity() : 0.0;
  }
  double domain_max() const noexcept {
    return family_ == Family::binomial ? 1.0 : std::numeric_limits<double>::infinity();
  }
  bool in_domain(double mu) const noexcept {
    if (!std::isfinite(mu)) return false;
    return mu >= domain_min() && mu <= domain_max();
  }

  std::string describe() const {
    switch (family_) {
      case Family::gaussian: return "gaussian:" + format_number(sigma_);
      case Family::poisson: return "poisson";
      case Family::binomial: return "binomial:" + std::to_string(trials_);
    }
    return "unknown";
  }

  friend bool operator==(const ObservationModel&, const ObservationModel&) = default;

 private:
  ObservationModel(Family f, double sigma, int trials) : family_(f), sigma_(sigma), trials_(trials) {}

  static std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
  }

  Family family_;
  double sigma_;
  int trials_;
};

namespace detail {

inline void require_domain(const ObservationModel& model, double mu) {
  if (!model.in_domain(mu)) {
    throw ParameterError("effect size " + std::to_string(mu) + " outside the domain of " +
                         model.describe());
  }
}

// P(X <= k) for integer k, no domain checks.
inline double integer_cdf(const ObservationModel& model, double mu, double k) {
  if (k < 0.0) return 0.0;
  if (model.family() == Family::poisson) {
    if (mu == 0.0) return 1.0;
    return boost::math::gamma_q(k + 1.0, mu);
  }
  const double trials = model.trials();
  if (k >= trials) return 1.0;
  if (mu <= 0.0) return 1.0;
  if (mu >= 1.0) return 0.0;
  return boost::math::ibeta(trials - k, k + 1.0, 1.0 - mu);
}

// P(X > k) for integer k, computed without cancellation.
inline double integer_sf(const ObservationModel& model, double mu, double k) {
  if (k < 0.0) return 1.0;
  if (model.family() == Family::poisson) {
    if (mu == 0.0) return 0.0;
    return boost::math::gamma_p(k + 1.0, mu);
  }
  const double trials = model.trials();
  if (k >= trials) return 0.0;
  if (mu <= 0.0) return 0.0;
  if (mu >= 1.0) return 1.0;
  return boost::math::ibeta(k + 1.0, trials - k, mu);
}

}  // namespace detail

// P(X <= t) for X ~ f_mu.
inline double kernel_cdf(const ObservationModel& model, double mu, double t) {
  detail::require_domain(model, mu);
  if (std::isnan(t)) throw ParameterError("kernel_cdf evaluated at NaN");
  if (t == std::numeric_limits<double>::infinity()) return 1.0;
  if (t == -std::numeric_limits<double>::infinity()) return 0.0;
  if (model.family() == Family::gaussian) return standard_normal_cdf((t - mu) / model.sigma());
  return detail::integer_cdf(model, mu, std::floor(t));
}

// P(X > t) for X ~ f_mu.
inline double kernel_sf(const ObservationModel& model, double mu, double t) {
  detail::require_domain(model, mu);
  if (std::isnan(t)) throw ParameterError("kernel_sf evaluated at NaN");
  if (t == std::numeric_limits<double>::infinity()) return 0.0;
  if (t == -std::numeric_limits<double>::infinity()) return 1.0;
  if (model.family() == Family::gaussian) return standard_normal_cdf((mu - t) / model.sigma());
  return detail::integer_sf(model, mu, std::floor(t));
}

// Density (Gaussian) or probability mass (integer families) of f_mu at x.
inline double kernel_density(const ObservationModel& model, double mu, double x) {
  detail::require_domain(model, mu);
  switch (model.family()) {
    case Family::gaussian:
      return standard_normal_pdf((x - mu) / model.sigma()) / model.sigma();
    case Family::poisson: {
      if (x < 0.0 || x != std::floor(x)) return 0.0;
      if (mu == 0.0) return x == 0.0 ? 1.0 : 0.0;
      return std::exp(x * std::log(mu) - mu - std::lgamma(x + 1.0));
    }
    case Family::binomial: {
      const double trials = model.trials();
      if (x < 0.0 || x > trials || x != std::floor(x)) return 0.0;
      if (mu == 0.0) return x == 0.0 ? 1.0 : 0.0;
      if (mu == 1.0) return x == trials ? 1.0 : 0.0;
      return boost::math::ibeta_derivative(x + 1.0, trials - x + 1.0, mu) / (trials + 1.0);
    }
  }
  return 0.0;
}

// Finite-support distribution over effect sizes.
class MixingDistribution {
 public:
  MixingDistribution() = default;

  // Validates: strictly increasing support, nonnegative weights summing to 1.
  MixingDistribution(std::vector<double> support, std::vector<double> weights)
      : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.empty()) throw ParameterError("mixing distribution needs at least one atom");
    if (support_.size() != weights_.size()) {
      throw ParameterError("support and weights differ in length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
      if (!std::isfinite(support_[i])) throw ParameterError("non-finite support point");
      if (i > 0 && !(support_[i] > support_[i - 1])) {
        throw ParameterError("support must be strictly increasing");
      }
      if (!(weights_[i] >= 0.0)) throw ParameterError("negative mixing weight");
      total += weights_[i];
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError("mixing weights must sum to 1");
  }

  static MixingDistribution point_mass(double x) { return MixingDistribution({x}, {1.0}); }

  // Builds a distribution from solver output: clips round-off negatives,
  // renormalizes, and drops zero atoms.
  static MixingDistribution from_solver_weights(std::span<const double> support,
                                                std::span<const double> weights) {
    std::vector<double> xs;
    std::vector<double> ws;
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) total += std::max(weights[i], 0.0);
    if (!(total > 0.0)) throw NumericalError("solver returned an all-zero mixing distribution");
    for (std::size_t i = 0; i < support.size(); ++i) {
      const double w = std::max(weights[i], 0.0) / total;
      if (w > 0.0) {
        xs.push_back(support[i]);
        ws.push_back(w);
      }
    }
    return MixingDistribution(std::move(xs), std::move(ws));
  }

  const std::vector<double>& support() const noexcept { return support_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return support_.size(); }

  void validate_for(const ObservationModel& model) const {
    for (double x : support_) detail::require_domain(model, x);
  }

 private:
  std::vector<double> support_;
  std::vector<double> weights_;
};

// F_nu(t) = sum_i w_i P(X <= t | mu = x_i).
inline double mixture_cdf(const ObservationModel& model, const MixingDistribution& nu, double t) {
  double total = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    total += nu.weights()[i] * kernel_cdf(model, nu.support()[i], t);
  }
  return std::clamp(total, 0.0, 1.0);
}

// Mass strictly above gamma; an atom at gamma does not count.
inline double mixture_tail(const MixingDistribution& nu, double gamma) {
  double total = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu.support()[i] > gamma) total += nu.weights()[i];
  }
  return std::min(total, 1.0);
}

}  // namespace tailbound
