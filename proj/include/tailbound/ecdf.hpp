#pragma once

// Empirical CDFs, the DKW radius, and exact sup-norm distances to mixture CDFs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tailbound/errors.hpp"
#include "tailbound/kernels.hpp"

namespace tailbound {

// tau = sqrt(log(2/alpha) / (2n)): with probability >= 1 - alpha the
// empirical CDF of n iid draws lies within tau of its generating CDF.
inline double dkw_threshold(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (n == 0) throw ParameterError("dkw_threshold needs n >= 1");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

class EmpiricalCdf {
 public:
  struct Jump {
    double value;
    double left;   // F_n(value-)
    double right;  // F_n(value)
  };

  explicit EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw InputError("empirical CDF needs at least one sample");
    for (double x : samples_) {
      if (!std::isfinite(x)) throw InputError("non-finite sample in empirical CDF");
    }
    std::sort(samples_.begin(), samples_.end());
    const double n = static_cast<double>(samples_.size());
    for (std::size_t i = 0; i < samples_.size();) {
      std::size_t j = i;
      while (j < samples_.size() && samples_[j] == samples_[i]) ++j;
      jumps_.push_back({samples_[i], static_cast<double>(i) / n, static_cast<double>(j) / n});
      i = j;
    }
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::span<const double> samples() const noexcept { return samples_; }
  const std::vector<Jump>& jumps() const noexcept { return jumps_; }
  double min() const noexcept { return samples_.front(); }
  double max() const noexcept { return samples_.back(); }

  // F_n(t) = #{X_i <= t} / n.
  double operator()(double t) const {
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), t);
    return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
  }

 private:
  std::vector<double> samples_;
  std::vector<Jump> jumps_;
};

// Finite representation of the sup-norm ball around an empirical CDF.
//
// lower_env[j] = F_n(t_j-) and upper_env[j] = F_n(t_j). A model CDF G that is
// continuous (or shares the empirical CDF's integer steps) satisfies
// sup_t |F_n(t) - G(t)| <= s at the retained points exactly when
//   upper_env[j] - s <= G(t_j) <= lower_env[j] + s   for every j.
struct ConstraintPoints {
  std::vector<double> points;
  std::vector<double> lower_env;
  std::vector<double> upper_env;
  bool coarsened = false;

  std::size_t size() const noexcept { return points.size(); }
};

namespace detail {

inline void require_integer_samples(const EmpiricalCdf& ecdf, const ObservationModel& model) {
  for (double x : ecdf.samples()) {
    if (x != std::floor(x) || x < 0.0 ||
        (model.family() == Family::binomial && x > model.trials())) {
      throw ParameterError("sample " + std::to_string(x) + " outside the support of " +
                           model.describe());
    }
  }
}

// Integers k in [min - 1, max] with F_n(k). Beyond max both CDFs are
// monotone toward 1 and F_n is already 1, so the gap peaks at max; below
// min - 1 the same holds toward 0.
inline ConstraintPoints integer_points(const EmpiricalCdf& ecdf) {
  ConstraintPoints cp;
  const auto lo = static_cast<long long>(ecdf.min()) - 1;
  const auto hi = static_cast<long long>(ecdf.max());
  for (long long k = lo; k <= hi; ++k) {
    const double f = ecdf(static_cast<double>(k));
    cp.points.push_back(static_cast<double>(k));
    cp.lower_env.push_back(f);
    cp.upper_env.push_back(f);
  }
  return cp;
}

inline ConstraintPoints jump_points(const EmpiricalCdf& ecdf) {
  ConstraintPoints cp;
  for (const auto& j : ecdf.jumps()) {
    cp.points.push_back(j.value);
    cp.lower_env.push_back(j.left);
    cp.upper_env.push_back(j.right);
  }
  return cp;
}

inline ConstraintPoints exact_points(const EmpiricalCdf& ecdf, const ObservationModel& model) {
  if (model.integer_support()) {
    require_integer_samples(ecdf, model);
    return integer_points(ecdf);
  }
  return jump_points(ecdf);
}

}  // namespace detail

// sup_t |F_n(t) - F_nu(t)|, exact. Between consecutive jumps F_n is flat and
// F_nu monotone, so the supremum sits at a jump on one side or the other.
inline double sup_distance(const EmpiricalCdf& ecdf, const ObservationModel& model,
                           const MixingDistribution& nu) {
  nu.validate_for(model);
  const auto cp = detail::exact_points(ecdf, model);
  double best = 0.0;
  for (std::size_t j = 0; j < cp.size(); ++j) {
    const double g = mixture_cdf(model, nu, cp.points[j]);
    best = std::max({best, std::abs(g - cp.lower_env[j]), std::abs(g - cp.upper_env[j])});
  }
  return best;
}

// Constraint abscissae for the estimator. With more than max_points candidate
// points, keeps max_points of them at evenly spaced ranks (always the first
// and last). Dropped points only remove constraints, so every mixing
// distribution feasible for the full set stays feasible.
inline ConstraintPoints constraint_points(const EmpiricalCdf& ecdf, const ObservationModel& model,
                                          std::size_t max_points = 1024) {
  if (max_points < 2) throw ParameterError("max_points must be >= 2");
  auto full = detail::exact_points(ecdf, model);
  if (full.size() <= max_points) return full;

  ConstraintPoints cp;
  cp.coarsened = true;
  const std::size_t last = full.size() - 1;
  std::size_t prev = static_cast<std::size_t>(-1);
  for (std::size_t k = 0; k < max_points; ++k) {
    const auto idx = static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(last) /
                     static_cast<double>(max_points - 1)));
    if (idx == prev) continue;
    prev = idx;
    cp.points.push_back(full.points[idx]);
    cp.lower_env.push_back(full.lower_env[idx]);
    cp.upper_env.push_back(full.upper_env[idx]);
  }
  return cp;
}

}  // namespace tailbound
