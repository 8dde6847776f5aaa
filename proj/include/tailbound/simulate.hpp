#pragma once

// Synthetic data and the Monte Carlo drivers behind the convergence,
// detection, conservativeness and beta-mixture experiments.
//
// Every trial draws from its own generator keyed by (seed, cell, trial), so
// trials can run on any number of threads and still give bit-identical
// reports.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "json.hpp"
#include "tailbound/baselines.hpp"
#include "tailbound/ecdf.hpp"
#include "tailbound/errors.hpp"
#include "tailbound/estimator.hpp"
#include "tailbound/kernels.hpp"
#include "tailbound/theory.hpp"

namespace tailbound::sim {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (seed, cell, trial).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t trial) {
  return splitmix64(splitmix64(splitmix64(seed) ^ (cell + 0x632be59bd9b4e019ULL)) ^ trial);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t cell = 0, std::uint64_t trial = 0) {
  return Rng(derive_seed(seed, cell, trial));
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
// written by index; the first exception is rethrown.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

struct Draws {
  std::vector<double> means;
  std::vector<double> observations;
};

inline double draw_observation(const ObservationModel& model, double mu, Rng& rng) {
  switch (model.family()) {
    case Family::gaussian: return std::normal_distribution<double>(mu, model.sigma())(rng);
    case Family::poisson:
      if (mu == 0.0) return 0.0;
      return static_cast<double>(std::poisson_distribution<long long>(mu)(rng));
    case Family::binomial:
      return static_cast<double>(std::binomial_distribution<int>(model.trials(), mu)(rng));
  }
  return 0.0;
}

// mu_i ~ nu, X_i ~ f_{mu_i}.
inline Draws sample_mixture(const ObservationModel& model, const MixingDistribution& nu,
                            std::size_t n, Rng& rng) {
  nu.validate_for(model);
  std::vector<double> cumulative(nu.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) cumulative[i] = (acc += nu.weights()[i]);
  std::uniform_real_distribution<double> unif(0.0, acc);
  Draws d;
  d.means.reserve(n);
  d.observations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(rng);
    auto idx = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    idx = std::min(idx, nu.size() - 1);
    const double mu = nu.support()[idx];
    d.means.push_back(mu);
    d.observations.push_back(draw_observation(model, mu, rng));
  }
  return d;
}

struct TwoSpikeConfig {
  double zeta_star = 0.1;
  double gamma_star = 1.0;
  double sigma = 1.0;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(zeta_star >= 0.0 && zeta_star <= 1.0)) throw ParameterError("zeta_star must lie in [0, 1]");
    if (!(gamma_star > 0.0)) throw ParameterError("gamma_star must be positive");
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  }
};

inline Draws draw_two_spike(const TwoSpikeConfig& cfg, Rng& rng) {
  cfg.validate();
  std::bernoulli_distribution alt(cfg.zeta_star);
  std::normal_distribution<double> noise(0.0, cfg.sigma);
  Draws d;
  d.means.reserve(cfg.n);
  d.observations.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const double mu = alt(rng) ? cfg.gamma_star : 0.0;
    d.means.push_back(mu);
    d.observations.push_back(mu + noise(rng));
  }
  return d;
}

inline Draws draw_two_spike(const TwoSpikeConfig& cfg) {
  auto rng = make_rng(cfg.seed);
  return draw_two_spike(cfg, rng);
}

inline std::vector<double> sample_two_spike(const TwoSpikeConfig& cfg) {
  return draw_two_spike(cfg).observations;
}

// Null spike plus a scaled, shifted Beta alternative:
//   mu ~ (1 - a) delta_{null} + a (shift + scale * Beta(beta_a, beta_b)).
struct BetaMixtureConfig {
  ObservationModel model = ObservationModel::poisson();
  double null_mean = 1.0;
  double alt_fraction = 0.2;
  double beta_a = 2.0;
  double beta_b = 5.0;
  double scale = 5.0;
  double shift = 2.0;
  std::size_t n = 100000;
  std::uint64_t seed = 0;

  // Fraction of means strictly above gamma.
  double true_tail(double gamma) const {
    double tail = null_mean > gamma ? 1.0 - alt_fraction : 0.0;
    const double u = (gamma - shift) / scale;
    const double alt_tail =
        u < 0.0 ? 1.0 : (u >= 1.0 ? 0.0 : boost::math::ibetac(beta_a, beta_b, u));
    return tail + alt_fraction * alt_tail;
  }
};

// lambda ~ 0.8 delta_1 + 0.2 (5 Beta(2, 5) + 2), Poisson counts.
inline BetaMixtureConfig poisson_beta_scenario(std::size_t n = 100000, std::uint64_t seed = 0) {
  return {ObservationModel::poisson(), 1.0, 0.2, 2.0, 5.0, 5.0, 2.0, n, seed};
}

// p ~ 0.9 delta_0.5 + 0.1 (0.5 Beta(2, 5) + 0.5), Binomial(20) counts.
inline BetaMixtureConfig binomial_beta_scenario(std::size_t n = 100000, std::uint64_t seed = 0) {
  return {ObservationModel::binomial(20), 0.5, 0.1, 2.0, 5.0, 0.5, 0.5, n, seed};
}

inline Draws sample_beta_mixture(const BetaMixtureConfig& cfg) {
  detail::require_domain(cfg.model, cfg.null_mean);
  detail::require_domain(cfg.model, cfg.shift);
  detail::require_domain(cfg.model, cfg.shift + cfg.scale);
  if (!(cfg.alt_fraction >= 0.0 && cfg.alt_fraction <= 1.0)) {
    throw ParameterError("alt_fraction must lie in [0, 1]");
  }
  if (!(cfg.beta_a > 0.0 && cfg.beta_b > 0.0)) throw ParameterError("beta shapes must be positive");
  auto rng = make_rng(cfg.seed);
  std::bernoulli_distribution alt(cfg.alt_fraction);
  std::gamma_distribution<double> ga(cfg.beta_a, 1.0);
  std::gamma_distribution<double> gb(cfg.beta_b, 1.0);
  Draws d;
  d.means.reserve(cfg.n);
  d.observations.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    double mu = cfg.null_mean;
    if (alt(rng)) {
      const double x = ga(rng);
      const double y = gb(rng);
      mu = cfg.shift + cfg.scale * (x / (x + y));
    }
    mu = std::clamp(mu, cfg.model.domain_min(), cfg.model.domain_max());
    d.means.push_back(mu);
    d.observations.push_back(draw_observation(cfg.model, mu, rng));
  }
  return d;
}

// Summary statistics.

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ParameterError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct Interval {
  double low;
  double high;
};

// Percentile bootstrap interval of the median.
inline Interval bootstrap_median_interval(const std::vector<double>& v, double level,
                                          std::size_t resamples, Rng& rng) {
  if (v.empty()) throw ParameterError("bootstrap of an empty sample");
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> medians(resamples);
  std::vector<double> buf(v.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& x : buf) x = v[pick(rng)];
    medians[b] = median(buf);
  }
  const double tail = 0.5 * (1.0 - level);
  return {quantile(medians, tail), quantile(std::move(medians), 1.0 - tail)};
}

inline double monte_carlo_slack(double p, std::size_t trials) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

struct ExperimentReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  // One vector of per-trial estimates per row (empty for single-draw scenarios).
  std::vector<std::vector<double>> trial_estimates;
};

struct RunOptions {
  EstimatorConfig estimator;
  std::size_t threads = 1;
  std::size_t bootstrap_resamples = 1000;
};

// zeta_hat curves (trials x gammas) for repeated draws of one scenario.
template <typename Sampler>
std::vector<std::vector<double>> replicate_curves(Sampler&& sampler, const ObservationModel& model,
                                                  std::span<const double> gammas,
                                                  std::size_t trials, std::uint64_t seed,
                                                  std::uint64_t cell, const RunOptions& opt) {
  std::vector<std::vector<double>> out(trials);
  parallel_for(trials, opt.threads, [&](std::size_t t) {
    auto rng = make_rng(seed, cell, t);
    const EmpiricalCdf ecdf(sampler(rng));
    const auto curve = estimate_curve(ecdf, model, gammas, opt.estimator);
    out[t].reserve(gammas.size());
    for (const auto& e : curve.entries) out[t].push_back(e.zeta_hat);
  });
  return out;
}

// Median and bootstrap 90% interval of zeta_hat(0) on two-spike data with
// zeta_star = 0.1, for each (gamma_star, n).
inline ExperimentReport run_convergence_experiment(std::span<const double> gamma_stars,
                                                   std::span<const std::size_t> n_values,
                                                   std::size_t trials, double alpha,
                                                   std::uint64_t seed, RunOptions opt = {},
                                                   double zeta_star = 0.1, double sigma = 1.0) {
  if (trials == 0) throw ParameterError("trials must be >= 1");
  opt.estimator.alpha = alpha;
  ExperimentReport rep;
  rep.scenario = "convergence";
  rep.seed = seed;
  rep.trials = trials;
  rep.parameters = {{"zeta_star", zeta_star}, {"sigma", sigma}, {"alpha", alpha},
                    {"gamma", 0.0}, {"bootstrap_resamples", opt.bootstrap_resamples}};
  rep.columns = {"gamma_star", "n", "median", "ci_low", "ci_high", "max", "overestimate_rate"};
  const double zero[] = {0.0};
  std::uint64_t cell = 0;
  for (double g : gamma_stars) {
    for (std::size_t n : n_values) {
      const TwoSpikeConfig tc{zeta_star, g, sigma, n, seed};
      const auto curves = replicate_curves(
          [&](Rng& rng) { return draw_two_spike(tc, rng).observations; },
          ObservationModel::gaussian(sigma), zero, trials, seed, cell, opt);
      std::vector<double> est;
      for (const auto& c : curves) est.push_back(c[0]);
      auto boot_rng = make_rng(seed, cell, 0xb007ULL << 32);
      const auto ci = bootstrap_median_interval(est, 0.9, opt.bootstrap_resamples, boot_rng);
      const double over = static_cast<double>(std::count_if(
                              est.begin(), est.end(),
                              [&](double z) { return z > zeta_star + 1e-9; })) /
                          static_cast<double>(trials);
      rep.rows.push_back({g, static_cast<double>(n), median(est), ci.low, ci.high,
                          *std::max_element(est.begin(), est.end()), over});
      rep.trial_estimates.push_back(std::move(est));
      ++cell;
    }
  }
  return rep;
}

// Empirical P(zeta_hat(0) > zeta_star / 2) on a (zeta_star, gamma_star) grid.
inline ExperimentReport run_detection_heatmap(std::span<const double> zeta_grid,
                                              std::span<const double> gamma_grid, std::size_t n,
                                              std::size_t trials, double alpha,
                                              std::uint64_t seed, RunOptions opt = {},
                                              double sigma = 1.0) {
  if (trials == 0) throw ParameterError("trials must be >= 1");
  opt.estimator.alpha = alpha;
  ExperimentReport rep;
  rep.scenario = "heatmap";
  rep.seed = seed;
  rep.trials = trials;
  rep.parameters = {{"n", n}, {"sigma", sigma}, {"alpha", alpha}, {"gamma", 0.0}};
  rep.columns = {"zeta_star", "gamma_star", "detection_rate", "median"};
  const double zero[] = {0.0};
  std::uint64_t cell = 0;
  for (double z : zeta_grid) {
    for (double g : gamma_grid) {
      const TwoSpikeConfig tc{z, g, sigma, n, seed};
      const auto curves = replicate_curves(
          [&](Rng& rng) { return draw_two_spike(tc, rng).observations; },
          ObservationModel::gaussian(sigma), zero, trials, seed, cell, opt);
      std::vector<double> est;
      for (const auto& c : curves) est.push_back(c[0]);
      const double hits = static_cast<double>(
          std::count_if(est.begin(), est.end(), [&](double v) { return v > 0.5 * z; }));
      rep.rows.push_back({z, g, hits / static_cast<double>(trials), median(est)});
      rep.trial_estimates.push_back(std::move(est));
      ++cell;
    }
  }
  return rep;
}

// Frequency of trials in which zeta_hat(gamma) > zeta_nu*(gamma) for some
// gamma in the grid. The guarantee bounds it by alpha.
inline ExperimentReport run_conservativeness_trial(const MixingDistribution& nu_star,
                                                   const ObservationModel& model, std::size_t n,
                                                   std::size_t trials, double alpha,
                                                   std::span<const double> gammas,
                                                   std::uint64_t seed, RunOptions opt = {}) {
  if (trials == 0) throw ParameterError("trials must be >= 1");
  opt.estimator.alpha = alpha;
  const auto curves = replicate_curves(
      [&](Rng& rng) { return sample_mixture(model, nu_star, n, rng).observations; }, model,
      gammas, trials, seed, 0, opt);

  ExperimentReport rep;
  rep.scenario = "conservativeness";
  rep.seed = seed;
  rep.trials = trials;
  rep.parameters = {{"model", model.describe()},
                    {"n", n},
                    {"alpha", alpha},
                    {"nu_star_support", nu_star.support()},
                    {"nu_star_weights", nu_star.weights()}};
  rep.columns = {"gamma", "truth", "mean", "max", "overestimate_rate"};

  std::size_t any_over = 0;
  std::vector<std::size_t> over_at(gammas.size(), 0);
  for (const auto& c : curves) {
    bool any = false;
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      if (c[k] > mixture_tail(nu_star, gammas[k]) + 1e-9) {
        ++over_at[k];
        any = true;
      }
    }
    if (any) ++any_over;
  }
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    std::vector<double> est;
    for (const auto& c : curves) est.push_back(c[k]);
    double mean = 0.0;
    for (double v : est) mean += v;
    mean /= static_cast<double>(trials);
    rep.rows.push_back({gammas[k], mixture_tail(nu_star, gammas[k]), mean,
                        *std::max_element(est.begin(), est.end()),
                        static_cast<double>(over_at[k]) / static_cast<double>(trials)});
    rep.trial_estimates.push_back(std::move(est));
  }
  const double freq = static_cast<double>(any_over) / static_cast<double>(trials);
  rep.summary = {{"overestimate_frequency", freq},
                 {"bound", alpha + monte_carlo_slack(alpha, trials)}};
  return rep;
}

// One draw of a beta-mixture scenario: true tail, estimator and Bonferroni
// count across thresholds.
inline ExperimentReport run_beta_mixture_scenario(const BetaMixtureConfig& cfg,
                                                  std::span<const double> gammas,
                                                  RunOptions opt = {}) {
  const auto draws = sample_beta_mixture(cfg);
  const EmpiricalCdf ecdf(draws.observations);
  const auto curve = estimate_curve(ecdf, cfg.model, gammas, opt.estimator);
  ExperimentReport rep;
  rep.scenario = "beta-mixture";
  rep.seed = cfg.seed;
  rep.trials = 1;
  rep.parameters = {{"model", cfg.model.describe()}, {"null_mean", cfg.null_mean},
                    {"alt_fraction", cfg.alt_fraction}, {"beta_a", cfg.beta_a},
                    {"beta_b", cfg.beta_b}, {"scale", cfg.scale}, {"shift", cfg.shift},
                    {"n", cfg.n}, {"alpha", opt.estimator.alpha}};
  rep.columns = {"gamma", "truth", "zeta_hat", "zeta_fwer"};
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    rep.rows.push_back({gammas[k], cfg.true_tail(gammas[k]), curve.entries[k].zeta_hat,
                        fwer_count(ecdf, cfg.model, gammas[k], opt.estimator.alpha)});
  }
  return rep;
}

// Fraction of trials with zeta_hat(0) > 0 under a two-spike model.
inline ExperimentReport run_detection_rate(const TwoSpikeConfig& tc, std::size_t trials,
                                           double alpha, RunOptions opt = {}) {
  if (trials == 0) throw ParameterError("trials must be >= 1");
  opt.estimator.alpha = alpha;
  const double zero[] = {0.0};
  const auto curves = replicate_curves(
      [&](Rng& rng) { return draw_two_spike(tc, rng).observations; },
      ObservationModel::gaussian(tc.sigma), zero, trials, tc.seed, 0, opt);
  std::vector<double> est;
  for (const auto& c : curves) est.push_back(c[0]);
  const double hits = static_cast<double>(
      std::count_if(est.begin(), est.end(), [](double v) { return v > 0.0; }));
  ExperimentReport rep;
  rep.scenario = "detection";
  rep.seed = tc.seed;
  rep.trials = trials;
  rep.parameters = {{"zeta_star", tc.zeta_star}, {"gamma_star", tc.gamma_star},
                    {"sigma", tc.sigma}, {"n", tc.n}, {"alpha", alpha}};
  rep.columns = {"detection_rate", "median"};
  rep.rows.push_back({hits / static_cast<double>(trials), median(est)});
  rep.trial_estimates.push_back(std::move(est));
  return rep;
}

}  // namespace tailbound::sim
