#pragma once

// Command-line front end. run() returns the process exit code:
// 0 success, 1 usage or parameter error, 2 data error, 3 numerical error or
// model misfit.

#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tailbound/tailbound.hpp"

namespace tailbound::cli {

using report::Json;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct GlobalOptions {
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::string model = "gaussian:1";
  std::size_t grid_points = 200;
  std::size_t max_constraint_points = 1024;
  std::string method = "direct";
  std::string output = "json";
  std::size_t threads = 1;
  bool quiet = false;
};

struct DataOptions {
  std::string path;
  std::string id_column;
  std::vector<std::string> replicate_columns;
};

// "gaussian:SIGMA", "gaussian:fit", "poisson" or "binomial:T". A fitted
// Gaussian scale comes from the data, so resolution needs the samples.
struct ModelSpec {
  Family family = Family::gaussian;
  bool fit_sigma = false;
  double sigma = 1.0;
  int trials = 0;

  static ModelSpec parse(const std::string& text) {
    ModelSpec m;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    const auto number = [&](const char* what) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(arg, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (arg.empty() || used != arg.size()) {
        throw ParameterError(std::string("--model ") + name + " needs a numeric " + what);
      }
      return v;
    };
    if (name == "gaussian") {
      if (arg == "fit") {
        m.fit_sigma = true;
      } else {
        m.sigma = number("sigma");
        if (!(m.sigma > 0.0)) throw ParameterError("gaussian sigma must be positive");
      }
    } else if (name == "poisson") {
      if (!arg.empty()) throw ParameterError("poisson takes no parameter");
      m.family = Family::poisson;
    } else if (name == "binomial") {
      m.family = Family::binomial;
      const double t = number("trial count");
      if (!(t >= 1.0) || t != static_cast<double>(static_cast<int>(t))) {
        throw ParameterError("binomial trial count must be a positive integer");
      }
      m.trials = static_cast<int>(t);
    } else {
      throw ParameterError("unknown model '" + text +
                           "' (expected gaussian:SIGMA, gaussian:fit, poisson, binomial:T)");
    }
    return m;
  }

  ObservationModel resolve(const std::vector<double>* samples, Json& config) const {
    switch (family) {
      case Family::poisson: return ObservationModel::poisson();
      case Family::binomial: return ObservationModel::binomial(trials);
      case Family::gaussian: break;
    }
    if (!fit_sigma) return ObservationModel::gaussian(sigma);
    if (samples == nullptr) throw ParameterError("gaussian:fit needs input data");
    const auto fit = io::fit_null_scale(*samples);
    config["fitted_sigma"] = fit.sigma;
    return ObservationModel::gaussian(fit.sigma);
  }
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Conservative estimation of the fraction of effects above a threshold",
                 "tailbound"};
    app.set_version_flag("--version", std::string(report::kVersion));
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Flat key=value file; command-line flags win");
    add_globals(app);
    register_estimate(app);
    register_curve(app);
    register_baseline(app);
    register_simulate(app);
    register_pilot(app);
    register_fit_null(app);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kOk : kUsage;
    }
    try {
      action_();
      return kOk;
    } catch (const ParameterError& e) {
      err_ << "error: " << e.what() << '\n';
      return kUsage;
    } catch (const InputError& e) {
      err_ << "data error: " << e.what() << '\n';
      return kData;
    } catch (const ModelMisfit& e) {
      err_ << "model misfit: " << e.what() << '\n';
      return kNumerical;
    } catch (const NumericalError& e) {
      err_ << "numerical error: " << e.what() << '\n';
      return kNumerical;
    } catch (const std::invalid_argument& e) {
      err_ << "error: " << e.what() << '\n';
      return kUsage;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return kNumerical;
    }
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  GlobalOptions g_;
  std::function<void()> action_;

  // Subcommand state; each process runs one command.
  DataOptions data_;
  double gamma_ = 0.0;
  std::vector<double> gammas_;
  double gamma_min_ = 0.0;
  double gamma_max_ = 3.0;
  std::size_t gamma_steps_ = 31;
  std::size_t npmle_iterations_ = 2000;

  std::string scenario_;
  std::vector<double> gamma_stars_;
  std::vector<double> zeta_stars_;
  std::vector<std::size_t> n_values_;
  std::size_t n_ = 0;
  std::size_t trials_ = 0;
  double zeta_star_ = 0.1;
  double gamma_star_ = 1.0;
  double sigma_ = 1.0;
  std::string family_ = "poisson";
  std::size_t bootstrap_ = 1000;

  double budget_ = 0.0;
  std::uint64_t available_ = 0;
  double zeta_ = 0.1;
  double delta_ = 0.05;
  double zeta_hat_ = 0.0;
  double count_n_ = 0.0;
  bool estimation_ = false;

  void add_globals(CLI::App& app) {
    app.add_option("--seed", g_.seed, "Random seed")->capture_default_str();
    app.add_option("--alpha", g_.alpha, "Error level")->capture_default_str();
    app.add_option("--model", g_.model, "gaussian:SIGMA | gaussian:fit | poisson | binomial:T")
        ->capture_default_str();
    app.add_option("--grid-points", g_.grid_points, "Mean grid size")->capture_default_str();
    app.add_option("--max-constraint-points", g_.max_constraint_points,
                   "Cap on CDF constraint points")
        ->capture_default_str();
    app.add_option("--method", g_.method, "direct | bisect")
        ->check(CLI::IsMember({"direct", "bisect"}))
        ->capture_default_str();
    app.add_option("--output", g_.output, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_option("--threads", g_.threads, "Worker threads for simulations (0 = all cores)")
        ->capture_default_str();
    app.add_flag("--quiet", g_.quiet, "No progress messages on stderr");
  }

  void add_data(CLI::App* sub) {
    sub->add_option("--data", data_.path, "Tab-delimited input ('-' for stdin)")->required();
    sub->add_option("--id-column", data_.id_column, "Identifier column (default: first)");
    sub->add_option("--replicate-columns", data_.replicate_columns,
                    "Replicate columns (default: all others)")
        ->delimiter(',');
  }

  void add_gamma_grid(CLI::App* sub) {
    sub->add_option("--gammas", gammas_, "Comma-separated thresholds")->delimiter(',');
    sub->add_option("--gamma-min", gamma_min_, "First threshold")->capture_default_str();
    sub->add_option("--gamma-max", gamma_max_, "Last threshold")->capture_default_str();
    sub->add_option("--gamma-steps", gamma_steps_, "Number of thresholds")->capture_default_str();
  }

  void progress(const std::string& msg) const {
    if (!g_.quiet) err_ << msg << '\n';
  }

  EstimatorConfig estimator_config() const {
    EstimatorConfig cfg;
    cfg.alpha = g_.alpha;
    cfg.grid_points = g_.grid_points;
    cfg.max_constraint_points = g_.max_constraint_points;
    cfg.method = g_.method == "bisect" ? Method::bisect : Method::direct_lp;
    cfg.validate();
    return cfg;
  }

  Json base_config(const std::string& command) const {
    return Json{{"command", command},
                {"alpha", g_.alpha},
                {"model", g_.model},
                {"grid_points", g_.grid_points},
                {"max_constraint_points", g_.max_constraint_points},
                {"method", g_.method}};
  }

  std::vector<double> threshold_grid() const {
    if (!gammas_.empty()) return gammas_;
    if (gamma_steps_ < 1) throw ParameterError("--gamma-steps must be >= 1");
    if (gamma_steps_ == 1) return {gamma_min_};
    if (!(gamma_max_ > gamma_min_)) throw ParameterError("--gamma-max must exceed --gamma-min");
    std::vector<double> out;
    for (std::size_t i = 0; i < gamma_steps_; ++i) {
      out.push_back(gamma_min_ + (gamma_max_ - gamma_min_) * static_cast<double>(i) /
                                     static_cast<double>(gamma_steps_ - 1));
    }
    return out;
  }

  io::Dataset load_data() const {
    const io::ColumnSpec spec{data_.id_column, data_.replicate_columns};
    progress("reading " + data_.path);
    auto ds = data_.path == "-" ? io::read_tsv(std::cin, spec) : io::load_tsv(data_.path, spec);
    if (ds.size() == 0) throw InputError("no usable rows in " + data_.path);
    if (ds.dropped > 0) {
      progress("warning: dropped " + std::to_string(ds.dropped) + " rows with no valid replicate");
    }
    return ds;
  }

  struct Loaded {
    io::Dataset data;
    ObservationModel model;
    std::unique_ptr<EmpiricalCdf> ecdf;
  };

  Loaded load_with_model(Json& config) const {
    Loaded l{load_data(), ObservationModel::gaussian(1.0), nullptr};
    l.model = ModelSpec::parse(g_.model).resolve(&l.data.averaged, config);
    l.ecdf = std::make_unique<EmpiricalCdf>(l.data.averaged);
    if (l.model.integer_support()) {
      try {
        tailbound::detail::require_integer_samples(*l.ecdf, l.model);
      } catch (const ParameterError& e) {
        throw InputError(e.what());
      }
    }
    config["n"] = l.data.size();
    config["dropped"] = l.data.dropped;
    return l;
  }

  void emit(Json config, Json results, const Json& extra_meta = Json::object()) const {
    auto doc = report::document(g_.seed, std::move(config), std::move(results));
    for (const auto& [k, v] : extra_meta.items()) doc["meta"][k] = v;
    report::round_in_place(doc);
    if (g_.output == "csv") {
      out_ << report::to_csv(doc["results"]);
    } else {
      out_ << report::dump(doc);
    }
  }

  void register_estimate(CLI::App& app) {
    auto* sub = app.add_subcommand("estimate", "Conservative zeta_hat at one threshold");
    add_data(sub);
    sub->add_option("--gamma", gamma_, "Threshold")->capture_default_str();
    sub->callback([this] {
      action_ = [this] {
        Json config = base_config("estimate");
        auto l = load_with_model(config);
        config["gamma"] = gamma_;
        progress("estimating zeta_hat(" + std::to_string(gamma_) + ")");
        const auto est = estimate(*l.ecdf, l.model, gamma_, estimator_config());
        emit(config, Json::array({report::to_json(est)}));
      };
    });
  }

  void register_curve(CLI::App& app) {
    auto* sub = app.add_subcommand("curve", "zeta_hat over a grid of thresholds");
    add_data(sub);
    add_gamma_grid(sub);
    sub->callback([this] {
      action_ = [this] {
        Json config = base_config("curve");
        auto l = load_with_model(config);
        const auto gammas = threshold_grid();
        config["gammas"] = gammas;
        progress("estimating curve at " + std::to_string(gammas.size()) + " thresholds");
        const auto curve = estimate_curve(*l.ecdf, l.model, gammas, estimator_config());
        emit(config, report::to_json(curve));
      };
    });
  }

  void register_baseline(CLI::App& app) {
    auto* sub = app.add_subcommand("baseline", "Comparison estimators");
    sub->require_subcommand(1);
    auto* fwer = sub->add_subcommand("fwer", "Bonferroni discovery fraction");
    add_data(fwer);
    add_gamma_grid(fwer);
    fwer->callback([this] {
      action_ = [this] {
        Json config = base_config("baseline fwer");
        auto l = load_with_model(config);
        const auto gammas = threshold_grid();
        config["gammas"] = gammas;
        Json rows = Json::array();
        for (double g : gammas) {
          const double c = fwer_critical_value(l.model, g, g_.alpha, l.ecdf->size());
          const double frac = fwer_count(*l.ecdf, l.model, g, g_.alpha);
          rows.push_back({{"gamma", g},
                          {"critical_value", c},
                          {"zeta_fwer", frac},
                          {"discoveries", static_cast<std::size_t>(std::llround(
                                              frac * static_cast<double>(l.ecdf->size())))}});
        }
        emit(config, rows);
      };
    });
    auto* npmle = sub->add_subcommand("npmle", "Plug-in tail mass of the grid NPMLE");
    add_data(npmle);
    add_gamma_grid(npmle);
    npmle->add_option("--max-iterations", npmle_iterations_, "EM iteration cap")
        ->capture_default_str();
    npmle->callback([this] {
      action_ = [this] {
        Json config = base_config("baseline npmle");
        auto l = load_with_model(config);
        const auto gammas = threshold_grid();
        config["gammas"] = gammas;
        NpmleConfig nc;
        nc.grid_points = g_.grid_points;
        nc.max_iterations = npmle_iterations_;
        progress("fitting NPMLE");
        const auto fit = npmle_fit(*l.ecdf, l.model, nc);
        Json rows = Json::array();
        for (double g : gammas) {
          rows.push_back({{"gamma", g}, {"zeta_plugin", plugin_zeta(fit.mixing, g)}});
        }
        emit(config, rows,
             Json{{"npmle",
                   {{"iterations", fit.iterations},
                    {"converged", fit.converged},
                    {"log_likelihood", fit.log_likelihood.back()},
                    {"mixing", report::to_json(fit.mixing)}}}});
      };
    });
  }

  void register_simulate(CLI::App& app) {
    auto* sub = app.add_subcommand("simulate", "Monte Carlo experiments");
    sub->add_option("scenario", scenario_, "convergence | heatmap | conservativeness | beta-mixture")
        ->required()
        ->check(CLI::IsMember({"convergence", "heatmap", "conservativeness", "beta-mixture"}));
    sub->add_option("--gamma-stars", gamma_stars_, "Alternative effect sizes")->delimiter(',');
    sub->add_option("--zeta-stars", zeta_stars_, "Alternative fractions (heatmap)")
        ->delimiter(',');
    sub->add_option("--n-values", n_values_, "Sample sizes (convergence)")->delimiter(',');
    sub->add_option("--n", n_, "Sample size");
    sub->add_option("--trials", trials_, "Trials per cell");
    sub->add_option("--zeta-star", zeta_star_, "Alternative fraction")->capture_default_str();
    sub->add_option("--gamma-star", gamma_star_, "Alternative effect size")
        ->capture_default_str();
    sub->add_option("--sigma", sigma_, "Noise scale")->capture_default_str();
    sub->add_option("--family", family_, "poisson | binomial (beta-mixture)")
        ->check(CLI::IsMember({"poisson", "binomial"}))
        ->capture_default_str();
    sub->add_option("--bootstrap", bootstrap_, "Bootstrap resamples")->capture_default_str();
    add_gamma_grid(sub);
    sub->callback([this] { action_ = [this] { simulate(); }; });
  }

  void simulate() {
    sim::RunOptions opt;
    opt.estimator = estimator_config();
    opt.threads = g_.threads;
    opt.bootstrap_resamples = bootstrap_;
    Json config = base_config("simulate " + scenario_);
    config.erase("model");
    config["threads"] = g_.threads;
    progress("running " + scenario_);
    sim::ExperimentReport rep;
    if (scenario_ == "convergence") {
      if (gamma_stars_.empty()) gamma_stars_ = {1.0, 2.0};
      if (n_values_.empty()) n_values_ = {100, 1000, 10000, 100000};
      rep = sim::run_convergence_experiment(gamma_stars_, n_values_, trials_ ? trials_ : 20,
                                            g_.alpha, g_.seed, opt, zeta_star_, sigma_);
    } else if (scenario_ == "heatmap") {
      if (gamma_stars_.empty()) gamma_stars_ = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
      if (zeta_stars_.empty()) zeta_stars_ = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
      rep = sim::run_detection_heatmap(zeta_stars_, gamma_stars_, n_ ? n_ : 10000,
                                       trials_ ? trials_ : 10, g_.alpha, g_.seed, opt, sigma_);
    } else if (scenario_ == "conservativeness") {
      const auto nu = theory::two_spike(zeta_star_, gamma_star_);
      if (gammas_.empty()) gammas_ = {0.0, 0.5, 1.0, 1.5};
      rep = sim::run_conservativeness_trial(nu, ObservationModel::gaussian(sigma_),
                                            n_ ? n_ : 2000, trials_ ? trials_ : 200, g_.alpha,
                                            gammas_, g_.seed, opt);
    } else {
      auto cfg = family_ == "poisson" ? sim::poisson_beta_scenario(n_ ? n_ : 100000, g_.seed)
                                      : sim::binomial_beta_scenario(n_ ? n_ : 100000, g_.seed);
      if (gammas_.empty()) {
        const double top = family_ == "poisson" ? 7.0 : 1.0;
        const double bottom = family_ == "poisson" ? 0.0 : 0.0;
        for (int i = 0; i <= 28; ++i) gammas_.push_back(bottom + (top - bottom) * i / 28.0);
      }
      rep = sim::run_beta_mixture_scenario(cfg, gammas_, opt);
    }
    config["scenario"] = rep.scenario;
    config["trials"] = rep.trials;
    config["parameters"] = rep.parameters;
    Json extra{{"summary", rep.summary}};
    if (!rep.trial_estimates.empty()) extra["trial_estimates"] = rep.trial_estimates;
    emit(config, report::rows_json(rep), extra);
  }

  void register_pilot(CLI::App& app) {
    auto* sub = app.add_subcommand("pilot", "Experimental design calculators");
    sub->require_subcommand(1);

    auto* plan = sub->add_subcommand("plan", "Pilot budget feasibility");
    plan->add_option("--budget", budget_, "Total replicates B")->required();
    plan->add_option("--available", available_, "Hypotheses available")->required();
    plan->add_option("--zeta", zeta_, "Anticipated fraction of effects")->capture_default_str();
    plan->add_option("--delta", delta_, "Failure probability")->capture_default_str();
    plan->callback([this] {
      action_ = [this] {
        if (!(budget_ >= 1.0) || budget_ != std::floor(budget_)) {
          throw ParameterError("--budget must be a positive integer");
        }
        const auto p = pilot::plan_pilot(static_cast<std::uint64_t>(budget_), available_, zeta_,
                                         delta_);
        emit(Json{{"command", "pilot plan"}, {"zeta", zeta_}, {"delta", delta_}},
             Json::array({{{"budget", p.budget},
                           {"hypotheses", p.hypotheses},
                           {"replicates", p.replicates},
                           {"required_hypotheses", p.required_hypotheses},
                           {"min_detectable_gamma", p.min_detectable_gamma},
                           {"feasible", p.feasible}}}));
      };
    });

    auto* follow = sub->add_subcommand("followup", "Replicates per hypothesis for a follow-up");
    follow->add_option("--n", count_n_, "Hypotheses in the pilot")->required();
    follow->add_option("--gamma", gamma_, "Target effect size")->required();
    follow->add_option("--zeta-hat", zeta_hat_, "Pilot estimate")->required();
    follow->callback([this] {
      action_ = [this] {
        const auto t = pilot::followup_replicates(count_n_, gamma_, zeta_hat_);
        emit(Json{{"command", "pilot followup"}},
             Json::array({{{"n", count_n_},
                           {"gamma", gamma_},
                           {"zeta_hat", zeta_hat_},
                           {"replicates", t}}}));
      };
    });

    auto* size = sub->add_subcommand("samplesize", "Sample size for detection or estimation");
    size->add_option("--zeta", zeta_, "Alternative fraction")->capture_default_str();
    size->add_option("--gamma", gamma_, "Alternative effect size")->required();
    size->add_option("--sigma", sigma_, "Noise scale")->capture_default_str();
    size->add_option("--delta", delta_, "Failure probability")->capture_default_str();
    size->add_flag("--estimation", estimation_, "Estimation to within a factor 2");
    size->callback([this] {
      action_ = [this] {
        Json row{{"zeta", zeta_}, {"gamma", gamma_}, {"sigma", sigma_}, {"delta", delta_}};
        if (estimation_) {
          row["alpha"] = g_.alpha;
          row["n"] = pilot::estimation_sample_complexity(zeta_, gamma_, sigma_, delta_, g_.alpha);
        } else {
          const auto d = pilot::detection_sample_complexity(zeta_, gamma_, sigma_, delta_);
          row["n"] = d.exact;
          row["n_small_gamma"] = d.small_gamma;
          row["small_gamma_valid"] = d.small_gamma_valid;
        }
        emit(Json{{"command", "pilot samplesize"},
                  {"goal", estimation_ ? "estimation" : "detection"}},
             Json::array({row}));
      };
    });
  }

  void register_fit_null(CLI::App& app) {
    auto* sub = app.add_subcommand("fit-null", "Robust null scale of averaged statistics");
    add_data(sub);
    sub->callback([this] {
      action_ = [this] {
        const auto ds = load_data();
        const auto fit = io::fit_null_scale(ds.averaged);
        emit(Json{{"command", "fit-null"}, {"n", ds.size()}, {"dropped", ds.dropped}},
             Json::array({{{"n", fit.n},
                           {"median", fit.center},
                           {"mad", fit.mad},
                           {"sigma", fit.sigma},
                           {"variance", fit.variance}}}));
      };
    });
  }
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  Runner r(out, err);
  return r.run(argc, argv);
}

}  // namespace tailbound::cli
