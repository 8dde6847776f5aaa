#include <cmath>

#include "catch2/catch_amalgamated.hpp"
#include "tailbound/pilot.hpp"
#include "tailbound/simulate.hpp"

using namespace tailbound;
using namespace tailbound::pilot;
using Catch::Approx;

TEST_CASE("minimum detectable effect", "[pilot]") {
  CHECK(min_detectable_effect(1e4, 0.1, 0.05) == Approx(0.768258233056).epsilon(1e-11));
  CHECK(min_detectable_effect(4e4, 0.1, 0.05) ==
        Approx(0.5 * min_detectable_effect(1e4, 0.1, 0.05)).epsilon(1e-14));
  CHECK(min_detectable_effect(1e300, 0.1, 0.05) < 1e-140);
  CHECK_THROWS_AS(min_detectable_effect(0.0, 0.1, 0.05), ParameterError);
}

TEST_CASE("pilot hypothesis counts", "[pilot]") {
  CHECK(min_pilot_hypotheses(0.1, 0.05) == 1476);
  CHECK(min_pilot_hypotheses(1.0, 0.05) == 15);
  CHECK(min_pilot_hypotheses(1.0, 0.5) == 6);
  CHECK(min_pilot_hypotheses(0.2, 0.1) == 300);
  CHECK_THROWS_AS(min_pilot_hypotheses(0.0, 0.05), ParameterError);
  CHECK_THROWS_AS(min_pilot_hypotheses(0.1, 1.0), ParameterError);
}

TEST_CASE("follow-up replicates", "[pilot]") {
  CHECK(followup_replicates(1e4, 2.0, 0.04) == 8);
  CHECK(followup_replicates(std::exp(1.0), 1.0, std::exp(-1.0)) == 1);
  CHECK(followup_replicates(1e6, 1.0, 0.01) == 64);
  CHECK(followup_replicates(1e6, 2.0, 0.01) == 16);
  CHECK_THROWS_AS(followup_replicates(1e4, 2.0, 0.0), ParameterError);
}

TEST_CASE("sample complexities", "[pilot]") {
  const auto d = detection_sample_complexity(0.1, 1.0, 1.0, 0.05);
  CHECK(d.exact == 5032);
  CHECK(d.small_gamma == 5903);
  CHECK(d.small_gamma_valid);
  CHECK(detection_sample_complexity(0.1, 1.0, 1.0, 0.1).exact == 4087);
  for (double g : {0.1, 0.4, 0.9}) {
    const auto s = detection_sample_complexity(0.2, g, 1.0, 0.1);
    CHECK(s.exact <= s.small_gamma);
  }
  CHECK(estimation_sample_complexity(0.1, 1.0, 1.0, 0.05, 0.05) == 7377759);
  const double full = static_cast<double>(estimation_sample_complexity(0.2, 0.5, 1.0, 0.1, 0.1));
  const double half = static_cast<double>(estimation_sample_complexity(0.1, 0.5, 1.0, 0.1, 0.1));
  CHECK(half / full == Approx(4.0).epsilon(1e-6));
  CHECK(estimation_sample_complexity(0.1, 0.5, 1.0, 0.1, 0.1) ==
        estimation_sample_complexity(0.1, 1.0, 2.0, 0.1, 0.1));
  CHECK_THROWS_AS(estimation_sample_complexity(0.1, 2.0, 1.0, 0.05, 0.05), ParameterError);
}

TEST_CASE("formulas decrease in gamma and zeta", "[pilot]") {
  for (double z : {0.05, 0.1, 0.3}) {
    CHECK(detection_sample_complexity(z, 0.5, 1.0, 0.1).exact >
          detection_sample_complexity(z, 1.0, 1.0, 0.1).exact);
    CHECK(detection_sample_complexity(z, 0.5, 1.0, 0.1).exact >
          detection_sample_complexity(z + 0.1, 0.5, 1.0, 0.1).exact);
    CHECK(min_pilot_hypotheses(z, 0.1) > min_pilot_hypotheses(z + 0.1, 0.1));
    CHECK(min_detectable_effect(1e4, z, 0.1) > min_detectable_effect(1e4, z + 0.1, 0.1));
  }
}

TEST_CASE("pilot plans", "[pilot]") {
  const auto p = plan_pilot(5000, 2000, 0.1, 0.05);
  CHECK(p.hypotheses == 2000);
  CHECK(p.replicates == 2);
  CHECK(p.budget == 4000.0);
  CHECK(p.feasible);
  CHECK(p.min_detectable_gamma == Approx(min_detectable_effect(4000.0, 0.1, 0.05)));
  const auto q = plan_pilot(1000, 5000, 0.1, 0.05);
  CHECK(q.hypotheses == 1000);
  CHECK(q.replicates == 1);
  CHECK_FALSE(q.feasible);
  CHECK_THROWS_AS(plan_pilot(0, 10, 0.1, 0.05), ParameterError);
}

TEST_CASE("pilot guarantee holds in simulation", "[pilot]") {
  // t = 1 replicate per hypothesis at twice the minimum budget; the effect
  // size is the smallest the plan promises to detect.
  const double zeta = 0.2;
  const double delta = 0.1;
  const std::size_t m = 2 * min_pilot_hypotheses(zeta, delta);
  const double gamma = min_detectable_effect(static_cast<double>(m), zeta, delta);
  EstimatorConfig cfg;
  cfg.alpha = delta;
  const auto rep = sim::run_detection_rate({zeta, gamma, 1.0, m, 31}, 100, delta, {cfg});
  CHECK(rep.rows[0][0] >= 1.0 - delta - sim::monte_carlo_slack(delta, 100));
}
