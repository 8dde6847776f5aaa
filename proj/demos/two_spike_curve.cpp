// Draws two-spike Gaussian data and prints the conservative tail curve next
// to the truth and the Bonferroni count.

#include <cstdio>

#include "tailbound/tailbound.hpp"

int main() {
  using namespace tailbound;
  const sim::TwoSpikeConfig cfg{0.2, 2.0, 1.0, 5000, 7};
  const auto draws = sim::draw_two_spike(cfg);
  const EmpiricalCdf ecdf(draws.observations);
  const auto model = ObservationModel::gaussian(cfg.sigma);
  const auto truth = theory::two_spike(cfg.zeta_star, cfg.gamma_star);

  const double gammas[] = {0.0, 0.5, 1.0, 1.5, 1.99, 2.5};
  EstimatorConfig ec;
  ec.alpha = 0.05;
  const auto curve = estimate_curve(ecdf, model, gammas, ec);

  std::printf("%6s %8s %8s %8s\n", "gamma", "truth", "zeta_hat", "fwer");
  for (const auto& e : curve.entries) {
    std::printf("%6.2f %8.4f %8.4f %8.4f\n", e.gamma, mixture_tail(truth, e.gamma), e.zeta_hat,
                fwer_count(ecdf, model, e.gamma, ec.alpha));
  }
}
