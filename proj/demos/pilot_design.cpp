// Sizing a pilot screen and its follow-up.

#include <cstdio>

#include "tailbound/pilot.hpp"

int main() {
  using namespace tailbound::pilot;
  const double zeta = 0.1;
  const double delta = 0.05;
  std::printf("hypotheses needed to see zeta=%.2f: %llu\n", zeta,
              static_cast<unsigned long long>(min_pilot_hypotheses(zeta, delta)));
  for (std::uint64_t budget : {2000ULL, 5000ULL, 20000ULL}) {
    const auto plan = plan_pilot(budget, 2000, zeta, delta);
    std::printf("B=%-6llu m=%-5llu t=%-3llu min gamma=%.3f feasible=%d\n",
                static_cast<unsigned long long>(budget),
                static_cast<unsigned long long>(plan.hypotheses),
                static_cast<unsigned long long>(plan.replicates), plan.min_detectable_gamma,
                plan.feasible);
  }
  std::printf("follow-up replicates (n=1e4, gamma=2, zeta_hat=0.04): %llu\n",
              static_cast<unsigned long long>(followup_replicates(1e4, 2.0, 0.04)));
}
