// Evaluates the closed-form model at the inset operating point and prints
// the single-shot quantities.

#include <cstdio>

#include "cavdet/physics_model.hpp"
#include "cavdet/rate_model.hpp"

int main() {
  using namespace cavdet;
  PhysicalParams p;  // defaults: eta 4.3, D 3, omega/2pi 2.6 MHz
  const ModelPoint m = evaluate_model(p, 0.0);
  std::printf("zeta          %.4f\n", m.rates.zeta);
  std::printf("4 eps0        %.4f\n", m.four_eps0);
  std::printf("blocking      %.4f\n", m.blocking);
  std::printf("eta_peak      %.3f\n", m.eta_peak);
  std::printf("F_p(peak)     %.4f\n", m.grating);
  std::printf("scattering    %.4f\n", m.scattering);
  std::printf("tau_c  [us]   %.4f\n", m.rates.tau_c);
  std::printf("tau_EIT [us]  %.4f\n", m.rates.tau_eit);

  // P_sp table for a measured triple.
  const PspTable t = psp_solve(0.10, 0.2, 0.5);
  std::printf("P11 %.3f  P10 %.3f  P01 %.3f  P00 %.3f  state prep %.3f\n", t.p11, t.p10, t.p01, t.p00, t.state_prep);
}
