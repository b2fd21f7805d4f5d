// Simulate a click stream with direct targets, then recover g2(0), the time
// constants and Q from it. Pass the number of cycles as argv[1].

#include <cstdio>
#include <cstdlib>

#include "cavdet/analysis.hpp"
#include "cavdet/event_simulator.hpp"

int main(int argc, char** argv) {
  using namespace cavdet;
  SimulationConfig cfg;
  cfg.layout.n_cycles = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1000;
  cfg.overrides.input_rate_per_us = 0.5;
  cfg.overrides.transmission = 0.2;
  cfg.overrides.q = 0.10;
  cfg.overrides.m = 0.0233;
  cfg.overrides.g2_zero = 4.0;

  const DetectionTargets t = resolve_targets(cfg);
  const ClickStream stream = simulate_targets(t, cfg.layout);
  const ClickStream background = simulate_companion(t, cfg.layout);

  AnalysisOptions opt;
  opt.companion = &background;
  const MeasuredSummary r = summarize(stream, TruthInputs::from_targets(t, cfg.chain), opt);
  std::printf("clicks      %zu signal, %zu probe\n", stream.count(Channel::signal), stream.count(Channel::probe));
  std::printf("g2(0)       %.3f +- %.3f (target %.3f)\n", r.fit.g2_zero, r.fit.g2_zero_err,
              expected_g2_zero(t, cfg.layout.window_us));
  std::printf("tau < / >   %.3f / %.3f us\n", r.fit.tau_neg, r.fit.tau_pos);
  std::printf("Q           %.4f +- %.4f (target %.4f)\n", r.q.value, r.q.error, t.q);
  std::printf("T_s         %.4f (target %.4f)\n", r.summary.transmission, t.transmission);
  std::printf("M           %.4f (target %.4f)\n", r.m, t.m);
  std::printf("P_err       %.5f per window\n", r.summary.p_err);
}
