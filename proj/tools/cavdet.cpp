// cavdet: model evaluation, click-stream simulation, correlation analysis
// and scenario sweeps.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 infeasible model (no consistent detection probability table).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "cavdet/cavdet.hpp"

namespace fs = std::filesystem;
using namespace cavdet;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kInfeasible = 3 };

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> cycles;
  std::string out = ".";
  unsigned threads = 1;
};

KeyValueDocument user_document(const CommonFlags& f) {
  KeyValueDocument doc = f.config.empty() ? KeyValueDocument{} : KeyValueDocument::load(f.config);
  if (f.seed) doc.set("simulation.seed", *f.seed);
  if (f.cycles) doc.set("simulation.n_cycles", *f.cycles);
  return doc;
}

KeyValueDocument model_document(const RunConfig& cfg) {
  const auto& p = cfg.sim.physics;
  const auto& chain = cfg.sim.chain;
  const double n_c = cfg.sim.beams.n_c_in;
  const ModelPoint m = evaluate_model(p, n_c);
  KeyValueDocument d = manifest_document(cfg);
  d.set("model.n_c_in", n_c);
  d.set("model.gamma_c_over_2pi_mhz", m.rates.gamma_c.over_2pi_mhz());
  d.set("model.zeta", m.rates.zeta);
  d.set("model.eps0", m.eps0);
  d.set("model.four_eps0", m.four_eps0);
  d.set("model.blocking_probability", m.blocking);
  d.set("model.tau_c_us", m.rates.tau_c);
  d.set("model.tau_eit_us", m.rates.tau_eit);
  d.set("model.eps", m.eps);
  d.set("model.transmission_outside", m.transmission_outside);
  d.set("model.transmission", m.transmission);
  d.set("model.detected_transmission", m.detected_transmission);
  d.set("model.eta_peak", m.eta_peak);
  d.set("model.grating_overlap", m.grating);
  d.set("model.scattering_probability", m.scattering);

  const double n_s_in = chain.q_s > 0.0 ? input_signal_photon_number(cfg.sim.beams.signal_rate_detected_per_us,
                                                                      chain.q_s, m.rates.tau_eit)
                                        : 0.0;
  const MeanCounts c = mean_counts(m.eps0, n_s_in, n_c, m.transmission, chain);
  d.set("counts.n_s_in", n_s_in);
  d.set("counts.n_s", c.n_s);
  d.set("counts.n_p", c.n_p);
  d.set("counts.t", c.t);
  d.set("counts.b", c.b);
  d.set("counts.n_sp", c.n_sp);
  if (m.eps0 > 0.0 && n_s_in > 0.0) d.set("counts.g2_zero", g2_zero(m.eps0, chain.eps_b, chain.alpha, n_s_in));
  d.set("counts.q_linear", conditional_efficiency_model(m.eps, chain.q_p(), n_c));

  const DetectionTargets t = resolve_targets(cfg.sim);
  const PspTable psp = psp_solve(t.q, t.transmission, t.m);
  d.set("targets_resolved.input_rate_per_us", t.input_rate_per_us);
  d.set("targets_resolved.q", t.q);
  d.set("targets_resolved.transmission", t.transmission);
  d.set("targets_resolved.m", t.m);
  d.set("targets_resolved.probe_background_per_us", t.probe_background_per_us);
  d.set("targets_resolved.signal_dark_per_us", t.signal_dark_per_us);
  d.set("targets_resolved.p00", psp.p00);
  d.set("targets_resolved.p01", psp.p01);
  d.set("targets_resolved.p10", psp.p10);
  d.set("targets_resolved.p11", psp.p11);
  d.set("targets_resolved.state_prep", psp.state_prep);
  try {
    d.set("targets_resolved.g2_zero", expected_g2_zero(t, cfg.sim.layout.window_us));
  } catch (const DomainError&) {
  }
  return d;
}

int run_model_eval(const CommonFlags& f) {
  const RunConfig cfg = parse_config(user_document(f));
  const auto doc = model_document(cfg);
  std::cout << doc.to_string();
  if (f.out != ".") {
    fs::create_directories(f.out);
    doc.save(fs::path(f.out) / "model.txt");
  }
  return kOk;
}

int run_simulate(const CommonFlags& f) {
  RunConfig cfg = parse_config(user_document(f));
  cfg.sim.layout.threads = f.threads;
  const DetectionTargets t = resolve_targets(cfg.sim);
  const ClickStream stream = simulate_targets(t, cfg.sim.layout);
  const ClickStream companion = simulate_companion(t, cfg.sim.layout);
  const fs::path out(f.out);
  fs::create_directories(out);
  const KeyValueDocument manifest = manifest_document(cfg);
  save_stream(out / "clicks.csv", stream, manifest);
  save_stream(out / "background.csv", companion, manifest);
  manifest.save(out / "manifest.txt");
  std::cout << "windows=" << stream.meta.n_windows() << " signal=" << stream.count(Channel::signal)
            << " probe=" << stream.count(Channel::probe) << " background_probe=" << companion.count(Channel::probe)
            << "\n";
  return kOk;
}

int run_analyze(const CommonFlags& f, const std::string& stream_path, std::string companion_path) {
  KeyValueDocument sidecar;
  const ClickStream stream = load_stream(stream_path, &sidecar);
  KeyValueDocument doc;
  for (const auto& e : sidecar.entries())
    if (e.key.rfind("stream.", 0) != 0 && e.key.rfind("derived.", 0) != 0) doc.set(e.key, e.value);
  if (!f.config.empty()) doc.merge(KeyValueDocument::load(f.config));
  const RunConfig cfg = parse_config(doc);
  const DetectionTargets t = resolve_targets(cfg.sim);

  if (companion_path.empty()) {
    const fs::path sibling = fs::path(stream_path).parent_path() / "background.csv";
    if (fs::exists(sibling) && fs::absolute(sibling) != fs::absolute(stream_path)) companion_path = sibling.string();
  }
  std::optional<ClickStream> companion;
  if (!companion_path.empty()) companion = load_stream(companion_path);

  AnalysisOptions opt;
  opt.companion = companion ? &*companion : nullptr;
  opt.bin_us = cfg.analysis.bin_us;
  opt.max_lag_us = cfg.analysis.max_lag_us;
  opt.view = cfg.analysis.view;
  opt.threads = f.threads;
  const MeasuredSummary r = summarize(stream, TruthInputs::from_targets(t, cfg.sim.chain), opt);

  const fs::path out(f.out);
  fs::create_directories(out);
  write_histogram_csv(out / "histogram.csv", r.histogram);
  KeyValueDocument summary = summary_document(r);
  summary.set("stream.seed", stream.meta.seed);
  summary.set("stream.config_hash", stream.meta.config_hash);
  summary.save(out / "summary.txt");
  std::cout << summary.to_string();
  if (!r.q.baseline_ok)
    std::cerr << "warning: far-lag baseline " << format_double(r.q.baseline) << " deviates from 1 by more than 5%\n";
  return kOk;
}

int run_scenario_cmd(const CommonFlags& f, const std::string& name) {
  KeyValueDocument doc = f.config.empty() ? KeyValueDocument{} : KeyValueDocument::load(f.config);
  ScenarioOptions opt;
  opt.out_dir = f.out;
  opt.seed = f.seed;
  opt.cycles = f.cycles;
  opt.threads = f.threads;
  const auto result = run_scenario(name, doc, opt);
  for (const auto& file : result.files) std::cout << file.string() << "\n";
  if (!result.summary.entries().empty()) std::cout << result.summary.to_string();
  return kOk;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool with_seed) {
  cmd->add_option("--config", f.config, "configuration file (key = value with [sections])");
  if (with_seed) {
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--cycles", f.cycles, "number of experimental cycles");
  }
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity-assisted nondestructive photon detection: model, simulator and analysis"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* model = app.add_subcommand("model", "closed-form model");
  model->require_subcommand(1);
  auto* eval = model->add_subcommand("eval", "evaluate the model at the configured operating point");
  add_common(eval, flags, false);

  auto* simulate = app.add_subcommand("simulate", "generate clicks.csv and a zero-signal background.csv");
  add_common(simulate, flags, true);

  std::string stream_path;
  std::string companion_path;
  auto* analyze = app.add_subcommand("analyze", "correlate a click stream and summarize figures of merit");
  analyze->add_option("stream", stream_path, "click stream CSV (with .meta sidecar)")->required();
  analyze->add_option("--companion", companion_path, "zero-signal stream for the false-detection probability");
  add_common(analyze, flags, false);

  std::string scenario_name_arg;
  auto* scenario = app.add_subcommand("scenario", "run a named scenario sweep");
  scenario->add_option("name", scenario_name_arg, "fig2a, fig2b, fig3, fig4, figS2, projection or custom")->required();
  add_common(scenario, flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*eval) return run_model_eval(flags);
    if (*simulate) return run_simulate(flags);
    if (*analyze) return run_analyze(flags, stream_path, companion_path);
    if (*scenario) return run_scenario_cmd(flags, scenario_name_arg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const InfeasibleTriple& e) {
    std::cerr << "infeasible model: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
