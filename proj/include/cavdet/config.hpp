#pragma once

// Run configuration: flat key = value text with [section] headers.
//
//   [physics]     eta, g_over_2pi_mhz, optical_depth_in, optical_depth_out,
//                 omega_over_2pi_mhz, kappa_over_2pi_mhz,
//                 gamma_big_over_2pi_mhz, gamma0_over_2pi_mhz,
//                 grating_loss_enabled, grating_uses_peak_eta,
//                 localization_loss, tau_eit_us (auto | us)
//   [chain]       q_s, q_d, outcoupling, alpha, eps_b (auto | value),
//                 r_s_per_window, r_p_per_window
//   [beams]       signal_rate_detected_per_us, n_c_in or
//                 cavity_rate_detected_empty_per_us
//   [simulation]  seed, n_cycles, windows_per_cycle, window_us,
//                 tau_neg_us, tau_pos_us
//   [targets]     optional direct overrides: input_rate_per_us,
//                 transmission, q, m, probe_background_per_us, g2_zero
//   [analysis]    bin_us, max_lag_us, view (observed | intrinsic)
//   [scenario]    sweep, simulate
//
// Frequencies are given as f = omega / 2pi in MHz and converted once on
// load. Unknown keys are errors. Sections [stream] and [derived], written
// into sidecars and manifests, are ignored so those files load back as
// configurations.

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "cavdet/correlation.hpp"
#include "cavdet/errors.hpp"
#include "cavdet/event_simulator.hpp"
#include "cavdet/keyvalue.hpp"
#include "cavdet/physics_model.hpp"
#include "cavdet/rate_model.hpp"
#include "cavdet/units.hpp"

namespace cavdet {

struct AnalysisSettings {
  double bin_us = 0.25;
  double max_lag_us = 10.0;
  View view = View::observed;
};

struct ScenarioSettings {
  std::string sweep;  // "key:from:to:steps; key=v1,v2,..."; empty means one point
  bool simulate = false;
};

struct RunConfig {
  SimulationConfig sim;
  AnalysisSettings analysis;
  ScenarioSettings scenario;
  bool eps_b_auto = true;
  // Canonical text of every key, defaults included.
  KeyValueDocument resolved;

  std::uint64_t config_hash() const { return sim.layout.config_hash; }
};

namespace detail {

enum class KeyKind { nonneg, positive, unit, count, boolean, auto_positive, auto_unit, optional, text, view };

struct KeySpec {
  std::string_view key;
  std::string_view fallback;  // empty for optional keys
  KeyKind kind;
};

inline constexpr std::array<KeySpec, 37> kConfigKeys{{
    {"physics.eta", "4.3", KeyKind::nonneg},
    {"physics.g_over_2pi_mhz", "1.25", KeyKind::positive},
    {"physics.optical_depth_in", "3", KeyKind::nonneg},
    {"physics.optical_depth_out", "0", KeyKind::nonneg},
    {"physics.omega_over_2pi_mhz", "2.6", KeyKind::positive},
    {"physics.kappa_over_2pi_mhz", "0.14", KeyKind::positive},
    {"physics.gamma_big_over_2pi_mhz", "5.2", KeyKind::positive},
    {"physics.gamma0_over_2pi_mhz", "0.1", KeyKind::positive},
    {"physics.grating_loss_enabled", "true", KeyKind::boolean},
    {"physics.grating_uses_peak_eta", "true", KeyKind::boolean},
    {"physics.localization_loss", "0.7", KeyKind::unit},
    {"physics.tau_eit_us", "auto", KeyKind::auto_positive},
    {"chain.q_s", "0.3", KeyKind::unit},
    {"chain.q_d", "0.3", KeyKind::unit},
    {"chain.outcoupling", "0.66", KeyKind::unit},
    {"chain.alpha", "0.003", KeyKind::unit},
    {"chain.eps_b", "auto", KeyKind::auto_unit},
    {"chain.r_s_per_window", "0", KeyKind::nonneg},
    {"chain.r_p_per_window", "0", KeyKind::nonneg},
    {"beams.signal_rate_detected_per_us", "0.28", KeyKind::nonneg},
    {"beams.n_c_in", "3.7", KeyKind::nonneg},
    {"beams.cavity_rate_detected_empty_per_us", "", KeyKind::optional},
    {"simulation.seed", "1", KeyKind::count},
    {"simulation.n_cycles", "8000", KeyKind::count},
    {"simulation.windows_per_cycle", "300", KeyKind::count},
    {"simulation.window_us", "20", KeyKind::positive},
    {"simulation.tau_neg_us", "1.2", KeyKind::positive},
    {"simulation.tau_pos_us", "1.3", KeyKind::positive},
    {"targets.input_rate_per_us", "", KeyKind::optional},
    {"targets.transmission", "", KeyKind::optional},
    {"targets.q", "", KeyKind::optional},
    {"targets.m", "", KeyKind::optional},
    {"targets.probe_background_per_us", "", KeyKind::optional},
    {"targets.g2_zero", "", KeyKind::optional},
    {"analysis.bin_us", "0.25", KeyKind::positive},
    {"analysis.max_lag_us", "10", KeyKind::positive},
    {"analysis.view", "observed", KeyKind::view},
}};

inline constexpr std::array<KeySpec, 2> kScenarioKeys{{
    {"scenario.sweep", "", KeyKind::text},
    {"scenario.simulate", "false", KeyKind::boolean},
}};

inline const KeySpec* find_key(std::string_view key) {
  for (const auto& k : kConfigKeys)
    if (k.key == key) return &k;
  for (const auto& k : kScenarioKeys)
    if (k.key == key) return &k;
  return nullptr;
}

inline bool ignored_section(const std::string& key) {
  return key.rfind("stream.", 0) == 0 || key.rfind("derived.", 0) == 0;
}

// Checks one value against its kind and returns its canonical text.
inline std::string canonical_value(const KeyValueDocument& doc, const KeySpec& spec) {
  const std::string key(spec.key);
  const auto* e = doc.find(key);
  const std::size_t line = e ? e->line : 0;
  const std::string raw = e ? e->value : std::string(spec.fallback);
  auto fail = [&](const std::string& why) -> std::string { throw ConfigError(line, key, why); };
  auto number = [&]() {
    KeyValueDocument one;
    one.set(key, raw);
    try {
      return *one.get_double(key);
    } catch (const ConfigError&) {
      throw ConfigError(line, key, "expected a finite number, got '" + raw + "'");
    }
  };
  switch (spec.kind) {
    case KeyKind::text:
      return raw;
    case KeyKind::boolean:
      if (raw == "true" || raw == "1" || raw == "yes") return "true";
      if (raw == "false" || raw == "0" || raw == "no") return "false";
      return fail("expected true/false, got '" + raw + "'");
    case KeyKind::view:
      if (raw == "observed" || raw == "intrinsic") return raw;
      return fail("expected observed/intrinsic, got '" + raw + "'");
    case KeyKind::count: {
      KeyValueDocument one;
      one.set(key, raw);
      try {
        return std::to_string(*one.get_uint(key));
      } catch (const ConfigError&) {
        return fail("expected a non-negative integer, got '" + raw + "'");
      }
    }
    case KeyKind::auto_positive:
    case KeyKind::auto_unit:
      if (raw == "auto") return raw;
      break;
    case KeyKind::optional:
      if (raw.empty()) return raw;
      break;
    default:
      break;
  }
  const double v = number();
  switch (spec.kind) {
    case KeyKind::nonneg:
      if (v < 0.0) fail("must be >= 0");
      break;
    case KeyKind::positive:
    case KeyKind::auto_positive:
      if (!(v > 0.0)) fail("must be > 0");
      break;
    case KeyKind::unit:
    case KeyKind::auto_unit:
      if (v < 0.0 || v > 1.0) fail("must lie in [0,1]");
      break;
    default:
      break;
  }
  return format_double(v);
}

}  // namespace detail

/// Every key a configuration may carry.
inline std::set<std::string> known_config_keys() {
  std::set<std::string> keys;
  for (const auto& k : detail::kConfigKeys) keys.emplace(k.key);
  for (const auto& k : detail::kScenarioKeys) keys.emplace(k.key);
  return keys;
}

inline bool is_numeric_key(const std::string& key) {
  const auto* spec = detail::find_key(key);
  if (!spec) return false;
  switch (spec->kind) {
    case detail::KeyKind::boolean:
    case detail::KeyKind::text:
    case detail::KeyKind::view:
      return false;
    default:
      return true;
  }
}

/// Parses and range-checks a configuration; missing keys take defaults.
inline RunConfig parse_config(const KeyValueDocument& doc) {
  for (const auto& e : doc.entries())
    if (!detail::ignored_section(e.key) && !detail::find_key(e.key)) throw ConfigError(e.line, e.key, "unknown key");

  RunConfig cfg;
  for (const auto& k : detail::kConfigKeys) {
    auto v = detail::canonical_value(doc, k);
    if (!v.empty()) cfg.resolved.set(std::string(k.key), v);
  }
  for (const auto& k : detail::kScenarioKeys) cfg.resolved.set(std::string(k.key), detail::canonical_value(doc, k));
  const auto& r = cfg.resolved;
  auto num = [&](const char* key) { return *r.get_double(key); };
  auto line_of = [&](const char* key) {
    const auto* e = doc.find(key);
    return e ? e->line : std::size_t{0};
  };

  PhysicalParams& p = cfg.sim.physics;
  p.eta = num("physics.eta");
  p.g_half_rabi = mhz(num("physics.g_over_2pi_mhz"));
  p.optical_depth_in = num("physics.optical_depth_in");
  p.optical_depth_out = num("physics.optical_depth_out");
  p.omega = mhz(num("physics.omega_over_2pi_mhz"));
  p.kappa = mhz(num("physics.kappa_over_2pi_mhz"));
  p.gamma_big = mhz(num("physics.gamma_big_over_2pi_mhz"));
  p.gamma0 = mhz(num("physics.gamma0_over_2pi_mhz"));
  p.grating_loss_enabled = *r.get_bool("physics.grating_loss_enabled");
  p.grating_uses_peak_eta = *r.get_bool("physics.grating_uses_peak_eta");
  p.localization_loss = num("physics.localization_loss");
  if (*r.get_string("physics.tau_eit_us") != "auto") p.tau_eit_us = num("physics.tau_eit_us");

  DetectionChain& c = cfg.sim.chain;
  c.q_s = num("chain.q_s");
  c.q_d = num("chain.q_d");
  c.outcoupling = num("chain.outcoupling");
  c.alpha = num("chain.alpha");
  c.r_s = num("chain.r_s_per_window");
  c.r_p = num("chain.r_p_per_window");

  cfg.sim.beams.signal_rate_detected_per_us = num("beams.signal_rate_detected_per_us");
  cfg.sim.beams.n_c_in = num("beams.n_c_in");
  if (r.has("beams.cavity_rate_detected_empty_per_us")) {
    if (doc.has("beams.n_c_in"))
      throw ConfigError(line_of("beams.cavity_rate_detected_empty_per_us"), "beams.cavity_rate_detected_empty_per_us",
                        "give either n_c_in or cavity_rate_detected_empty_per_us, not both");
    if (!(c.q_p() > 0.0))
      throw ConfigError(line_of("beams.cavity_rate_detected_empty_per_us"), "beams.cavity_rate_detected_empty_per_us",
                        "needs q_d * outcoupling > 0");
    cfg.sim.beams.n_c_in =
        input_cavity_photon_number(num("beams.cavity_rate_detected_empty_per_us"), c, cavity_lifetime(p));
    cfg.resolved.set("beams.n_c_in", cfg.sim.beams.n_c_in);
  }

  auto& layout = cfg.sim.layout;
  layout.seed = *r.get_uint("simulation.seed");
  layout.n_cycles = *r.get_uint("simulation.n_cycles");
  const auto wpc = *r.get_uint("simulation.windows_per_cycle");
  if (layout.n_cycles < 1) throw ConfigError(line_of("simulation.n_cycles"), "simulation.n_cycles", "must be >= 1");
  if (wpc < 1 || wpc > 0xFFFFFFFFull)
    throw ConfigError(line_of("simulation.windows_per_cycle"), "simulation.windows_per_cycle", "out of range");
  layout.windows_per_cycle = static_cast<std::uint32_t>(wpc);
  layout.window_us = num("simulation.window_us");
  cfg.sim.tau_neg_us = num("simulation.tau_neg_us");
  cfg.sim.tau_pos_us = num("simulation.tau_pos_us");
  try {
    layout.validate();
  } catch (const DomainError& e) {
    throw ConfigError(line_of("simulation.window_us"), "simulation.window_us", e.what());
  }

  auto& o = cfg.sim.overrides;
  auto opt = [&](const char* key) { return r.has(key) ? std::optional<double>(num(key)) : std::nullopt; };
  o.input_rate_per_us = opt("targets.input_rate_per_us");
  o.transmission = opt("targets.transmission");
  o.q = opt("targets.q");
  o.m = opt("targets.m");
  o.probe_background_per_us = opt("targets.probe_background_per_us");
  o.g2_zero = opt("targets.g2_zero");

  cfg.analysis.bin_us = num("analysis.bin_us");
  cfg.analysis.max_lag_us = num("analysis.max_lag_us");
  cfg.analysis.view = *r.get_string("analysis.view") == "intrinsic" ? View::intrinsic : View::observed;
  try {
    LagBinning::from_us(cfg.analysis.bin_us, cfg.analysis.max_lag_us);
  } catch (const DomainError& e) {
    throw ConfigError(line_of("analysis.bin_us"), "analysis.bin_us", e.what());
  }
  if (cfg.analysis.max_lag_us >= layout.window_us)
    throw ConfigError(line_of("analysis.max_lag_us"), "analysis.max_lag_us", "must be shorter than the window");

  cfg.scenario.sweep = *r.get_string("scenario.sweep");
  cfg.scenario.simulate = *r.get_bool("scenario.simulate");

  // eps_b = auto uses the model at the configured operating point.
  const std::string eps_b = *r.get_string("chain.eps_b");
  cfg.eps_b_auto = eps_b == "auto";
  if (cfg.eps_b_auto) {
    const ModelPoint m = evaluate_model(p, cfg.sim.beams.n_c_in);
    c.eps_b = default_eps_b(m.eps0, m.transmission, p.eta);
  } else {
    c.eps_b = num("chain.eps_b");
  }

  KeyValueDocument hashed = cfg.resolved;
  hashed.set("simulation.seed", "");
  layout.config_hash = fnv1a64(hashed.to_string());
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config(KeyValueDocument::load(path)); }

/// Resolved configuration plus the model quantities it implies.
inline KeyValueDocument manifest_document(const RunConfig& cfg) {
  KeyValueDocument doc = cfg.resolved;
  const ModelPoint m = evaluate_model(cfg.sim.physics, cfg.sim.beams.n_c_in);
  doc.set("derived.config_hash", cfg.config_hash());
  doc.set("derived.eps_b", cfg.sim.chain.eps_b);
  doc.set("derived.q_p", cfg.sim.chain.q_p());
  doc.set("derived.tau_c_us", m.rates.tau_c);
  doc.set("derived.tau_eit_us", m.rates.tau_eit);
  doc.set("derived.zeta", m.rates.zeta);
  doc.set("derived.eps0", m.eps0);
  doc.set("derived.eps", m.eps);
  doc.set("derived.transmission", m.transmission);
  return doc;
}

}  // namespace cavdet
