#pragma once

// Named parameter sweeps over the model and, optionally, the simulator.
//
// A scenario is a preset of configuration overrides plus sweep axes. The
// user configuration is laid over the preset, and a non-empty
// scenario.sweep replaces the preset axes. Axes are written
//
//   physics.omega_over_2pi_mhz = 1.8,2.9,3.5 ; beams.n_c_in:0.5:4:8
//
// i.e. `key=v1,v2,...` or `key:from:to:steps`, separated by ';'. The first
// axis varies slowest. Points are evaluated concurrently; tables are
// written afterwards in point order, so output bytes do not depend on the
// thread count.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "cavdet/analysis.hpp"
#include "cavdet/config.hpp"
#include "cavdet/event_simulator.hpp"
#include "cavdet/keyvalue.hpp"
#include "cavdet/physics_model.hpp"

namespace cavdet {

enum class ScenarioName { fig2a, fig2b, fig3, fig4, figS2, projection, custom };

inline constexpr std::array<std::pair<std::string_view, ScenarioName>, 7> kScenarioNames{{
    {"fig2a", ScenarioName::fig2a},
    {"fig2b", ScenarioName::fig2b},
    {"fig3", ScenarioName::fig3},
    {"fig4", ScenarioName::fig4},
    {"figS2", ScenarioName::figS2},
    {"projection", ScenarioName::projection},
    {"custom", ScenarioName::custom},
}};

inline ScenarioName parse_scenario_name(std::string_view name) {
  for (const auto& [text, value] : kScenarioNames)
    if (text == name) return value;
  throw ConfigError(0, "scenario", "unknown scenario '" + std::string(name) + "'");
}

inline std::string_view scenario_name(ScenarioName n) {
  for (const auto& [text, value] : kScenarioNames)
    if (value == n) return text;
  return "custom";
}

struct SweepAxis {
  std::string key;
  std::vector<double> values;
};

inline std::vector<SweepAxis> parse_sweep(std::string_view text) {
  std::vector<SweepAxis> axes;
  auto bad = [](const std::string& key, const std::string& why) { return ConfigError(0, "scenario.sweep", key + ": " + why); };
  auto number = [&](const std::string& key, std::string_view s) {
    s = detail::trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
      throw bad(key, "bad number '" + std::string(s) + "'");
    return v;
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto item = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) continue;
    SweepAxis axis;
    const auto eq = item.find('=');
    const auto colon = item.find(':');
    if (eq != std::string_view::npos) {
      axis.key = std::string(detail::trim(item.substr(0, eq)));
      auto list = item.substr(eq + 1);
      std::size_t p = 0;
      while (p <= list.size()) {
        auto comma = list.find(',', p);
        if (comma == std::string_view::npos) comma = list.size();
        axis.values.push_back(number(axis.key, list.substr(p, comma - p)));
        p = comma + 1;
      }
    } else if (colon != std::string_view::npos) {
      axis.key = std::string(detail::trim(item.substr(0, colon)));
      std::vector<std::string_view> parts;
      std::size_t p = colon + 1;
      while (p <= item.size()) {
        auto c = item.find(':', p);
        if (c == std::string_view::npos) c = item.size();
        parts.push_back(item.substr(p, c - p));
        p = c + 1;
      }
      if (parts.size() != 3) throw bad(axis.key, "expected key:from:to:steps");
      const double from = number(axis.key, parts[0]);
      const double to = number(axis.key, parts[1]);
      const double steps_d = number(axis.key, parts[2]);
      if (steps_d < 1.0 || steps_d != std::floor(steps_d) || steps_d > 1e6) throw bad(axis.key, "steps must be a positive integer");
      const auto steps = static_cast<int>(steps_d);
      if (steps == 1 && from != to) throw bad(axis.key, "a single step needs from == to");
      for (int i = 0; i < steps; ++i) axis.values.push_back(steps == 1 ? from : from + (to - from) * i / (steps - 1));
    } else {
      throw bad(std::string(item), "expected key=v1,v2,... or key:from:to:steps");
    }
    if (!is_numeric_key(axis.key)) throw bad(axis.key, "not a numeric configuration key");
    for (const auto& a : axes)
      if (a.key == axis.key) throw bad(axis.key, "axis given twice");
    axes.push_back(std::move(axis));
  }
  return axes;
}

struct ScenarioOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> cycles;
  unsigned threads = 1;
  bool write_files = true;
};

struct ScenarioTable {
  std::string file;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw DomainError("no column " + std::string(name));
  }
};

struct ScenarioResult {
  ScenarioName name = ScenarioName::custom;
  std::vector<ScenarioTable> tables;
  KeyValueDocument manifest;
  KeyValueDocument summary;  // scenario-level results, empty if none
  std::vector<std::filesystem::path> files;

  const ScenarioTable& table(std::string_view file) const {
    for (const auto& t : tables)
      if (t.file == file) return t;
    throw DomainError("no table " + std::string(file));
  }
};

namespace detail {

struct ScenarioPreset {
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string sweep;
  bool simulate = false;
};

inline ScenarioPreset scenario_preset(ScenarioName n) {
  switch (n) {
    case ScenarioName::fig2a:
      return {{{"physics.omega_over_2pi_mhz", "1.9"}, {"beams.n_c_in", "3.7"}}, "", true};
    case ScenarioName::fig2b:
      return {{{"physics.omega_over_2pi_mhz", "1.3"}, {"beams.n_c_in", "1.2"}},
              "beams.signal_rate_detected_per_us:0.05:0.5:10",
              false};
    case ScenarioName::fig3:
      return {{}, "physics.omega_over_2pi_mhz=1.8,2.9,3.5; beams.n_c_in:0.5:4:8", true};
    case ScenarioName::fig4:
      return {{{"physics.omega_over_2pi_mhz", "2.9"}}, "beams.n_c_in:0.5:6:12", true};
    case ScenarioName::figS2:
      return {{{"physics.optical_depth_in", "4"}}, "physics.omega_over_2pi_mhz:1.3:3.5:12", false};
    case ScenarioName::projection:
      return {{{"physics.eta", "20"},
               {"physics.optical_depth_in", "10"},
               {"physics.grating_uses_peak_eta", "false"},
               {"chain.q_s", "1"},
               {"chain.q_d", "1"},
               {"chain.outcoupling", "1"},
               {"chain.alpha", "0"},
               {"chain.r_s_per_window", "0"},
               {"chain.r_p_per_window", "0"}},
              "beams.n_c_in:0.25:10:40; physics.omega_over_2pi_mhz:1:12:45",
              false};
    case ScenarioName::custom:
      break;
  }
  return {};
}

using PointValues = std::map<std::string, double>;

struct PointOutcome {
  PointValues values;
  std::optional<CorrelationHistogram> histogram;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline void simulate_point(const RunConfig& cfg, const DetectionTargets& t, PointOutcome& out) {
  static constexpr const char* kColumns[] = {"Q_simulated",          "Q_simulated_err",    "T_s_simulated",
                                             "M_simulated",          "g2_zero_simulated",  "g2_zero_simulated_err",
                                             "tau_neg_simulated",    "tau_pos_simulated",  "time_resolution_simulated",
                                             "P11_simulated",        "P_err_simulated"};
  for (const char* c : kColumns) out.values[c] = kNaN;
  SimulationLayout layout = cfg.sim.layout;
  layout.threads = 1;
  const ClickStream stream = simulate_targets(t, layout);
  const ClickStream companion = simulate_companion(t, layout);
  AnalysisOptions opt;
  opt.companion = &companion;
  opt.bin_us = cfg.analysis.bin_us;
  opt.max_lag_us = cfg.analysis.max_lag_us;
  try {
    const auto m = summarize(stream, TruthInputs::from_targets(t, cfg.sim.chain), opt);
    auto& v = out.values;
    v["Q_simulated"] = m.q.value;
    v["Q_simulated_err"] = m.q.error;
    v["T_s_simulated"] = m.summary.transmission;
    v["M_simulated"] = m.m;
    v["g2_zero_simulated"] = m.fit.g2_zero;
    v["g2_zero_simulated_err"] = m.fit.g2_zero_err;
    v["tau_neg_simulated"] = m.fit.tau_neg;
    v["tau_pos_simulated"] = m.fit.tau_pos;
    v["time_resolution_simulated"] = m.time_resolution_us;
    v["P11_simulated"] = m.summary.psp.p11;
    v["P_err_simulated"] = m.summary.p_err;
    out.histogram = m.histogram;
  } catch (const NoEventsError&) {
  } catch (const FitError&) {
  } catch (const InfeasibleTriple&) {
    // measured triple outside the probability simplex at this statistics
  } catch (const DomainError&) {
  }
}

inline PointOutcome evaluate_point(const RunConfig& cfg, bool simulate) {
  PointOutcome out;
  auto& v = out.values;
  const auto& p = cfg.sim.physics;
  const double n_c = cfg.sim.beams.n_c_in;
  const ModelPoint m = evaluate_model(p, n_c);
  const DetectionTargets t = resolve_targets(cfg.sim);
  const double w = cfg.sim.layout.window_us;
  const PspTable psp = psp_solve(t.q, t.transmission, t.m);

  v["n_c_in"] = n_c;
  v["omega_mhz"] = p.omega.over_2pi_mhz();
  v["optical_depth_in"] = p.optical_depth_in;
  v["eta"] = p.eta;
  v["signal_rate_detected_per_us"] = cfg.sim.beams.signal_rate_detected_per_us;
  v["n_s_in"] = cfg.sim.chain.q_s > 0.0
                    ? input_signal_photon_number(cfg.sim.beams.signal_rate_detected_per_us, cfg.sim.chain.q_s,
                                                 m.rates.tau_eit)
                    : kNaN;
  v["tau_c_us"] = m.rates.tau_c;
  v["tau_eit_us"] = m.rates.tau_eit;
  v["zeta"] = m.rates.zeta;
  v["eps0"] = m.eps0;
  v["four_eps0"] = m.four_eps0;
  v["eps"] = m.eps;
  v["eps_b"] = cfg.sim.chain.eps_b;
  v["probe_rate_normalized_model"] = m.eps * v["n_s_in"] + cfg.sim.chain.alpha;
  v["T_s_model"] = m.transmission;
  v["T_detected_model"] = m.detected_transmission;
  v["Q_model"] = t.q;
  v["M_model"] = t.m;
  v["P00_model"] = psp.p00;
  v["P01_model"] = psp.p01;
  v["P10_model"] = psp.p10;
  v["P11_model"] = psp.p11;
  v["P_err_model"] = t.probe_background_per_us * w;
  v["device_model"] = t.q * m.detected_transmission;
  v["g2_zero_model"] = kNaN;
  try {
    v["g2_zero_model"] = expected_g2_zero(t, w);
  } catch (const DomainError&) {
  }
  if (simulate) simulate_point(cfg, t, out);
  return out;
}

inline void write_table(const std::filesystem::path& path, const ScenarioTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

inline ScenarioTable make_table(std::string file, std::vector<std::string> columns,
                                const std::vector<PointOutcome>& points) {
  ScenarioTable t{std::move(file), std::move(columns), {}};
  for (const auto& p : points) {
    std::vector<double> row;
    for (const auto& c : t.columns) {
      auto it = p.values.find(c);
      row.push_back(it == p.values.end() ? kNaN : it->second);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Least-squares slope through the origin.
inline double origin_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(y[i])) continue;
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

}  // namespace detail

/// Runs `name` with `user` laid over the scenario preset. Throws
/// ConfigError for bad configurations and InfeasibleTriple when a point has
/// no consistent probability table.
inline ScenarioResult run_scenario(ScenarioName name, const KeyValueDocument& user, const ScenarioOptions& opt = {}) {
  const auto preset = detail::scenario_preset(name);
  KeyValueDocument doc;
  for (const auto& [k, v] : preset.overrides) doc.set(k, v);
  doc.merge(user);
  if (opt.seed) doc.set("simulation.seed", *opt.seed);
  if (opt.cycles) doc.set("simulation.n_cycles", *opt.cycles);
  const bool user_sweep = user.has("scenario.sweep") && !user.get_string("scenario.sweep")->empty();
  if (!user_sweep) doc.set("scenario.sweep", preset.sweep);
  if (!user.has("scenario.simulate")) doc.set("scenario.simulate", preset.simulate);

  const RunConfig base = parse_config(doc);
  const auto axes = parse_sweep(base.scenario.sweep);
  const bool simulate = base.scenario.simulate;

  // Cartesian product, first axis slowest.
  std::size_t n_points = 1;
  for (const auto& a : axes) n_points *= a.values.size();
  std::vector<RunConfig> configs;
  configs.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    KeyValueDocument point = doc;
    std::size_t rem = i;
    for (std::size_t k = axes.size(); k-- > 0;) {
      point.set(axes[k].key, axes[k].values[rem % axes[k].values.size()]);
      rem /= axes[k].values.size();
    }
    RunConfig cfg = parse_config(point);
    cfg.sim.layout.seed = base.sim.layout.seed + i;
    configs.push_back(std::move(cfg));
  }

  std::vector<detail::PointOutcome> points(n_points);
  std::vector<std::exception_ptr> errors(n_points);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_points; i = next++) {
      try {
        points[i] = detail::evaluate_point(configs[i], simulate);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    const unsigned n_threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n_points)));
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ScenarioResult result;
  result.name = name;
  result.manifest = manifest_document(base);
  result.manifest.set("derived.scenario", std::string(scenario_name(name)));
  result.manifest.set("derived.points", static_cast<std::uint64_t>(n_points));

  const std::string stem(scenario_name(name));
  std::vector<std::string> axis_columns;
  for (const auto& a : axes) {
    const auto dot = a.key.find('.');
    axis_columns.push_back(a.key.substr(dot + 1));
    for (std::size_t i = 0; i < n_points; ++i) points[i].values[axis_columns.back()] = *configs[i].resolved.get_double(a.key);
  }

  switch (name) {
    case ScenarioName::fig2a:
      result.tables.push_back(detail::make_table(
          stem + ".csv",
          {"omega_mhz", "n_c_in", "g2_zero_model", "g2_zero_simulated", "g2_zero_simulated_err", "tau_neg_simulated",
           "tau_pos_simulated", "time_resolution_simulated", "Q_model", "Q_simulated", "Q_simulated_err", "T_s_model",
           "T_s_simulated"},
          points));
      if (points.front().histogram) {
        const auto& h = *points.front().histogram;
        ScenarioTable ht{stem + "_histogram.csv", {"tau_us", "g2", "err"}, {}};
        for (std::size_t i = 0; i < h.size(); ++i) ht.rows.push_back({h.center_us(i), h.g2[i], h.err[i]});
        result.tables.push_back(std::move(ht));
      }
      break;
    case ScenarioName::fig2b:
      result.tables.push_back(detail::make_table(
          stem + ".csv",
          {"signal_rate_detected_per_us", "n_s_in", "tau_eit_us", "eps0", "eps", "probe_rate_normalized_model"},
          points));
      break;
    case ScenarioName::fig3: {
      result.tables.push_back(detail::make_table(
          stem + ".csv",
          {"omega_mhz", "n_c_in", "Q_model", "Q_simulated", "Q_simulated_err", "T_s_model", "T_s_simulated"}, points));
      // Per control Rabi frequency: dQ/dn_c and the 1/e photon number of T_s.
      ScenarioTable fits{stem + "_fits.csv", {"omega_mhz", "slope_model", "slope_simulated", "n_1e_model"}, {}};
      std::vector<double> omegas;
      for (const auto& p : points)
        if (std::find(omegas.begin(), omegas.end(), p.values.at("omega_mhz")) == omegas.end())
          omegas.push_back(p.values.at("omega_mhz"));
      for (double om : omegas) {
        std::vector<double> n, qm, qs;
        const RunConfig* cfg = nullptr;
        for (std::size_t i = 0; i < n_points; ++i) {
          if (points[i].values.at("omega_mhz") != om) continue;
          cfg = &configs[i];
          n.push_back(points[i].values.at("n_c_in"));
          qm.push_back(points[i].values.at("Q_model"));
          auto it = points[i].values.find("Q_simulated");
          qs.push_back(it == points[i].values.end() ? detail::kNaN : it->second);
        }
        fits.rows.push_back({om, detail::origin_slope(n, qm), simulate ? detail::origin_slope(n, qs) : detail::kNaN,
                             fitted_one_over_e_photon_number(cfg->sim.physics)});
      }
      result.tables.push_back(std::move(fits));
      break;
    }
    case ScenarioName::fig4:
      result.tables.push_back(detail::make_table(
          stem + ".csv",
          {"omega_mhz", "n_c_in", "P00_model", "P01_model", "P10_model", "P11_model", "P_err_model", "P11_simulated",
           "P_err_simulated"},
          points));
      break;
    case ScenarioName::figS2:
      result.tables.push_back(
          detail::make_table(stem + ".csv", {"omega_mhz", "optical_depth_in", "tau_eit_us", "eps0", "eps"}, points));
      break;
    case ScenarioName::projection: {
      result.tables.push_back(detail::make_table(
          stem + ".csv", {"n_c_in", "omega_mhz", "Q_model", "T_s_model", "T_detected_model", "device_model"}, points));
      std::size_t best = 0;
      for (std::size_t i = 1; i < n_points; ++i)
        if (points[i].values.at("device_model") > points[best].values.at("device_model")) best = i;
      const auto& v = points[best].values;
      result.summary.set("optimum.n_c_in", v.at("n_c_in"));
      result.summary.set("optimum.omega_over_2pi_mhz", v.at("omega_mhz"));
      result.summary.set("optimum.q", v.at("Q_model"));
      result.summary.set("optimum.transmission", v.at("T_s_model"));
      result.summary.set("optimum.detected_transmission", v.at("T_detected_model"));
      result.summary.set("optimum.device_efficiency", v.at("device_model"));
      break;
    }
    case ScenarioName::custom: {
      std::vector<std::string> cols = axis_columns;
      for (const char* c : {"n_c_in", "omega_mhz", "eps0", "eps", "T_s_model", "T_detected_model", "Q_model", "M_model",
                            "g2_zero_model", "P11_model", "P_err_model", "device_model"})
        if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.emplace_back(c);
      if (simulate)
        for (const char* c : {"Q_simulated", "Q_simulated_err", "T_s_simulated", "M_simulated", "g2_zero_simulated",
                              "g2_zero_simulated_err", "tau_neg_simulated", "tau_pos_simulated", "P11_simulated",
                              "P_err_simulated"})
          cols.emplace_back(c);
      result.tables.push_back(detail::make_table(stem + ".csv", std::move(cols), points));
      break;
    }
  }

  if (opt.write_files) {
    std::filesystem::create_directories(opt.out_dir);
    for (const auto& t : result.tables) {
      detail::write_table(opt.out_dir / t.file, t);
      result.files.push_back(opt.out_dir / t.file);
    }
    if (!result.summary.entries().empty()) {
      result.summary.save(opt.out_dir / (stem + "_summary.txt"));
      result.files.push_back(opt.out_dir / (stem + "_summary.txt"));
    }
    result.manifest.save(opt.out_dir / "manifest.txt");
    result.files.push_back(opt.out_dir / "manifest.txt");
  }
  return result;
}

inline ScenarioResult run_scenario(std::string_view name, const KeyValueDocument& user, const ScenarioOptions& opt = {}) {
  return run_scenario(parse_scenario_name(name), user, opt);
}

}  // namespace cavdet
