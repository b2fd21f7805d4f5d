#pragma once

// Seeded generator of windowed signal/probe click streams.
//
// Per measurement window, signal photons enter the medium as a Poisson
// process. Each photon is independently marked (transmitted?, probed?) with
// the joint probabilities of the P_sp table; a transmitted photon clicks the
// signal detector with probability q_s, and a probed photon produces one
// probe click displaced by a two-sided exponential kernel
//
//   k(d) = exp(d / tau_neg) / (tau_neg + tau_pos)   for d < 0
//   k(d) = exp(-d / tau_pos) / (tau_neg + tau_pos)  for d >= 0
//
// Probe background and signal dark counts are independent Poisson processes.
// Clicks displaced outside their window are dropped, as in gated hardware.
// Every window draws from its own Philox stream keyed by (seed, cycle, slot),
// so the output does not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "cavdet/click_stream.hpp"
#include "cavdet/errors.hpp"
#include "cavdet/philox.hpp"
#include "cavdet/physics_model.hpp"
#include "cavdet/rate_model.hpp"

namespace cavdet {

struct BeamRates {
  double signal_rate_detected_per_us = 0.28;  // R_s^in; the medium sees R_s^in / q_s
  double n_c_in = 3.7;                        // mean input cavity photons per tau_c
};

// Direct settings that replace the values derived from the physical model.
struct TargetOverrides {
  std::optional<double> input_rate_per_us;
  std::optional<double> transmission;
  std::optional<double> q;
  std::optional<double> m;
  std::optional<double> probe_background_per_us;
  // Solve the probe background so the generated g2(0) equals this value.
  std::optional<double> g2_zero;
};

// Everything the generator draws from.
struct DetectionTargets {
  double input_rate_per_us = 0.0;  // photons entering the medium
  double q_s = 0.3;
  double transmission = 0.0;  // T_s
  double q = 0.0;             // P(probe click | transmitted)
  double m = 0.0;             // probe clicks per input photon
  double probe_background_per_us = 0.0;
  double signal_dark_per_us = 0.0;
  double tau_neg_us = 1.2;
  double tau_pos_us = 1.3;
};

struct SimulationLayout {
  std::uint64_t seed = 1;
  std::uint64_t n_cycles = 8000;
  std::uint32_t windows_per_cycle = 300;
  double window_us = 20.0;
  unsigned threads = 1;
  std::uint64_t config_hash = 0;

  std::int64_t window_ns() const { return std::llround(window_us * 1000.0); }

  void validate() const {
    if (n_cycles < 1) throw DomainError("n_cycles must be >= 1");
    if (windows_per_cycle < 1) throw DomainError("windows_per_cycle must be >= 1");
    if (!(window_us > 0.0)) throw DomainError("window_us must be > 0");
    if (std::abs(window_us * 1000.0 - static_cast<double>(window_ns())) > 1e-6)
      throw DomainError("window_us must be a whole number of nanoseconds");
  }
};

struct SimulationConfig {
  SimulationLayout layout;
  double tau_neg_us = 1.2;
  double tau_pos_us = 1.3;
  PhysicalParams physics;
  DetectionChain chain;
  BeamRates beams;
  TargetOverrides overrides;

  void validate() const {
    layout.validate();
    if (!(tau_neg_us > 0.0) || !(tau_pos_us > 0.0)) throw DomainError("tau_neg and tau_pos must be > 0");
    physics.validate();
    chain.validate();
    if (!(beams.signal_rate_detected_per_us >= 0.0)) throw DomainError("signal rate must be >= 0");
    if (!(beams.n_c_in >= 0.0)) throw DomainError("n_c_in must be >= 0");
  }
};

/// Fraction of kernel mass that stays inside a window of length `window_us`
/// for a source uniformly placed in the window.
inline double kernel_inside_fraction(double tau_neg, double tau_pos, double window_us) {
  const double total = tau_neg + tau_pos;
  const double lost_neg = tau_neg / total * tau_neg * -std::expm1(-window_us / tau_neg);
  const double lost_pos = tau_pos / total * tau_pos * -std::expm1(-window_us / tau_pos);
  return 1.0 - (lost_neg + lost_pos) / window_us;
}

/// Mean probe click rate in the window, after edge losses.
inline double effective_probe_rate(const DetectionTargets& t, double window_us) {
  return t.probe_background_per_us +
         t.input_rate_per_us * t.m * kernel_inside_fraction(t.tau_neg_us, t.tau_pos_us, window_us);
}

/// Zero-lag signal-probe cross-correlation the generator produces.
inline double expected_g2_zero(const DetectionTargets& t, double window_us) {
  const double true_signal = t.input_rate_per_us * t.q_s * t.transmission;
  const double all_signal = true_signal + t.signal_dark_per_us;
  const double probe = effective_probe_rate(t, window_us);
  if (!(all_signal > 0.0) || !(probe > 0.0)) throw DomainError("expected_g2_zero: a channel has zero rate");
  return 1.0 + true_signal / all_signal * t.q / ((t.tau_neg_us + t.tau_pos_us) * probe);
}

/// Generator inputs implied by the physical model plus any overrides.
inline DetectionTargets resolve_targets(const SimulationConfig& cfg) {
  cfg.validate();
  const double n_c = cfg.beams.n_c_in;
  const ModelPoint model = evaluate_model(cfg.physics, n_c);
  const double q_p = cfg.chain.q_p();
  const double w = cfg.layout.window_us;

  DetectionTargets t;
  t.q_s = cfg.chain.q_s;
  t.tau_neg_us = cfg.tau_neg_us;
  t.tau_pos_us = cfg.tau_pos_us;
  t.input_rate_per_us = cfg.chain.q_s > 0.0 ? cfg.beams.signal_rate_detected_per_us / cfg.chain.q_s : 0.0;
  t.transmission = model.transmission;
  t.q = conditional_efficiency_saturated(model.eps, q_p, n_c);
  // M = Q T_s + (1 - T_s) P_nt. Photons that are not transmitted are probed
  // with eps plus the decohered share eps_b / (1 - T_s); to first order this
  // is (eps + eps_b) q_p n_c, and saturating the two branches separately
  // keeps the triple feasible at large n_c.
  const double lost = 1.0 - model.transmission;
  t.m = t.q * model.transmission;
  if (lost > 0.0) t.m += lost * conditional_efficiency_saturated(model.eps + cfg.chain.eps_b / lost, q_p, n_c);
  t.probe_background_per_us = cfg.chain.alpha * q_p * n_c / model.rates.tau_c + cfg.chain.r_p / w;
  t.signal_dark_per_us = cfg.chain.r_s / w;

  const auto& o = cfg.overrides;
  if (o.input_rate_per_us) t.input_rate_per_us = *o.input_rate_per_us;
  if (o.transmission) t.transmission = *o.transmission;
  if (o.q) t.q = *o.q;
  if (o.m) t.m = *o.m;
  if (o.probe_background_per_us) t.probe_background_per_us = *o.probe_background_per_us;
  if (!(t.input_rate_per_us >= 0.0)) throw DomainError("input rate must be >= 0");
  if (!(t.probe_background_per_us >= 0.0)) throw DomainError("probe background must be >= 0");

  psp_solve(t.q, t.transmission, t.m);  // feasibility

  if (o.g2_zero) {
    if (!(*o.g2_zero > 1.0)) throw InfeasibleTriple("g2(0) > 1", "requested g2(0) must exceed 1");
    const double true_signal = t.input_rate_per_us * t.q_s * t.transmission;
    const double all_signal = true_signal + t.signal_dark_per_us;
    if (!(true_signal > 0.0)) throw InfeasibleTriple("signal rate > 0", "g2(0) target needs signal clicks");
    const double probe = true_signal / all_signal * t.q / ((*o.g2_zero - 1.0) * (t.tau_neg_us + t.tau_pos_us));
    const double correlated = t.input_rate_per_us * t.m * kernel_inside_fraction(t.tau_neg_us, t.tau_pos_us, w);
    if (probe < correlated)
      throw InfeasibleTriple("probe background >= 0", "requested g2(0) needs fewer probe clicks than the signal produces");
    t.probe_background_per_us = probe - correlated;
  }
  return t;
}

/// Exact per-window means of the generated stream. n_s_in counts photons
/// entering the medium per window; n_c_in is passed through.
inline MeanCounts expected_statistics(const DetectionTargets& t, double window_us, double n_c_in = 0.0) {
  const double photons = t.input_rate_per_us * window_us;
  const double inside = kernel_inside_fraction(t.tau_neg_us, t.tau_pos_us, window_us);
  const PspTable psp = psp_solve(t.q, t.transmission, t.m);
  MeanCounts c;
  c.n_s_in = photons;
  c.n_c_in = n_c_in;
  c.n_s = photons * t.q_s * t.transmission + t.signal_dark_per_us * window_us;
  c.t = photons * t.m * inside;
  c.b = t.probe_background_per_us * window_us;
  c.n_p = c.t + c.b;
  c.n_sp = c.n_s * c.n_p + photons * t.q_s * psp.p11 * inside;
  return c;
}

inline MeanCounts expected_statistics(const SimulationConfig& cfg) {
  return expected_statistics(resolve_targets(cfg), cfg.layout.window_us, cfg.beams.n_c_in);
}

namespace detail {

enum : std::uint32_t { kPhotonTag = 0, kBackgroundTag = 1, kDarkTag = 2 };

inline void append_poisson(WindowStream& rng, double rate, double window_us, std::int64_t window_ns,
                           std::uint64_t window_id, Channel channel, std::vector<ClickEvent>& out) {
  if (!(rate > 0.0)) return;
  const double mean_gap = 1.0 / rate;
  for (double t = rng.exponential(mean_gap); t < window_us; t += rng.exponential(mean_gap)) {
    const auto ns = static_cast<std::int64_t>(std::floor(t * 1000.0));
    if (ns < window_ns) out.push_back({window_id, ns, channel});
  }
}

inline void generate_window(const DetectionTargets& t, const PspTable& psp, const SimulationLayout& layout,
                            std::uint64_t window_id, std::vector<ClickEvent>& out) {
  const std::uint64_t cycle = window_id / layout.windows_per_cycle;
  const auto slot = static_cast<std::uint32_t>(window_id % layout.windows_per_cycle);
  const double w = layout.window_us;
  const std::int64_t w_ns = layout.window_ns();
  const std::size_t first = out.size();

  auto push = [&](double time_us, Channel ch) {
    if (time_us < 0.0 || time_us >= w) return;
    const auto ns = static_cast<std::int64_t>(std::floor(time_us * 1000.0));
    if (ns < w_ns) out.push_back({window_id, ns, ch});
  };

  if (t.input_rate_per_us > 0.0) {
    WindowStream rng(layout.seed, cycle, slot, kPhotonTag);
    const double mean_gap = 1.0 / t.input_rate_per_us;
    const double c11 = psp.p11;
    const double c10 = c11 + psp.p10;
    const double c01 = c10 + psp.p01;
    const double neg_weight = t.tau_neg_us / (t.tau_neg_us + t.tau_pos_us);
    for (double arrival = rng.exponential(mean_gap); arrival < w; arrival += rng.exponential(mean_gap)) {
      const double u = rng.uniform();
      const bool transmitted = u < c10;
      const bool probed = u < c11 || (u >= c10 && u < c01);
      if (transmitted && rng.uniform() < t.q_s) push(arrival, Channel::signal);
      if (probed) {
        const double shift = rng.uniform() < neg_weight ? t.tau_neg_us * std::log(rng.uniform())
                                                        : -t.tau_pos_us * std::log(rng.uniform());
        push(arrival + shift, Channel::probe);
      }
    }
  }
  if (t.probe_background_per_us > 0.0) {
    WindowStream rng(layout.seed, cycle, slot, kBackgroundTag);
    append_poisson(rng, t.probe_background_per_us, w, w_ns, window_id, Channel::probe, out);
  }
  if (t.signal_dark_per_us > 0.0) {
    WindowStream rng(layout.seed, cycle, slot, kDarkTag);
    append_poisson(rng, t.signal_dark_per_us, w, w_ns, window_id, Channel::signal, out);
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

}  // namespace detail

/// Generates the stream for resolved targets. Output depends only on
/// (targets, layout minus thread count).
inline ClickStream simulate_targets(const DetectionTargets& t, const SimulationLayout& layout) {
  layout.validate();
  const PspTable psp = psp_solve(t.q, t.transmission, t.m);

  ClickStream stream;
  stream.meta.seed = layout.seed;
  stream.meta.config_hash = layout.config_hash;
  stream.meta.n_cycles = layout.n_cycles;
  stream.meta.windows_per_cycle = layout.windows_per_cycle;
  stream.meta.window_ns = layout.window_ns();

  constexpr std::uint64_t kChunk = 2048;
  const std::uint64_t n_windows = stream.meta.n_windows();
  const std::uint64_t n_chunks = (n_windows + kChunk - 1) / kChunk;
  std::vector<std::vector<ClickEvent>> chunks(n_chunks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t c = next++; c < n_chunks; c = next++) {
      const std::uint64_t end = std::min(n_windows, (c + 1) * kChunk);
      for (std::uint64_t wid = c * kChunk; wid < end; ++wid) detail::generate_window(t, psp, layout, wid, chunks[c]);
    }
  };
  const unsigned n_threads = std::max(1u, layout.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  std::size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  stream.events.reserve(total);
  for (auto& c : chunks) stream.events.insert(stream.events.end(), c.begin(), c.end());
  return stream;
}

inline ClickStream simulate(const SimulationConfig& cfg) { return simulate_targets(resolve_targets(cfg), cfg.layout); }

/// Seed of the zero-signal companion stream used to measure P_err.
inline std::uint64_t companion_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ull; }

/// Same layout and backgrounds with the signal beam switched off.
inline ClickStream simulate_companion(const DetectionTargets& t, SimulationLayout layout) {
  DetectionTargets off = t;
  off.input_rate_per_us = 0.0;
  layout.seed = companion_seed(layout.seed);
  return simulate_targets(off, layout);
}

}  // namespace cavdet
