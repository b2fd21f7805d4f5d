#pragma once

// Figures of merit measured from click streams.
//
// Q is the area under g2_sp(tau) - 1 times the probe click rate. The
// shuffled normalization already carries the window overlap, so the area
// estimate needs no edge correction. The probe count per input photon M does:
// correlated probe clicks displaced out of the window are lost, and the
// inside fraction is computed from the fitted time constants.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "cavdet/click_stream.hpp"
#include "cavdet/correlation.hpp"
#include "cavdet/errors.hpp"
#include "cavdet/event_simulator.hpp"
#include "cavdet/exp_fit.hpp"
#include "cavdet/keyvalue.hpp"
#include "cavdet/rate_model.hpp"

namespace cavdet {

struct QEstimate {
  double value = 0.0;
  double error = 0.0;
  double baseline = 1.0;  // mean g2 over the outer quarter of lags on each side
  bool baseline_ok = true;  // false when the baseline is off by more than 5%
};

/// Q = R_p * sum over bins of (g2 - 1) * bin width, with errors added in
/// quadrature. `probe_rate_per_us` is the mean probe click rate inside the
/// measurement windows.
inline QEstimate q_from_histogram(const CorrelationHistogram& h, double probe_rate_per_us) {
  if (!(probe_rate_per_us >= 0.0)) throw DomainError("q_from_histogram: probe rate must be >= 0");
  const double dt = h.bin_us();
  const double max_lag = static_cast<double>(h.binning.max_lag_ns) * 1e-3;
  double area = 0.0;
  double var = 0.0;
  double outer = 0.0;
  std::size_t n_outer = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    area += (h.g2[i] - 1.0) * dt;
    var += h.err[i] * h.err[i] * dt * dt;
    if (std::abs(h.center_us(i)) >= 0.75 * max_lag) {
      outer += h.g2[i];
      ++n_outer;
    }
  }
  QEstimate q;
  q.value = probe_rate_per_us * area;
  q.error = probe_rate_per_us * std::sqrt(var);
  q.baseline = n_outer ? outer / static_cast<double>(n_outer) : 1.0;
  q.baseline_ok = std::abs(q.baseline - 1.0) <= 0.05;
  return q;
}

/// Rate of `ch` clicks inside the measurement windows, per us.
inline double measured_rate(const ClickStream& s, Channel ch) {
  return static_cast<double>(s.count(ch)) / s.meta.total_time_us();
}

/// Known inputs the measured summary is referenced to.
struct TruthInputs {
  double input_rate_per_us = 0.0;  // photons entering the medium
  double q_s = 0.3;
  double q_p = 0.198;

  static TruthInputs from_targets(const DetectionTargets& t, const DetectionChain& chain) {
    return {t.input_rate_per_us, t.q_s, chain.q_p()};
  }
};

struct AnalysisOptions {
  const ClickStream* companion = nullptr;  // zero-signal stream for P_err
  double bin_us = 0.25;
  double max_lag_us = 10.0;
  View view = View::observed;
  unsigned threads = 1;
  FitOptions fit;
};

struct MeasuredSummary {
  DetectionSummary summary;
  CorrelationHistogram histogram;
  ExpFit fit;
  QEstimate q;
  double n_s = 0.0;  // detected clicks per window
  double n_p = 0.0;
  double n_s_in = 0.0;  // photons entering the medium per window
  double inside_fraction = 1.0;
  double m = 0.0;  // signal-induced probe clicks per input photon
  double time_resolution_us = 0.0;
  // Zero-lag auto-correlations; unset when a channel is too sparse.
  std::optional<double> g_ss;
  std::optional<double> g_pp;
  bool has_companion = false;
};

/// Zero-lag auto-correlation of one channel, or nullopt when undefined.
inline std::optional<double> auto_correlation_zero(const ClickStream& s, Channel ch, const LagBinning& bins,
                                                   unsigned threads) {
  try {
    return zero_lag_value(cross_correlation(s, ch, ch, bins, threads));
  } catch (const NoEventsError&) {
    return std::nullopt;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

/// Measures Q, T_s, M and P_err from `stream` and builds the P_sp summary.
/// Without a companion stream P_err is reported as NaN and M keeps the
/// background clicks.
inline MeasuredSummary summarize(const ClickStream& stream, const TruthInputs& truth, const AnalysisOptions& opt = {}) {
  if (!(truth.input_rate_per_us > 0.0)) throw DomainError("summarize: input rate must be > 0");
  if (!(truth.q_s > 0.0) || !(truth.q_p > 0.0)) throw DomainError("summarize: efficiencies must be > 0");
  const auto bins = LagBinning::from_us(opt.bin_us, opt.max_lag_us);
  const double w = stream.meta.window_us();
  const double n_windows = static_cast<double>(stream.meta.n_windows());

  MeasuredSummary r;
  r.histogram = cross_correlation(stream, Channel::signal, Channel::probe, bins, opt.threads);
  r.fit = fit_double_exponential(r.histogram, opt.fit);
  r.time_resolution_us = r.fit.time_resolution();
  const double probe_rate = measured_rate(stream, Channel::probe);
  r.q = q_from_histogram(r.histogram, probe_rate);

  r.n_s = static_cast<double>(stream.count(Channel::signal)) / n_windows;
  r.n_p = static_cast<double>(stream.count(Channel::probe)) / n_windows;
  r.n_s_in = truth.input_rate_per_us * w;
  r.inside_fraction = kernel_inside_fraction(r.fit.tau_neg, r.fit.tau_pos, w);

  double p_err = std::numeric_limits<double>::quiet_NaN();
  double induced = r.n_p;
  if (opt.companion) {
    p_err = static_cast<double>(opt.companion->count(Channel::probe)) /
            static_cast<double>(opt.companion->meta.n_windows());
    induced = r.n_p - p_err;
    r.has_companion = true;
  }
  r.m = induced / (r.inside_fraction * r.n_s_in);
  const double transmission = r.n_s / (truth.q_s * r.n_s_in);

  double q = r.q.value;
  double m = r.m;
  if (opt.view == View::intrinsic) {
    q /= truth.q_p;
    m /= truth.q_p;
    p_err /= truth.q_p;
  }
  r.summary = summarize_triple(q, transmission, m, p_err, opt.view);

  r.g_ss = auto_correlation_zero(stream, Channel::signal, bins, opt.threads);
  r.g_pp = auto_correlation_zero(stream, Channel::probe, bins, opt.threads);
  if (r.g_ss && r.g_pp && *r.g_ss > 0.0 && *r.g_pp > 0.0)
    r.summary.g = cauchy_schwarz(r.fit.g2_zero, *r.g_ss, *r.g_pp);
  return r;
}

/// Key = value form of a measured summary, section [summary].
inline KeyValueDocument summary_document(const MeasuredSummary& r) {
  KeyValueDocument d;
  const auto& s = r.summary;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
  d.set("summary.view", s.view == View::intrinsic ? "intrinsic" : "observed");
  d.set("summary.q", s.q);
  d.set("summary.q_err", r.q.error);
  d.set("summary.transmission", s.transmission);
  d.set("summary.device_q", s.device_q);
  d.set("summary.m", s.psp.p11 + s.psp.p01);
  d.set("summary.p_err", s.p_err);
  d.set("summary.p00", s.psp.p00);
  d.set("summary.p01", s.psp.p01);
  d.set("summary.p10", s.psp.p10);
  d.set("summary.p11", s.psp.p11);
  d.set("summary.state_prep", s.psp.state_prep);
  d.set("summary.f_m", s.transfer.f_m);
  d.set("summary.f_qnd", s.transfer.f_qnd);
  d.set("summary.t_m", s.transfer.t_m);
  d.set("summary.t_s", s.transfer.t_s);
  d.set("summary.g2_zero", r.fit.g2_zero);
  d.set("summary.g2_zero_err", r.fit.g2_zero_err);
  d.set("summary.tau_neg_us", r.fit.tau_neg);
  d.set("summary.tau_neg_err_us", r.fit.tau_neg_err);
  d.set("summary.tau_pos_us", r.fit.tau_pos);
  d.set("summary.tau_pos_err_us", r.fit.tau_pos_err);
  d.set("summary.time_resolution_us", r.time_resolution_us);
  d.set("summary.fit_reduced_chi2", r.fit.reduced_chi2());
  d.set("summary.amplitude_significant", r.fit.amplitude_significant);
  d.set("summary.g_ss", opt(r.g_ss));
  d.set("summary.g_pp", opt(r.g_pp));
  d.set("summary.cauchy_schwarz", s.g);
  d.set("summary.n_s", r.n_s);
  d.set("summary.n_p", r.n_p);
  d.set("summary.n_s_in", r.n_s_in);
  d.set("summary.inside_fraction", r.inside_fraction);
  d.set("summary.baseline", r.q.baseline);
  d.set("summary.baseline_ok", r.q.baseline_ok);
  d.set("summary.has_companion", r.has_companion);
  return d;
}

}  // namespace cavdet
