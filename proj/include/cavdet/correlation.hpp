#pragma once

// Second-order correlation histograms g2(tau) from windowed click streams.
//
// The numerator counts same-window pairs binned by tau = t_b - t_a. The
// denominator is the number of accidental pairs expected at the same lag,
// estimated from pairs formed across different cycles at the same window
// slot:  D(tau) = (all pairs at slot - same-cycle pairs) / (n_cycles - 1).
// Both share the (window - |tau|) overlap, so finite-window edge effects
// cancel in the ratio.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "cavdet/click_stream.hpp"
#include "cavdet/errors.hpp"
#include "cavdet/keyvalue.hpp"

namespace cavdet {

// Uniform lag bins [-max_lag, max_lag) with an edge at zero.
struct LagBinning {
  std::int64_t bin_ns = 250;
  std::int64_t max_lag_ns = 10000;

  static LagBinning from_us(double bin_us, double max_lag_us) {
    LagBinning b;
    b.bin_ns = std::llround(bin_us * 1000.0);
    b.max_lag_ns = std::llround(max_lag_us * 1000.0);
    if (b.bin_ns <= 0 || b.max_lag_ns <= 0) throw DomainError("lag binning must be positive");
    if (b.max_lag_ns % b.bin_ns != 0) throw DomainError("bin width must divide the maximum lag");
    return b;
  }

  std::size_t bins() const { return static_cast<std::size_t>(2 * max_lag_ns / bin_ns); }
  double bin_us() const { return static_cast<double>(bin_ns) * 1e-3; }
  double lower_us(std::size_t i) const {
    return static_cast<double>(static_cast<std::int64_t>(i) * bin_ns - max_lag_ns) * 1e-3;
  }
  double center_us(std::size_t i) const { return lower_us(i) + 0.5 * bin_us(); }
  // Bin index for a lag in ns, or -1 when outside [-max_lag, max_lag).
  std::ptrdiff_t index(std::int64_t lag_ns) const {
    if (lag_ns < -max_lag_ns || lag_ns >= max_lag_ns) return -1;
    return static_cast<std::ptrdiff_t>((lag_ns + max_lag_ns) / bin_ns);
  }
  std::size_t zero_bin() const { return static_cast<std::size_t>(max_lag_ns / bin_ns); }
};

struct CorrelationHistogram {
  LagBinning binning;
  Channel a = Channel::signal;
  Channel b = Channel::probe;
  std::vector<double> g2;
  std::vector<double> err;
  std::vector<std::uint64_t> pair_counts;  // same-window pairs
  std::vector<double> normalization;       // expected accidental pairs

  std::size_t size() const { return g2.size(); }
  double bin_us() const { return binning.bin_us(); }
  double center_us(std::size_t i) const { return binning.center_us(i); }
  double lower_us(std::size_t i) const { return binning.lower_us(i); }
};

namespace detail {

// Index ranges [begin, end) of `events` that share a window id.
inline std::vector<std::size_t> window_starts(const std::vector<ClickEvent>& events) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (i == 0 || events[i].window_id != events[i - 1].window_id) starts.push_back(i);
  starts.push_back(events.size());
  return starts;
}

inline void count_window_pairs(const std::vector<ClickEvent>& events, std::size_t begin, std::size_t end,
                               Channel a, Channel b, const LagBinning& bins, std::vector<std::uint64_t>& counts) {
  for (std::size_t i = begin; i < end; ++i) {
    if (events[i].channel != a) continue;
    for (std::size_t j = begin; j < end; ++j) {
      if (i == j || events[j].channel != b) continue;
      const auto k = bins.index(events[j].t_ns - events[i].t_ns);
      if (k >= 0) ++counts[static_cast<std::size_t>(k)];
    }
  }
}

}  // namespace detail

/// Same-window pair counts per lag bin; self-pairs are excluded when a == b.
/// Integer counts, so the result does not depend on `threads`.
inline std::vector<std::uint64_t> count_same_window_pairs(const ClickStream& stream, Channel a, Channel b,
                                                          const LagBinning& bins, unsigned threads = 1) {
  const auto starts = detail::window_starts(stream.events);
  const std::size_t n_groups = starts.size() - 1;
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n_groups, 1))));
  std::vector<std::vector<std::uint64_t>> partial(n_threads, std::vector<std::uint64_t>(bins.bins(), 0));
  auto work = [&](unsigned part) {
    const std::size_t g0 = n_groups * part / n_threads;
    const std::size_t g1 = n_groups * (part + 1) / n_threads;
    for (std::size_t g = g0; g < g1; ++g)
      detail::count_window_pairs(stream.events, starts[g], starts[g + 1], a, b, bins, partial[part]);
  };
  if (n_threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned p = 0; p < n_threads; ++p) pool.emplace_back(work, p);
  }
  std::vector<std::uint64_t> total(bins.bins(), 0);
  for (const auto& part : partial)
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += part[k];
  return total;
}

/// Pairs formed between any two windows of the same slot (all cycles, self
/// pairs included), per lag bin.
inline std::vector<std::uint64_t> count_slot_pooled_pairs(const ClickStream& stream, Channel a, Channel b,
                                                          const LagBinning& bins) {
  const auto& meta = stream.meta;
  const std::uint32_t n_slots = meta.windows_per_cycle;
  const auto w_ns = meta.window_ns;

  // Bucket click times by slot.
  std::vector<std::vector<std::int64_t>> a_times(n_slots);
  std::vector<std::vector<std::int64_t>> b_times(n_slots);
  for (const auto& e : stream.events) {
    const auto slot = meta.slot_of(e.window_id);
    if (e.channel == a) a_times[slot].push_back(e.t_ns);
    if (e.channel == b) b_times[slot].push_back(e.t_ns);
  }
  std::vector<std::uint64_t> pooled(bins.bins(), 0);
  std::vector<std::uint64_t> cumulative(static_cast<std::size_t>(w_ns) + 1);

  auto below = [&](std::int64_t x) {  // number of b clicks with t < x
    return cumulative[static_cast<std::size_t>(std::clamp<std::int64_t>(x, 0, w_ns))];
  };
  const std::size_t n_bins = bins.bins();
  for (std::uint32_t s = 0; s < n_slots; ++s) {
    if (a_times[s].empty() || b_times[s].empty()) continue;
    std::fill(cumulative.begin(), cumulative.end(), 0);
    for (auto t : b_times[s]) ++cumulative[static_cast<std::size_t>(t) + 1];
    for (std::size_t i = 1; i < cumulative.size(); ++i) cumulative[i] += cumulative[i - 1];
    for (auto ta : a_times[s]) {
      std::int64_t lo = ta - bins.max_lag_ns;
      std::uint64_t c_lo = below(lo);
      for (std::size_t k = 0; k < n_bins; ++k) {
        const std::int64_t hi = lo + bins.bin_ns;
        const std::uint64_t c_hi = below(hi);
        pooled[k] += c_hi - c_lo;
        lo = hi;
        c_lo = c_hi;
      }
    }
  }
  return pooled;
}

/// g2 histogram of channel b relative to channel a with shuffled-pair
/// normalization. Errors are Poisson on the pair count.
inline CorrelationHistogram cross_correlation(const ClickStream& stream, Channel a, Channel b,
                                              const LagBinning& bins, unsigned threads = 1) {
  if (stream.count(a) == 0) throw NoEventsError(std::string("no events on channel ") + channel_code(a));
  if (stream.count(b) == 0) throw NoEventsError(std::string("no events on channel ") + channel_code(b));
  if (stream.meta.n_cycles < 2) throw DomainError("shuffled normalization needs at least two cycles");
  if (bins.max_lag_ns >= stream.meta.window_ns) throw DomainError("maximum lag must be shorter than the window");

  CorrelationHistogram h;
  h.binning = bins;
  h.a = a;
  h.b = b;
  h.pair_counts = count_same_window_pairs(stream, a, b, bins, threads);
  const auto pooled = count_slot_pooled_pairs(stream, a, b, bins);

  const std::size_t n = bins.bins();
  h.g2.assign(n, 0.0);
  h.err.assign(n, 0.0);
  h.normalization.assign(n, 0.0);
  const double other_cycles = static_cast<double>(stream.meta.n_cycles - 1);
  const std::uint64_t self_pairs = a == b ? stream.count(a) : 0;
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t same_cycle = h.pair_counts[k];
    if (k == bins.zero_bin()) same_cycle += self_pairs;
    const double expected = static_cast<double>(pooled[k] - same_cycle) / other_cycles;
    h.normalization[k] = expected;
    if (expected > 0.0) {
      const double count = static_cast<double>(h.pair_counts[k]);
      h.g2[k] = count / expected;
      h.err[k] = std::sqrt(std::max(count, 1.0)) / expected;
    }
  }
  return h;
}

inline CorrelationHistogram cross_correlation(const ClickStream& stream, Channel a, Channel b, double bin_us = 0.25,
                                              double max_lag_us = 10.0, unsigned threads = 1) {
  return cross_correlation(stream, a, b, LagBinning::from_us(bin_us, max_lag_us), threads);
}

/// g2 pooled over the two bins that touch zero lag.
inline double zero_lag_value(const CorrelationHistogram& h) {
  const std::size_t k = h.binning.zero_bin();
  const double num = static_cast<double>(h.pair_counts[k - 1] + h.pair_counts[k]);
  const double den = h.normalization[k - 1] + h.normalization[k];
  if (!(den > 0.0)) throw DomainError("zero_lag_value: no accidental pairs near zero lag");
  return num / den;
}

/// Writes `tau_us,g2,err` rows, one per bin, tau at the bin center.
inline void write_histogram_csv(const std::filesystem::path& path, const CorrelationHistogram& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "tau_us,g2,err\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out << format_double(h.center_us(i)) << ',' << format_double(h.g2[i]) << ',' << format_double(h.err[i]) << '\n';
}

}  // namespace cavdet
