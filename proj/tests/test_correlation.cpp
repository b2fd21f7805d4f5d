#include <gtest/gtest.h>

#include <cmath>

#include "cavdet/correlation.hpp"
#include "cavdet/event_simulator.hpp"

using namespace cavdet;

namespace {

DetectionTargets correlated_targets() {
  DetectionTargets t;
  t.input_rate_per_us = 2.0;
  t.transmission = 0.5;
  t.q = 0.4;
  t.m = 0.3;
  t.probe_background_per_us = 0.3;
  t.signal_dark_per_us = 0.2;
  return t;
}

SimulationLayout layout(std::uint64_t seed, std::uint64_t cycles, std::uint32_t slots) {
  SimulationLayout l;
  l.seed = seed;
  l.n_cycles = cycles;
  l.windows_per_cycle = slots;
  return l;
}

struct BruteForce {
  std::vector<std::uint64_t> same;
  std::vector<std::uint64_t> cross_cycle;
};

// Every ordered pair of clicks in the stream, checked one by one.
BruteForce brute_force(const ClickStream& s, Channel a, Channel b, const LagBinning& bins) {
  BruteForce r{std::vector<std::uint64_t>(bins.bins(), 0), std::vector<std::uint64_t>(bins.bins(), 0)};
  const auto& ev = s.events;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].channel != a) continue;
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (i == j || ev[j].channel != b) continue;
      const std::int64_t lag = ev[j].t_ns - ev[i].t_ns;
      if (lag < -bins.max_lag_ns || lag >= bins.max_lag_ns) continue;
      const auto k = static_cast<std::size_t>((lag + bins.max_lag_ns) / bins.bin_ns);
      if (ev[i].window_id == ev[j].window_id) {
        ++r.same[k];
      } else if (s.meta.slot_of(ev[i].window_id) == s.meta.slot_of(ev[j].window_id)) {
        ++r.cross_cycle[k];
      }
    }
  }
  return r;
}

}  // namespace

TEST(CrossCorrelation, MatchesBruteForcePairCounts) {
  const auto bins = LagBinning::from_us(0.25, 10.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = simulate_targets(correlated_targets(), layout(seed, 10, 6));
    ASSERT_LE(s.events.size(), 10000u);
    for (auto [a, b] : {std::pair{Channel::signal, Channel::probe}, std::pair{Channel::probe, Channel::probe}}) {
      const auto h = cross_correlation(s, a, b, bins);
      const auto oracle = brute_force(s, a, b, bins);
      ASSERT_EQ(h.pair_counts, oracle.same) << "seed " << seed;
      for (std::size_t k = 0; k < h.size(); ++k) {
        const double expected = static_cast<double>(oracle.cross_cycle[k]) / 9.0;
        ASSERT_DOUBLE_EQ(h.normalization[k], expected) << "seed " << seed << " bin " << k;
        if (expected > 0.0) {
          ASSERT_DOUBLE_EQ(h.g2[k], static_cast<double>(oracle.same[k]) / expected);
        }
      }
    }
  }
}

TEST(CrossCorrelation, IndependentChannelsAreFlat) {
  DetectionTargets t;
  t.probe_background_per_us = 0.05;
  t.signal_dark_per_us = 0.05;
  const auto s = simulate_targets(t, layout(5, 3334, 300));  // ~1e6 windows
  const auto h = cross_correlation(s, Channel::signal, Channel::probe, 0.25, 10.0);
  double mean = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    EXPECT_NEAR(h.g2[k], 1.0, 5.0 * h.err[k]) << "bin " << k;
    mean += h.g2[k];
  }
  mean /= static_cast<double>(h.size());
  EXPECT_NEAR(mean, 1.0, 0.01);

  // Auto-correlation of a Poisson channel: pairs are counted in both orders,
  // so the independent-pair error is sqrt(2) times the per-bin Poisson value.
  const auto g = cross_correlation(s, Channel::signal, Channel::signal, 0.25, 10.0);
  const std::size_t z = g.binning.zero_bin();
  const double pairs = static_cast<double>(g.pair_counts[z - 1] + g.pair_counts[z]);
  EXPECT_NEAR(zero_lag_value(g), 1.0, 4.0 * std::sqrt(2.0 / pairs));
}

TEST(CrossCorrelation, CorrelatedPeakAtZeroLag) {
  const auto s = simulate_targets(correlated_targets(), layout(3, 200, 50));
  const auto h = cross_correlation(s, Channel::signal, Channel::probe, 0.25, 10.0);
  const double g0 = zero_lag_value(h);
  const double peak = expected_g2_zero(correlated_targets(), 20.0) - 1.0;
  // The two zero-lag bins average the kernel over +-0.25 us.
  const double tn = 1.2, tp = 1.3, half = 0.25;
  const double averaged = 1.0 + peak * (tn * -std::expm1(-half / tn) + tp * -std::expm1(-half / tp)) / (2 * half);
  const std::size_t z = h.binning.zero_bin();
  const double pairs = static_cast<double>(h.pair_counts[z - 1] + h.pair_counts[z]);
  EXPECT_NEAR(g0, averaged, 4.0 * g0 / std::sqrt(pairs));
  EXPECT_GT(g0, 1.05);
  EXPECT_NEAR(h.g2.front(), 1.0, 5.0 * h.err.front());
}

TEST(CrossCorrelation, ThreadCountDoesNotChangeHistogram) {
  const auto s = simulate_targets(correlated_targets(), layout(9, 100, 40));
  const auto a = cross_correlation(s, Channel::signal, Channel::probe, 0.25, 10.0, 1);
  const auto b = cross_correlation(s, Channel::signal, Channel::probe, 0.25, 10.0, 4);
  EXPECT_EQ(a.pair_counts, b.pair_counts);
  EXPECT_EQ(a.g2, b.g2);
}

TEST(CrossCorrelation, Errors) {
  DetectionTargets t;
  t.probe_background_per_us = 0.1;
  const auto s = simulate_targets(t, layout(1, 5, 10));
  EXPECT_THROW(cross_correlation(s, Channel::signal, Channel::probe), NoEventsError);
  const auto one = simulate_targets(correlated_targets(), layout(1, 1, 10));
  EXPECT_THROW(cross_correlation(one, Channel::signal, Channel::probe), DomainError);
  const auto ok = simulate_targets(correlated_targets(), layout(1, 3, 10));
  EXPECT_THROW(cross_correlation(ok, Channel::signal, Channel::probe, 0.25, 20.0), DomainError);
  EXPECT_THROW(LagBinning::from_us(0.3, 10.0), DomainError);
  EXPECT_THROW(LagBinning::from_us(0.0, 10.0), DomainError);
}

TEST(LagBinning, Layout) {
  const auto b = LagBinning::from_us(0.25, 10.0);
  EXPECT_EQ(b.bins(), 80u);
  EXPECT_EQ(b.zero_bin(), 40u);
  EXPECT_EQ(b.index(0), 40);
  EXPECT_EQ(b.index(-1), 39);
  EXPECT_EQ(b.index(-10000), 0);
  EXPECT_EQ(b.index(10000), -1);
  EXPECT_DOUBLE_EQ(b.center_us(0), -9.875);
}
