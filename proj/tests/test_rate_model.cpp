#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cavdet/rate_model.hpp"

using namespace cavdet;

namespace {

DetectionChain clean_chain(double q_s = 0.3, double q_p = 0.2) {
  DetectionChain c;
  c.q_s = q_s;
  c.q_d = 1.0;
  c.outcoupling = q_p;
  c.alpha = 0.0;
  c.eps_b = 0.0;
  return c;
}

}  // namespace

TEST(InputPhotonNumbers, Cavity) {
  DetectionChain unit = clean_chain(0.3, 1.0);
  EXPECT_DOUBLE_EQ(input_cavity_photon_number(0.37, unit, 1.0), 0.37);
  EXPECT_NEAR(input_cavity_photon_number(0.37, clean_chain(0.3, 0.2), 2.0), 3.7, 1e-12);
  EXPECT_EQ(input_cavity_photon_number(0.0, clean_chain(), 2.0), 0.0);
  DetectionChain dead = clean_chain();
  dead.q_d = 0.0;
  EXPECT_THROW(input_cavity_photon_number(0.37, dead, 2.0), DomainError);
}

TEST(InputPhotonNumbers, Signal) {
  EXPECT_EQ(input_signal_photon_number(0.0, 0.3, 1.4), 0.0);
  EXPECT_NEAR(input_signal_photon_number(0.214, 0.3, 1.4), 1.0, 0.005);
  EXPECT_THROW(input_signal_photon_number(0.2, 0.0, 1.4), DomainError);
}

TEST(MeanCounts, BackgroundOnly) {
  DetectionChain c = clean_chain();
  c.alpha = 3e-3;
  const auto m = mean_counts(0.024, 0.0, 3.7, 0.2, c);
  EXPECT_EQ(m.n_s, 0.0);
  EXPECT_NEAR(m.n_p, 3e-3 * 0.2 * 3.7, 1e-16);
}

TEST(MeanCounts, OnlyCorrelatedTermSurvivesWithoutBackground) {
  const auto m = mean_counts(0.024, 0.1, 3.7, 0.2, clean_chain());
  EXPECT_NEAR(m.n_sp, 0.024 * 0.2 * 3.7 * 0.2 * 0.3 * 0.1, 1e-18);
}

TEST(MeanCounts, HandEvaluatedProbeCount) {
  DetectionChain c = clean_chain();
  c.alpha = 3e-3;
  const auto m = mean_counts(0.024, 0.1, 3.7, 0.2, c);
  EXPECT_NEAR(m.n_p, 3.996e-3, 1e-9);
  EXPECT_DOUBLE_EQ(m.n_p, m.t + m.b);
}

TEST(MeanCounts, NonNegativeEverywhere) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    DetectionChain c;
    c.q_s = u(rng);
    c.q_d = u(rng);
    c.outcoupling = u(rng);
    c.alpha = 0.01 * u(rng);
    c.eps_b = 0.01 * u(rng);
    c.r_s = 0.1 * u(rng);
    c.r_p = 0.1 * u(rng);
    const auto m = mean_counts(0.25 * u(rng), 2.0 * u(rng), 10.0 * u(rng), u(rng), c);
    EXPECT_GE(m.n_s, 0.0);
    EXPECT_GE(m.n_p, 0.0);
    EXPECT_GE(m.t, 0.0);
    EXPECT_GE(m.b, 0.0);
    EXPECT_GE(m.n_sp, 0.0);
  }
}

TEST(G2Zero, Limits) {
  EXPECT_DOUBLE_EQ(g2_zero(0.024, 0.0, 0.0, 1.0), 1.0);
  for (double n : {0.05, 0.1, 0.5, 2.0}) EXPECT_NEAR(g2_zero(0.024, 0.0, 0.0, n), 1.0 / n, 1e-15 / n);
  EXPECT_NEAR(g2_zero(0.024, 0.0, 3e-3, 0.1), 5.0, 1e-12);
  EXPECT_THROW(g2_zero(0.0, 0.0, 3e-3, 0.1), DomainError);
}

TEST(G2Zero, EqualsCountRatioAndIgnoresCavityPhotonNumber) {
  DetectionChain c = clean_chain();
  c.alpha = 3e-3;
  c.eps_b = 0.004;
  for (double n_s : {0.05, 0.3, 1.0}) {
    const double ref = g2_zero(0.024, c.eps_b, c.alpha, n_s);
    for (double n_c : {0.1, 1.0, 3.7, 10.0}) {
      const double g = g2_from_counts(mean_counts(0.024, n_s, n_c, 0.2, c));
      EXPECT_NEAR(g, ref, 1e-9 * ref);
    }
  }
}

TEST(ConditionalEfficiency, UncorrelatedIsZero) {
  MeanCounts m;
  m.n_s = 0.02;
  m.n_p = 0.004;
  m.n_sp = m.n_s * m.n_p;
  EXPECT_EQ(conditional_efficiency(m), 0.0);
  m.n_s = 0.0;
  EXPECT_THROW(conditional_efficiency(m), DomainError);
}

TEST(ConditionalEfficiency, ModelForm) {
  EXPECT_NEAR(conditional_efficiency_model(0.5, 0.2, 1.0), 0.10, 1e-15);
  EXPECT_LE(conditional_efficiency_saturated(0.5, 0.2, 1.0), 0.10);
  EXPECT_NEAR(conditional_efficiency_saturated(0.5, 0.2, 1.0), 0.10, 0.006);
  EXPECT_LT(conditional_efficiency_saturated(0.5, 0.2, 100.0), 1.0);
}

TEST(ConditionalEfficiency, BackgroundFreeCountsGiveLinearForm) {
  const auto m = mean_counts(0.024, 0.1, 3.7, 0.2, clean_chain());
  const double expected = 0.024 * 0.2 * 3.7 * (1.0 - 0.1);
  EXPECT_NEAR(conditional_efficiency(m), expected, 1e-15);
  const auto weak = mean_counts(0.024, 1e-7, 3.7, 0.2, clean_chain());
  EXPECT_NEAR(conditional_efficiency(weak), 0.024 * 0.2 * 3.7, 1e-8);
}

// The probe background terms cancel in the covariance, so only the
// accidental-coincidence factor (1 - n_s_in) remains.
TEST(ConditionalEfficiency, BackgroundCancelsInCovariance) {
  for (double alpha : {0.0, 3e-3, 0.02})
    for (double eps_b : {0.0, 0.004, 0.01})
      for (double n_s : {0.05, 0.3}) {
        DetectionChain c = clean_chain();
        c.alpha = alpha;
        c.eps_b = eps_b;
        c.r_p = 0.01;
        const auto m = mean_counts(0.024, n_s, 3.7, 0.2, c);
        const double expected = 0.024 * 0.2 * 3.7 * (1.0 - n_s);
        EXPECT_NEAR(conditional_efficiency(m), expected, 1e-14);
        EXPECT_NEAR(epsilon_from_efficiency(conditional_efficiency(m), 0.2, 3.7, n_s), 0.024, 1e-12);
      }
  EXPECT_THROW(epsilon_from_efficiency(0.01, 0.2, 3.7, 1.0), DomainError);
}

TEST(DefaultEpsB, DecoheredFraction) {
  EXPECT_NEAR(default_eps_b(0.024, 0.2, 4.3), 0.024 * (0.8 - scattering_probability(4.3)), 1e-15);
  EXPECT_EQ(default_eps_b(0.024, 0.9, 4.3), 0.0);
}

TEST(PspSolve, Examples) {
  auto t = psp_solve(0.0, 1.0, 0.0);
  EXPECT_EQ(t.p10, 1.0);
  EXPECT_EQ(t.p00 + t.p01 + t.p11, 0.0);

  t = psp_solve(1.0, 1.0, 1.0);
  EXPECT_EQ(t.p11, 1.0);
  EXPECT_EQ(t.p00 + t.p01 + t.p10, 0.0);

  t = psp_solve(0.10, 0.2, 0.5);
  EXPECT_NEAR(t.p11, 0.02, 1e-15);
  EXPECT_NEAR(t.p10, 0.18, 1e-15);
  EXPECT_NEAR(t.p01, 0.48, 1e-15);
  EXPECT_NEAR(t.p00, 0.32, 1e-15);
  EXPECT_NEAR(t.state_prep, 0.04, 1e-15);
}

TEST(PspSolve, ReproducesTheTripleOnRandomFeasibleInputs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  while (checked < 2000) {
    const double q = u(rng);
    const double ts = u(rng);
    const double m = u(rng);
    if (m < q * ts || 1.0 - ts - m + q * ts < 0.0) continue;
    const auto t = psp_solve(q, ts, m);
    EXPECT_NEAR(t.sum(), 1.0, 1e-12);
    EXPECT_NEAR(t.p11 + t.p10, ts, 1e-12);
    EXPECT_NEAR(t.p11 + t.p01, m, 1e-12);
    if (ts > 0.0) {
      EXPECT_NEAR(t.p11 / (t.p11 + t.p10), q, 1e-12);
    }
    for (double p : {t.p00, t.p01, t.p10, t.p11}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    ++checked;
  }
}

TEST(PspSolve, InfeasibleTriplesNameTheConstraint) {
  auto constraint_of = [](double q, double ts, double m) -> std::string {
    try {
      psp_solve(q, ts, m);
    } catch (const InfeasibleTriple& e) {
      EXPECT_NE(std::string(e.what()).find("inconsistent measurement triple"), std::string::npos);
      return e.constraint();
    }
    return "";
  };
  EXPECT_EQ(constraint_of(0.5, 0.5, 0.1), "M >= Q*T_s");
  EXPECT_EQ(constraint_of(0.1, 0.8, 0.5), "1 - T_s - M + Q*T_s >= 0");
  EXPECT_EQ(constraint_of(1.2, 0.5, 0.8), "0 <= Q <= 1");
  EXPECT_EQ(constraint_of(0.2, -0.1, 0.5), "0 <= T_s <= 1");
}

TEST(TransferCoefficient, Values) {
  EXPECT_DOUBLE_EQ(transfer_coefficient(1.0), 1.0);
  EXPECT_NEAR(transfer_coefficient(std::sqrt(0.5)), 1.0 / 3.0, 1e-15);
  double last = 0.0;
  for (double f = 0.05; f <= 1.0; f += 0.05) {
    const double t = transfer_coefficient(f);
    EXPECT_GT(t, last);
    last = t;
  }
  EXPECT_THROW(transfer_coefficient(0.0), DomainError);
}

TEST(CauchySchwarz, Values) {
  EXPECT_DOUBLE_EQ(cauchy_schwarz(1.0, 1.0, 1.0), 1.0);
  EXPECT_NEAR(cauchy_schwarz(std::sqrt(2.0 * 3.0), 2.0, 3.0), 1.0, 1e-15);
  EXPECT_NEAR(cauchy_schwarz(4.4, 1.6, 5.6), 19.36 / 8.96, 1e-14);
  EXPECT_NEAR(cauchy_schwarz(4.4, 1.6, 5.6), 2.16, 0.005);
  EXPECT_THROW(cauchy_schwarz(4.4, 0.0, 5.6), DomainError);
}

TEST(SummarizeTriple, CarriesDeviceEfficiencyAndTransfer) {
  const auto s = summarize_triple(0.10, 0.2, 0.5, 0.05);
  EXPECT_NEAR(s.device_q, 0.02, 1e-15);
  EXPECT_NEAR(s.transfer.f_m, 0.5, 1e-15);
  EXPECT_NEAR(s.transfer.f_qnd, 0.2, 1e-15);
  EXPECT_NEAR(s.transfer.t_m, 1.0 / 7.0, 1e-14);
  EXPECT_EQ(s.p_err, 0.05);
  EXPECT_THROW(summarize_triple(0.5, 0.5, 0.1, 0.0), InfeasibleTriple);
}

TEST(DetectionChain, Validation) {
  DetectionChain c;
  EXPECT_NEAR(c.q_p(), 0.198, 1e-15);
  c.q_s = 1.2;
  EXPECT_THROW(c.validate(), DomainError);
  DetectionChain d;
  d.r_p = -1.0;
  EXPECT_THROW(d.validate(), DomainError);
}
