#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cavdet/physics_model.hpp"

using namespace cavdet;

namespace {

// Inset operating point in plain MHz numbers. zeta is a ratio of rates, so
// the 2pi factors cancel and the oracle can work without them.
struct Mhz {
  double eta = 4.3, d = 3.0, omega = 2.6, kappa = 0.14, big = 5.2, gamma = 0.1;
};

double zeta_oracle(const Mhz& m) {
  return (1.0 + m.gamma * m.big / (m.omega * m.omega)) *
         (1.0 + (m.omega * m.omega / (m.kappa * m.big) + m.gamma / m.kappa) / (1.0 + m.eta));
}

double eps0_oracle(const Mhz& m) {
  const double z = zeta_oracle(m);
  const double c = m.eta / (1.0 + m.eta);
  const double a = 1.0 - std::exp(-m.d / (2.0 * z));
  return 0.25 * c * c * a * a;
}

PhysicalParams params(const Mhz& m) {
  PhysicalParams p;
  p.eta = m.eta;
  p.optical_depth_in = m.d;
  p.omega = mhz(m.omega);
  p.kappa = mhz(m.kappa);
  p.gamma_big = mhz(m.big);
  p.gamma0 = mhz(m.gamma);
  return p;
}

}  // namespace

TEST(Units, MhzAppliesTwoPiOnce) {
  EXPECT_DOUBLE_EQ(mhz(1.0).rad_per_us(), 2.0 * std::numbers::pi);
  EXPECT_NEAR(mhz(2.6).over_2pi_mhz(), 2.6, 1e-15);
}

TEST(Zeta, MatchesIndependentEvaluation) {
  for (double omega : {0.5, 1.3, 2.6, 3.5, 8.0})
    for (double gamma : {0.0, 0.1, 0.18, 1.0})
      for (double eta : {0.0, 1.0, 4.3, 20.0}) {
        Mhz m;
        m.omega = omega;
        m.gamma = gamma;
        m.eta = eta;
        const PhysicalParams p = params(m);
        EXPECT_NEAR(zeta(p, mhz(gamma)), zeta_oracle(m), 1e-12 * zeta_oracle(m));
      }
}

TEST(Zeta, InsetValue) {
  const Mhz m;
  EXPECT_NEAR(zeta(params(m), mhz(0.1)), 3.11, 0.01);
}

TEST(Zeta, TendsToOneForWeakControlWithoutDecoherence) {
  Mhz m;
  m.omega = 1e-4;
  EXPECT_NEAR(zeta(params(m), mhz(0.0)), 1.0, 1e-6);
}

TEST(Zeta, GrowsWithGamma) {
  const PhysicalParams p = params(Mhz{});
  double last = zeta(p, mhz(0.0));
  EXPECT_GE(last, 1.0);
  for (double g = 0.05; g < 100.0; g *= 1.7) {
    const double z = zeta(p, mhz(g));
    EXPECT_GT(z, last);
    last = z;
  }
  EXPECT_GT(last, 1e3);
}

TEST(Zeta, ZeroOmegaIsDomainError) {
  PhysicalParams p;
  p.omega = mhz(0.0);
  EXPECT_THROW(zeta(p, mhz(0.1)), DomainError);
}

TEST(Epsilon0, InsetValueMatchesOracle) {
  const Mhz m;
  const double e = epsilon0(params(m), mhz(0.1));
  EXPECT_NEAR(e, eps0_oracle(m), 1e-14);
  EXPECT_NEAR(e, 0.024, 0.001);
  EXPECT_GE(4.0 * e, 0.09);
  EXPECT_LE(4.0 * e, 0.11);
}

TEST(Epsilon0, LimitsAndBounds) {
  Mhz big;
  big.eta = 1e7;
  big.d = 1e7;
  EXPECT_NEAR(epsilon0(params(big), mhz(0.1)), 0.25, 1e-6);
  Mhz none;
  none.d = 0.0;
  EXPECT_EQ(epsilon0(params(none), mhz(0.1)), 0.0);
  for (double eta : {0.0, 0.5, 4.3, 50.0})
    for (double d : {0.0, 1.0, 10.0, 1e3})
      for (double omega : {0.3, 2.6, 30.0}) {
        Mhz m;
        m.eta = eta;
        m.d = d;
        m.omega = omega;
        const double e = epsilon0(params(m), mhz(0.1));
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, 0.25);
      }
}

TEST(Epsilon0, NondecreasingInDepthAndCooperativity) {
  double last = -1.0;
  for (double d = 0.0; d <= 40.0; d += 0.5) {
    Mhz m;
    m.d = d;
    const double e = epsilon0(params(m), mhz(0.1));
    EXPECT_GE(e, last);
    last = e;
  }
  last = -1.0;
  for (double eta = 0.0; eta <= 40.0; eta += 0.5) {
    Mhz m;
    m.eta = eta;
    const double e = epsilon0(params(m), mhz(0.1));
    EXPECT_GE(e, last);
    last = e;
  }
}

TEST(CavityDecoherence, Values) {
  PhysicalParams p;
  EXPECT_EQ(cavity_decoherence(0.0, p).rad_per_us(), 0.0);
  EXPECT_NEAR(cavity_decoherence(3.7, p).over_2pi_mhz(), 3.7 * 0.14 * 4.3 / (5.3 * 5.3), 1e-14);
  EXPECT_NEAR(cavity_decoherence(3.7, p).over_2pi_mhz(), 0.0793, 1e-4);
  EXPECT_NEAR(cavity_decoherence(2.0, p).rad_per_us(), 2.0 * cavity_decoherence(1.0, p).rad_per_us(), 1e-15);
  EXPECT_THROW(cavity_decoherence(-1.0, p), DomainError);
}

TEST(SignalTransmission, Limits) {
  PhysicalParams p;
  p.optical_depth_in = 0.0;
  p.optical_depth_out = 0.0;
  EXPECT_EQ(signal_transmission(p, mhz(0.3)), 1.0);
  PhysicalParams q;
  q.optical_depth_out = 2.0;
  q.omega = mhz(1e5);
  EXPECT_NEAR(signal_transmission(q, mhz(0.3)), 1.0, 1e-6);
  // gamma = 0: perfect EIT inside the cavity region
  EXPECT_EQ(eit_attenuation(3.0, mhz(2.6), mhz(5.2), mhz(0.0)), 1.0);
}

TEST(SignalTransmission, OracleAndOutsideFactor) {
  PhysicalParams p;
  p.optical_depth_out = 1.5;
  const double g = 0.1 + 0.05;  // MHz
  const double in = std::exp(-3.0 / (1.0 + 2.6 * 2.6 / (5.2 * g)));
  const double out = std::exp(-1.5 / (1.0 + 2.6 * 2.6 / (5.2 * 0.1)));
  EXPECT_NEAR(signal_transmission(p, mhz(g)), in * out, 1e-14);
}

TEST(SignalTransmission, MonotoneInPhotonNumberAndControl) {
  PhysicalParams p;
  double last = 2.0;
  for (double n = 0.0; n <= 10.0; n += 0.25) {
    const double t = evaluate_model(p, n).transmission;
    EXPECT_LE(t, last);
    last = t;
  }
  last = -1.0;
  for (double om = 0.5; om <= 10.0; om += 0.25) {
    p.omega = mhz(om);
    const double t = evaluate_model(p, 2.0).transmission;
    EXPECT_GE(t, last);
    last = t;
  }
}

TEST(SignalTransmission, OneOverEPhotonNumberGrowsWithControl) {
  PhysicalParams p;
  double last = 0.0;
  for (double om : {1.8, 2.9, 3.5}) {
    p.omega = mhz(om);
    const double n1e = fitted_one_over_e_photon_number(p);
    EXPECT_GT(n1e, last);
    last = n1e;
  }
}

TEST(EitLifetime, Values) {
  PhysicalParams p;
  p.omega = mhz(1.3);
  const double oracle = 1.0 / ((2 * std::numbers::pi * 1.3) * (2 * std::numbers::pi * 1.3) / (2 * std::numbers::pi * 5.2 * 3.0) + 2 * std::numbers::pi * 0.1);
  EXPECT_NEAR(eit_lifetime(p), oracle, 1e-14);
  EXPECT_NEAR(eit_lifetime(p), 0.76, 0.01);
  p.omega = mhz(1e-6);
  EXPECT_NEAR(eit_lifetime(p), 1.0 / mhz(0.1).rad_per_us(), 1e-9);
  p.omega = mhz(1e4);
  EXPECT_LT(eit_lifetime(p), 1e-6);
}

TEST(EitLifetime, MeasuredValueOverridesClosedForm) {
  PhysicalParams p;
  p.tau_eit_us = 1.4;
  EXPECT_EQ(effective_eit_lifetime(p), 1.4);
  EXPECT_EQ(evaluate_model(p, 1.0).rates.tau_eit, 1.4);
}

TEST(GratingOverlap, Values) {
  EXPECT_EQ(grating_overlap(0.0), 0.0);
  EXPECT_DOUBLE_EQ(grating_overlap(3.0), 0.5);
  EXPECT_NEAR(grating_overlap(8.6), 0.677, 1e-3);
  EXPECT_GT(grating_overlap(1e8), 0.9999);
  EXPECT_THROW(grating_overlap(-1.0), DomainError);
}

TEST(ScatteringProbability, Values) {
  EXPECT_DOUBLE_EQ(scattering_probability(1.0), 0.5);
  EXPECT_NEAR(scattering_probability(4.3), 0.306, 1e-3);
  EXPECT_NEAR(scattering_probability(20.0), 40.0 / 441.0, 1e-15);
  for (double eta = 0.0; eta < 50.0; eta += 0.37) EXPECT_LE(scattering_probability(eta), 0.5);
}

TEST(BlockingProbability, Values) {
  EXPECT_EQ(blocking_probability(0.0), 0.0);
  EXPECT_DOUBLE_EQ(blocking_probability(1.0), 1.0);
  EXPECT_NEAR(blocking_probability(0.096), 1.0 - std::pow(1.0 - std::sqrt(0.096), 2), 1e-15);
  EXPECT_NEAR(blocking_probability(0.096), 0.53, 0.01);
  EXPECT_THROW(blocking_probability(-0.1), DomainError);
  EXPECT_THROW(blocking_probability(1.1), DomainError);
}

TEST(PeakCooperativity, Values) {
  PhysicalParams p;
  EXPECT_NEAR(peak_cooperativity(p), 4 * 1.25 * 1.25 / (0.14 * 5.2), 1e-12);
  EXPECT_NEAR(peak_cooperativity(p), 8.59, 0.01);
  p.g_half_rabi = mhz(0.0);
  EXPECT_EQ(peak_cooperativity(p), 0.0);
  PhysicalParams a;
  PhysicalParams b;
  b.g_half_rabi = mhz(2.5);
  EXPECT_NEAR(peak_cooperativity(b), 4.0 * peak_cooperativity(a), 1e-12);
}

TEST(EpsilonTotal, Values) {
  EXPECT_EQ(epsilon_total(0.02, 2.0, 0.0), 0.02);
  EXPECT_DOUBLE_EQ(epsilon_total(0.02, 2.0, 2.0), 0.04);
  EXPECT_THROW(epsilon_total(0.02, 0.0, 1.0), DomainError);
}

TEST(EpsilonTotal, DecreasesWithControlAtDepthFour) {
  PhysicalParams p;
  p.optical_depth_in = 4.0;
  double last = 1.0;
  for (double om = 1.3; om <= 3.5 + 1e-9; om += 0.05) {
    p.omega = mhz(om);
    const double e = evaluate_model(p, 0.0).eps;
    EXPECT_LT(e, last) << "omega " << om;
    last = e;
  }
}

TEST(DerivedRates, Invariants) {
  PhysicalParams p;
  for (double n : {0.0, 0.5, 3.7, 10.0}) {
    const auto r = derive_rates(p, n);
    EXPECT_GE(r.gamma_total, p.gamma0);
    EXPECT_GE(r.zeta, 1.0);
    EXPECT_GT(r.tau_c, 0.0);
    EXPECT_GT(r.tau_eit, 0.0);
  }
  EXPECT_NEAR(cavity_lifetime(p), 2.0 / mhz(0.14).rad_per_us(), 1e-15);
}

TEST(DetectionFactor, GratingAndLocalization) {
  PhysicalParams p;
  EXPECT_NEAR(detection_transmission_factor(p), 0.7 * grating_overlap(peak_cooperativity(p)), 1e-15);
  p.grating_uses_peak_eta = false;
  EXPECT_NEAR(detection_transmission_factor(p), 0.7 * grating_overlap(4.3), 1e-15);
  p.grating_loss_enabled = false;
  EXPECT_EQ(detection_transmission_factor(p), 0.7);
}

TEST(PhysicalParams, ValidationRejectsBadValues) {
  PhysicalParams p;
  p.localization_loss = 1.5;
  EXPECT_THROW(p.validate(), DomainError);
  PhysicalParams q;
  q.kappa = mhz(0.0);
  EXPECT_THROW(q.validate(), DomainError);
  PhysicalParams r;
  r.optical_depth_in = -1.0;
  EXPECT_THROW(r.validate(), DomainError);
}
