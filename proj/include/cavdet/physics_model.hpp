#pragma once

// Closed-form cavity-assisted detection and EIT transmission model.
//
// Every rate is an angular frequency in rad/us and every time is in us.
// The functions are pure; `gamma_total` is the atomic decoherence rate that
// enters the probe and transmission formulas, either the probe-free value
// gamma0 or the loaded value gamma0 + gamma_c(n_c).

#include <cmath>
#include <optional>
#include <string>

#include "cavdet/errors.hpp"
#include "cavdet/units.hpp"

namespace cavdet {

struct PhysicalParams {
  double eta = 4.3;  // spatially averaged cooperativity
  AngularRate g_half_rabi = mhz(1.25);
  double optical_depth_in = 3.0;
  double optical_depth_out = 0.0;
  AngularRate omega = mhz(2.6);
  AngularRate kappa = mhz(0.14);
  AngularRate gamma_big = mhz(5.2);
  AngularRate gamma0 = mhz(0.1);
  bool grating_loss_enabled = true;
  // Grating overlap uses the antinode cooperativity 4g^2/(kappa Gamma) when
  // true, the averaged `eta` otherwise.
  bool grating_uses_peak_eta = true;
  double localization_loss = 0.7;
  // Measured EIT lifetime; replaces the closed form when set.
  std::optional<double> tau_eit_us;

  void validate() const {
    auto positive = [](AngularRate r, const char* what) {
      if (!(r.rad_per_us() > 0.0)) throw DomainError(std::string(what) + " must be > 0");
    };
    positive(g_half_rabi, "g");
    positive(omega, "omega");
    positive(kappa, "kappa");
    positive(gamma_big, "Gamma");
    positive(gamma0, "gamma0");
    if (!(eta >= 0.0)) throw DomainError("eta must be >= 0");
    if (!(optical_depth_in >= 0.0) || !(optical_depth_out >= 0.0))
      throw DomainError("optical depths must be >= 0");
    if (!(localization_loss >= 0.0 && localization_loss <= 1.0))
      throw DomainError("localization_loss must lie in [0,1]");
    if (tau_eit_us && !(*tau_eit_us > 0.0)) throw DomainError("tau_eit must be > 0");
  }
};

struct DerivedRates {
  AngularRate gamma_c;
  AngularRate gamma_total;
  double tau_c = 0.0;    // us
  double tau_eit = 0.0;  // us
  double zeta = 1.0;
};

/// Slow-light suppression factor zeta of the single-excitation probe
/// probability. Grows without bound with gamma; tends to 1 for gamma -> 0 and
/// Omega^2 << kappa Gamma.
inline double zeta(const PhysicalParams& p, AngularRate gamma_total) {
  const double omega = p.omega.rad_per_us();
  if (omega == 0.0) throw DomainError("zeta: omega = 0");
  const double gamma = gamma_total.rad_per_us();
  const double big = p.gamma_big.rad_per_us();
  const double kappa = p.kappa.rad_per_us();
  const double first = 1.0 + gamma * big / (omega * omega);
  const double second = 1.0 + (omega * omega / (kappa * big) + gamma / kappa) / (1.0 + p.eta);
  return first * second;
}

/// Probability that a cavity photon yields a probe photon while one signal
/// polariton is inside the cavity mode. Capped at 1/4.
inline double epsilon0(const PhysicalParams& p, AngularRate gamma_total) {
  if (p.optical_depth_in == 0.0) return 0.0;
  const double z = zeta(p, gamma_total);
  const double coop = p.eta / (1.0 + p.eta);
  const double absorbed = -std::expm1(-p.optical_depth_in / (2.0 * z));
  return 0.25 * coop * coop * absorbed * absorbed;
}

/// Cavity-induced decoherence gamma_c = n_c kappa eta / (1+eta)^2.
inline AngularRate cavity_decoherence(double n_c_in, const PhysicalParams& p) {
  if (!(n_c_in >= 0.0)) throw DomainError("cavity_decoherence: n_c_in < 0");
  const double d = 1.0 + p.eta;
  return AngularRate::from_rad_per_us(n_c_in * p.kappa.rad_per_us() * p.eta / (d * d));
}

// exp(-D / (1 + Omega^2/(Gamma gamma))), with the gamma -> 0 limit equal to 1.
inline double eit_attenuation(double optical_depth, AngularRate omega, AngularRate gamma_big,
                              AngularRate gamma) {
  if (optical_depth == 0.0 || gamma.rad_per_us() == 0.0) return 1.0;
  const double o = omega.rad_per_us();
  const double ratio = o * o / (gamma_big.rad_per_us() * gamma.rad_per_us());
  return std::exp(-optical_depth / (1.0 + ratio));
}

/// EIT transmission of atoms outside the cavity waist (probe-free).
inline double outside_transmission(const PhysicalParams& p) {
  return eit_attenuation(p.optical_depth_out, p.omega, p.gamma_big, p.gamma0);
}

/// Mean signal transmission T_s in the presence of cavity light.
inline double signal_transmission(const PhysicalParams& p, AngularRate gamma_total) {
  return outside_transmission(p) * eit_attenuation(p.optical_depth_in, p.omega, p.gamma_big, gamma_total);
}

inline double eit_lifetime(const PhysicalParams& p) {
  const double o = p.omega.rad_per_us();
  const double g0 = p.gamma0.rad_per_us();
  double rate = g0;
  if (p.optical_depth_in > 0.0) {
    rate += o * o / (p.gamma_big.rad_per_us() * p.optical_depth_in);
  } else if (o > 0.0) {
    return 0.0;  // no medium: no slow-light delay
  }
  if (rate == 0.0) throw DomainError("eit_lifetime: zero denominator");
  return 1.0 / rate;
}

/// Uses the measured lifetime when one is configured.
inline double effective_eit_lifetime(const PhysicalParams& p) {
  return p.tau_eit_us ? *p.tau_eit_us : eit_lifetime(p);
}

inline double cavity_lifetime(const PhysicalParams& p) {
  const double k = p.kappa.rad_per_us();
  if (!(k > 0.0)) throw DomainError("cavity_lifetime: kappa must be > 0");
  return 2.0 / k;
}

/// Overlap between the polariton before and after projection onto the
/// standing-wave cavity mode.
inline double grating_overlap(double eta) {
  if (!(eta >= 0.0)) throw DomainError("grating_overlap: eta < 0");
  return 1.0 - 1.0 / std::sqrt(1.0 + eta);
}

/// Probability that a cavity photon is scattered into free space and destroys
/// the polariton. Maximal (1/2) at eta = 1.
inline double scattering_probability(double eta) {
  if (!(eta >= 0.0)) throw DomainError("scattering_probability: eta < 0");
  return 2.0 * eta / ((1.0 + eta) * (1.0 + eta));
}

/// Probability that one stored excitation blocks sigma+ cavity transmission.
inline double blocking_probability(double four_eps0) {
  if (!(four_eps0 >= 0.0 && four_eps0 <= 1.0))
    throw DomainError("blocking_probability: 4*eps0 must lie in [0,1]");
  const double open = 1.0 - std::sqrt(four_eps0);
  return 1.0 - open * open;
}

/// Cooperativity of an atom at a cavity antinode, 4 g^2 / (kappa Gamma).
inline double peak_cooperativity(const PhysicalParams& p) {
  const double g = p.g_half_rabi.rad_per_us();
  return 4.0 * g * g / (p.kappa.rad_per_us() * p.gamma_big.rad_per_us());
}

/// Total probe probability per cavity photon integrated over the polariton
/// dwell time.
inline double epsilon_total(double eps0, double tau_c, double tau_eit) {
  if (!(tau_c > 0.0)) throw DomainError("epsilon_total: tau_c must be > 0");
  if (!(tau_eit >= 0.0)) throw DomainError("epsilon_total: tau_eit must be >= 0");
  return eps0 * (tau_c + tau_eit) / tau_c;
}

inline DerivedRates derive_rates(const PhysicalParams& p, double n_c_in) {
  DerivedRates r;
  r.gamma_c = cavity_decoherence(n_c_in, p);
  r.gamma_total = r.gamma_c + p.gamma0;
  r.tau_c = cavity_lifetime(p);
  r.tau_eit = effective_eit_lifetime(p);
  r.zeta = zeta(p, r.gamma_total);
  return r;
}

/// Extra transmission factor applied to polaritons that produced a probe
/// click (grating projection and localization).
inline double detection_transmission_factor(const PhysicalParams& p) {
  double f = p.localization_loss;
  if (p.grating_loss_enabled) f *= grating_overlap(p.grating_uses_peak_eta ? peak_cooperativity(p) : p.eta);
  return f;
}

// Everything the closed-form model predicts at one operating point.
struct ModelPoint {
  double n_c_in = 0.0;
  DerivedRates rates;
  double eps0 = 0.0;
  double four_eps0 = 0.0;
  double blocking = 0.0;
  double eps = 0.0;  // eps0 integrated over tau_c + tau_eit
  double transmission_outside = 1.0;
  double transmission = 1.0;           // T_s
  double detected_transmission = 1.0;  // T_s times the detection factor
  double eta_peak = 0.0;
  double grating = 0.0;
  double scattering = 0.0;
};

/// Evaluates the model at cavity photon number `n_c_in`; gamma is loaded
/// self-consistently. n_c_in = 0 gives the probe-free evaluation.
inline ModelPoint evaluate_model(const PhysicalParams& p, double n_c_in) {
  p.validate();
  ModelPoint m;
  m.n_c_in = n_c_in;
  m.rates = derive_rates(p, n_c_in);
  m.eps0 = epsilon0(p, m.rates.gamma_total);
  m.four_eps0 = 4.0 * m.eps0;
  m.blocking = blocking_probability(m.four_eps0);
  m.eps = epsilon_total(m.eps0, m.rates.tau_c, m.rates.tau_eit);
  m.transmission_outside = outside_transmission(p);
  m.transmission = signal_transmission(p, m.rates.gamma_total);
  m.detected_transmission = m.transmission * detection_transmission_factor(p);
  m.eta_peak = peak_cooperativity(p);
  m.grating = grating_overlap(p.grating_uses_peak_eta ? m.eta_peak : p.eta);
  m.scattering = scattering_probability(p.eta);
  return m;
}

/// Cavity photon number n_1e of a least-squares fit T_s(n)/T_s(0) =
/// exp(-n/n_1e) to the model curve on `samples` evenly spaced points in
/// (0, n_max]. Returns +inf when T_s does not depend on n_c.
inline double fitted_one_over_e_photon_number(const PhysicalParams& p, double n_max = 4.0,
                                              int samples = 41) {
  if (!(n_max > 0.0) || samples < 2) throw DomainError("fitted_one_over_e_photon_number: bad grid");
  const double t0 = signal_transmission(p, p.gamma0);
  double sxy = 0.0;
  double sxx = 0.0;
  for (int i = 1; i <= samples; ++i) {
    const double n = n_max * i / samples;
    const double t = signal_transmission(p, cavity_decoherence(n, p) + p.gamma0);
    const double y = -std::log(t / t0);
    sxy += n * y;
    sxx += n * n;
  }
  if (sxy <= 0.0) return INFINITY;
  return sxx / sxy;
}

}  // namespace cavdet
