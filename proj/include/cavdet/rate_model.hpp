#pragma once

// Mean-count bookkeeping and the figure-of-merit algebra built on it:
// backgrounds, coincidences, g2(0), conditional efficiency Q, the P_sp
// detection table and the QND transfer coefficients.

#include <algorithm>
#include <cmath>
#include <string>

#include "cavdet/errors.hpp"
#include "cavdet/physics_model.hpp"

namespace cavdet {

struct DetectionChain {
  double q_s = 0.3;           // signal path
  double q_d = 0.3;           // cavity path detector and fiber
  double outcoupling = 0.66;  // T / (T + L)
  double alpha = 3e-3;        // fractional polarization-rotation background
  double eps_b = 0.0;         // decohered-atom probe probability eps_d * f_s
  double r_s = 0.0;           // signal dark counts per accounting window
  double r_p = 0.0;           // probe dark counts per accounting window

  double q_p() const { return q_d * outcoupling; }

  void validate() const {
    auto unit = [](double v, const char* what) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " must lie in [0,1]");
    };
    unit(q_s, "q_s");
    unit(q_d, "q_d");
    unit(outcoupling, "outcoupling");
    unit(alpha, "alpha");
    unit(eps_b, "eps_b");
    if (!(r_s >= 0.0) || !(r_p >= 0.0)) throw DomainError("dark counts must be >= 0");
  }
};

/// Mean photon number entering the cavity per cavity lifetime, from the
/// detected empty-cavity output rate.
inline double input_cavity_photon_number(double rate_detected_empty, const DetectionChain& chain,
                                         double tau_c) {
  const double q = chain.q_p();
  if (!(q > 0.0)) throw DomainError("input_cavity_photon_number: zero probe-path efficiency");
  return rate_detected_empty / q * tau_c;
}

/// Mean signal photon number entering the medium per EIT lifetime.
inline double input_signal_photon_number(double rate_detected_in, double q_s, double tau_eit) {
  if (!(q_s > 0.0)) throw DomainError("input_signal_photon_number: q_s must be > 0");
  return rate_detected_in * tau_eit / q_s;
}

struct MeanCounts {
  double n_s_in = 0.0;
  double n_c_in = 0.0;
  double n_s = 0.0;   // detected signal
  double n_p = 0.0;   // detected probe, t + b
  double t = 0.0;     // true probe detections
  double b = 0.0;     // probe background
  double n_sp = 0.0;  // coincidences <n_s n_p>
};

/// Detected means and coincidences for given input photon numbers.
inline MeanCounts mean_counts(double eps0, double n_s_in, double n_c_in, double transmission,
                              const DetectionChain& chain) {
  const double q_p = chain.q_p();
  const double signal = transmission * chain.q_s * n_s_in;  // transmitted and detected
  const double per_cavity = q_p * n_c_in;
  MeanCounts c;
  c.n_s_in = n_s_in;
  c.n_c_in = n_c_in;
  c.n_s = signal + chain.r_s;
  c.b = chain.alpha * per_cavity + chain.r_p;
  c.t = (eps0 + chain.eps_b) * per_cavity * n_s_in;
  c.n_p = c.t + c.b;
  c.n_sp = eps0 * per_cavity * signal                                            //
           + (chain.alpha + chain.eps_b * n_s_in) * per_cavity * signal          //
           + signal * chain.r_p                                                  //
           + ((eps0 + chain.eps_b) * n_s_in + chain.alpha) * per_cavity * chain.r_s  //
           + chain.r_p * chain.r_s;
  return c;
}

/// g2(0) approximation without dark counts: (1 + beta) / (beta + n_s_in) with
/// beta = (alpha + eps_b n_s_in) / eps0. Independent of the cavity photon
/// number.
inline double g2_zero(double eps0, double eps_b, double alpha, double n_s_in) {
  if (!(eps0 > 0.0)) throw DomainError("g2_zero: eps0 must be > 0");
  const double beta = (alpha + eps_b * n_s_in) / eps0;
  return (1.0 + beta) / (beta + n_s_in);
}

inline double g2_from_counts(const MeanCounts& c) {
  const double den = c.n_s * c.n_p;
  if (!(den > 0.0)) throw DomainError("g2_from_counts: zero mean counts");
  return c.n_sp / den;
}

/// Covariance form (<n_s n_p> - <n_s><n_p>) / <n_s>.
inline double conditional_efficiency(const MeanCounts& c) {
  if (!(c.n_s > 0.0)) throw DomainError("conditional_efficiency: n_s = 0");
  return (c.n_sp - c.n_s * c.n_p) / c.n_s;
}

/// Model form eps q_p n_c, valid while the result is small.
inline double conditional_efficiency_model(double eps, double q_p, double n_c_in) {
  return eps * q_p * n_c_in;
}

/// Probability of at least one probe click, 1 - exp(-eps q_p n_c). Agrees
/// with the model form to first order and stays a probability at large n_c.
inline double conditional_efficiency_saturated(double eps, double q_p, double n_c_in) {
  return -std::expm1(-eps * q_p * n_c_in);
}

/// eps recovered from a measured Q; the (1 - n_s_in) factor undoes the
/// accidental-coincidence subtraction of the covariance form.
inline double epsilon_from_efficiency(double q, double q_p, double n_c_in, double n_s_in) {
  const double den = q_p * n_c_in * (1.0 - n_s_in);
  if (!(den > 0.0)) throw DomainError("epsilon_from_efficiency: q_p n_c (1 - n_s_in) must be > 0");
  return q / den;
}

/// Default eps_b: a decohered atom produces probe light like a stored
/// excitation (eps_d = eps0) and a fraction f_s = 1 - T_s - P_scatter of the
/// signal is mapped incoherently to |d>.
inline double default_eps_b(double eps0, double transmission, double eta) {
  const double f_s = 1.0 - transmission - scattering_probability(eta);
  return f_s > 0.0 ? eps0 * f_s : 0.0;
}

// Joint probabilities of (signal detected s, probe detected p) for one input
// signal photon.
struct PspTable {
  double p00 = 0.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;
  double state_prep = 0.0;  // P11 / (P11 + P01)

  double sum() const { return p00 + p01 + p10 + p11; }
};

/// Solves P11/(P11+P10) = Q, P11+P10 = T_s, P01+P11 = M, sum = 1.
inline PspTable psp_solve(double q, double transmission, double m) {
  constexpr double slack = 1e-12;
  auto show = [&] {
    return "Q=" + std::to_string(q) + ", T_s=" + std::to_string(transmission) + ", M=" + std::to_string(m);
  };
  if (!(q >= 0.0 && q <= 1.0)) throw InfeasibleTriple("0 <= Q <= 1", show());
  if (!(transmission >= 0.0 && transmission <= 1.0)) throw InfeasibleTriple("0 <= T_s <= 1", show());
  const double p11 = q * transmission;
  if (!(m >= p11 - slack)) throw InfeasibleTriple("M >= Q*T_s", show());
  const double p00 = 1.0 - transmission - m + p11;
  if (!(p00 >= -slack)) throw InfeasibleTriple("1 - T_s - M + Q*T_s >= 0", show());

  PspTable t;
  t.p11 = p11;
  t.p10 = transmission * (1.0 - q);
  t.p01 = std::max(0.0, m - p11);
  t.p00 = std::max(0.0, p00);
  t.state_prep = m > 0.0 ? p11 / m : 0.0;
  return t;
}

/// (2/F^2 - 1)^-1; strictly increasing on (0, 1], equal to 1 at F = 1.
inline double transfer_coefficient(double fidelity) {
  if (!(fidelity > 0.0 && fidelity <= 1.0 + 1e-12))
    throw DomainError("transfer_coefficient: fidelity must lie in (0,1]");
  return 1.0 / (2.0 / (fidelity * fidelity) - 1.0);
}

struct TransferCoefficients {
  double f_m = 0.0;    // P11 + P01
  double f_qnd = 0.0;  // P11 + P10
  double t_m = 0.0;
  double t_s = 0.0;
};

inline TransferCoefficients transfer_coefficients(const PspTable& p) {
  TransferCoefficients t;
  t.f_m = p.p11 + p.p01;
  t.f_qnd = p.p11 + p.p10;
  t.t_m = transfer_coefficient(t.f_m);
  t.t_s = transfer_coefficient(t.f_qnd);
  return t;
}

/// g_sp^2 / (g_ss g_pp); classical light satisfies G <= 1.
inline double cauchy_schwarz(double g_sp, double g_ss, double g_pp) {
  if (!(g_sp > 0.0 && g_ss > 0.0 && g_pp > 0.0)) throw DomainError("cauchy_schwarz: correlations must be > 0");
  return g_sp * g_sp / (g_ss * g_pp);
}

// Whether probe-side quantities are left as detected or divided by q_p.
enum class View { observed, intrinsic };

struct DetectionSummary {
  View view = View::observed;
  double q = 0.0;
  double transmission = 0.0;
  double device_q = 0.0;  // Q * T_s
  PspTable psp;
  double p_err = 0.0;
  double g = 0.0;  // Cauchy-Schwarz quantity, 0 when not measured
  TransferCoefficients transfer;
};

/// Builds the summary from (Q, T_s, M) and a false-detection probability.
/// Throws InfeasibleTriple when the triple has no probability table.
inline DetectionSummary summarize_triple(double q, double transmission, double m, double p_err,
                                         View view = View::observed) {
  DetectionSummary s;
  s.view = view;
  s.q = q;
  s.transmission = transmission;
  s.device_q = q * transmission;
  s.psp = psp_solve(q, transmission, m);
  s.p_err = p_err;
  if (s.psp.p11 + s.psp.p01 > 0.0 && s.psp.p11 + s.psp.p10 > 0.0) s.transfer = transfer_coefficients(s.psp);
  return s;
}

}  // namespace cavdet
