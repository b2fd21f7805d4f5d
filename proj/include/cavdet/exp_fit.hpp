#pragma once

// Weighted least-squares fit of the two-sided exponential correlation peak
//
//   g2(tau) = B + A exp(tau / tau_neg)    tau < 0
//   g2(tau) = B + A exp(-tau / tau_pos)   tau >= 0
//
// to a binned histogram. The model is averaged over each bin, so the fit is
// exact for histograms built from the same kernel at any bin width. B is
// held at 1 unless FitOptions::fit_baseline is set. Time constants are
// fitted in log space to keep them positive.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cavdet/correlation.hpp"
#include "cavdet/errors.hpp"

namespace cavdet {

struct ExpFit {
  double g2_zero = 1.0;  // B + A
  double amplitude = 0.0;
  double tau_neg = 0.0;
  double tau_pos = 0.0;
  double baseline = 1.0;
  double g2_zero_err = 0.0;
  double amplitude_err = 0.0;
  double tau_neg_err = 0.0;
  double tau_pos_err = 0.0;
  double baseline_err = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  // False when A is within 3 sigma of zero; the time constants are then
  // unconstrained and should not be reported.
  bool amplitude_significant = false;

  double reduced_chi2() const { return dof > 0 ? chi2 / dof : 0.0; }
  double time_resolution() const { return tau_neg + tau_pos; }
};

struct FitOptions {
  bool fit_baseline = false;
  // Second pass with variances g2_model / normalization instead of the
  // observed-count errors, when the histogram carries normalizations.
  bool model_weights = true;
  int max_iterations = 500;
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, ExpFit last) : std::runtime_error(what), last_(last) {}
  const ExpFit& last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return last_.chi2; }

 private:
  ExpFit last_;
};

namespace detail {

struct BinShape {
  double value = 0.0;
  double d_log_tau_neg = 0.0;
  double d_log_tau_pos = 0.0;
};

// Bin average of the unit-amplitude kernel over [lo, hi) and its
// derivatives with respect to log(tau).
inline BinShape bin_shape(double lo, double hi, double tau_neg, double tau_pos) {
  BinShape s;
  const double width = hi - lo;
  if (lo < 0.0) {
    const double h = std::min(hi, 0.0);
    const double eh = std::exp(h / tau_neg);
    const double el = std::exp(lo / tau_neg);
    s.value += tau_neg * (eh - el);
    s.d_log_tau_neg += tau_neg * ((eh - el) - (h * eh - lo * el) / tau_neg);
  }
  if (hi > 0.0) {
    const double l = std::max(lo, 0.0);
    const double el = std::exp(-l / tau_pos);
    const double eh = std::exp(-hi / tau_pos);
    s.value += tau_pos * (el - eh);
    s.d_log_tau_pos += tau_pos * ((el - eh) + (l * el - hi * eh) / tau_pos);
  }
  s.value /= width;
  s.d_log_tau_neg /= width;
  s.d_log_tau_pos /= width;
  return s;
}

struct FitData {
  std::vector<double> lo, hi, y, sigma, norm;
};

}  // namespace detail

/// Bin-averaged model value for [lo, hi).
inline double double_exponential_bin_average(double lo, double hi, double amplitude, double tau_neg, double tau_pos,
                                             double baseline = 1.0) {
  return baseline + amplitude * detail::bin_shape(lo, hi, tau_neg, tau_pos).value;
}

inline ExpFit fit_double_exponential(const CorrelationHistogram& hist, const FitOptions& opt = {}) {
  detail::FitData d;
  int left = 0;
  int right = 0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const bool usable = hist.err[i] > 0.0 && (hist.normalization.empty() || hist.normalization[i] > 0.0 ||
                                              hist.normalization.size() != hist.size());
    if (!usable) continue;
    d.lo.push_back(hist.lower_us(i));
    d.hi.push_back(hist.lower_us(i) + hist.bin_us());
    d.y.push_back(hist.g2[i]);
    d.sigma.push_back(hist.err[i]);
    d.norm.push_back(hist.normalization.size() == hist.size() ? hist.normalization[i] : 0.0);
    (d.hi.back() <= 0.0 ? left : right) += 1;
  }
  if (left < 5 || right < 5) throw DomainError("fit_double_exponential: need at least 5 bins on each side of zero");

  const std::size_t n = d.y.size();
  const int n_par = opt.fit_baseline ? 4 : 3;
  const double bin = hist.bin_us();
  const double span = static_cast<double>(hist.binning.max_lag_ns) * 1e-3;
  const double log_lo = std::log(bin / 20.0);
  const double log_hi = std::log(10.0 * span);

  // Initial guess: A from the peak bin, tau from the half-maximum crossing.
  std::size_t peak = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(0.5 * (d.lo[i] + d.hi[i])) < 0.5 * span && d.y[i] > d.y[peak]) peak = i;
  double a0 = std::max(d.y[peak] - 1.0, 1e-3);
  auto half_width = [&](int step) {
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak); i >= 0 && i < static_cast<std::ptrdiff_t>(n); i += step)
      if (d.y[static_cast<std::size_t>(i)] - 1.0 < 0.5 * a0) {
        const double c = 0.5 * (d.lo[static_cast<std::size_t>(i)] + d.hi[static_cast<std::size_t>(i)]);
        return std::max(std::abs(c), bin) / std::log(2.0);
      }
    return 2.0 * bin;
  };
  Eigen::VectorXd p(n_par);
  p << a0, std::log(half_width(-1)), std::log(half_width(+1)), Eigen::VectorXd::Constant(n_par - 3, 1.0);

  auto unpack = [&](const Eigen::VectorXd& q) {
    ExpFit f;
    f.amplitude = q[0];
    f.tau_neg = std::exp(q[1]);
    f.tau_pos = std::exp(q[2]);
    f.baseline = opt.fit_baseline ? q[3] : 1.0;
    f.g2_zero = f.baseline + f.amplitude;
    return f;
  };
  auto evaluate = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double tn = std::exp(q[1]);
    const double tp = std::exp(q[2]);
    const double base = opt.fit_baseline ? q[3] : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = detail::bin_shape(d.lo[i], d.hi[i], tn, tp);
      const double model = base + q[0] * s.value;
      const auto ii = static_cast<Eigen::Index>(i);
      r[ii] = (d.y[i] - model) / d.sigma[i];
      if (jac) {
        (*jac)(ii, 0) = s.value / d.sigma[i];
        (*jac)(ii, 1) = q[0] * s.d_log_tau_neg / d.sigma[i];
        (*jac)(ii, 2) = q[0] * s.d_log_tau_pos / d.sigma[i];
        if (opt.fit_baseline) (*jac)(ii, 3) = 1.0 / d.sigma[i];
      }
    }
    return r.squaredNorm();
  };

  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), n_par);
  int total_iterations = 0;

  auto run = [&]() {
    double lambda = 1e-3;
    double chi2 = evaluate(p, r, &jac);
    for (int it = 0; it < opt.max_iterations; ++it) {
      ++total_iterations;
      const Eigen::MatrixXd h = jac.transpose() * jac;
      const Eigen::VectorXd g = jac.transpose() * r;
      const double floor = 1e-12 * std::max(h.diagonal().maxCoeff(), 1e-300);
      bool stepped = false;
      while (lambda < 1e16) {
        Eigen::MatrixXd damped = h;
        for (int j = 0; j < n_par; ++j) damped(j, j) += lambda * std::max(h(j, j), floor);
        Eigen::VectorXd delta = damped.ldlt().solve(g);
        Eigen::VectorXd trial = p + delta;
        trial[1] = std::clamp(trial[1], log_lo, log_hi);
        trial[2] = std::clamp(trial[2], log_lo, log_hi);
        Eigen::VectorXd r_trial(static_cast<Eigen::Index>(n));
        const double chi2_trial = evaluate(trial, r_trial, nullptr);
        if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
          const double gain = chi2 - chi2_trial;
          const double step = (trial - p).cwiseAbs().maxCoeff();
          p = trial;
          chi2 = evaluate(p, r, &jac);
          lambda = std::max(lambda * 0.1, 1e-12);
          stepped = true;
          if (gain <= 1e-13 * chi2 + 1e-300 || step < 1e-13) return chi2;
          break;
        }
        lambda *= 10.0;
      }
      if (!stepped) return chi2;  // no descent direction left: stationary point
    }
    ExpFit last = unpack(p);
    last.chi2 = chi2;
    last.iterations = total_iterations;
    throw FitError("fit_double_exponential: no convergence after " + std::to_string(opt.max_iterations) +
                       " iterations",
                   last);
  };

  double chi2 = run();
  const bool have_norm = std::all_of(d.norm.begin(), d.norm.end(), [](double v) { return v > 0.0; });
  if (opt.model_weights && have_norm) {
    const ExpFit first = unpack(p);
    for (std::size_t i = 0; i < n; ++i) {
      const double model = double_exponential_bin_average(d.lo[i], d.hi[i], first.amplitude, first.tau_neg,
                                                          first.tau_pos, first.baseline);
      d.sigma[i] = std::sqrt(std::max(model, 1e-12) / d.norm[i]);
    }
    chi2 = run();
  }

  evaluate(p, r, &jac);
  const Eigen::MatrixXd cov = (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
  ExpFit f = unpack(p);
  f.chi2 = chi2;
  f.dof = static_cast<int>(n) - n_par;
  f.iterations = total_iterations;
  f.amplitude_err = std::sqrt(std::max(cov(0, 0), 0.0));
  f.tau_neg_err = f.tau_neg * std::sqrt(std::max(cov(1, 1), 0.0));
  f.tau_pos_err = f.tau_pos * std::sqrt(std::max(cov(2, 2), 0.0));
  if (opt.fit_baseline) {
    f.baseline_err = std::sqrt(std::max(cov(3, 3), 0.0));
    f.g2_zero_err = std::sqrt(std::max(cov(0, 0) + cov(3, 3) + 2.0 * cov(0, 3), 0.0));
  } else {
    f.g2_zero_err = f.amplitude_err;
  }
  f.amplitude_significant = std::abs(f.amplitude) > 3.0 * f.amplitude_err && f.amplitude_err > 0.0;
  return f;
}

}  // namespace cavdet
