#pragma once

#include <span>
#include <vector>

namespace clusterpdc::photonstats {

/// Two-sided exponential coincidence shape smeared by Gaussian jitter.
/// Negative delay (idler before signal) decays with gamma_signal, positive with gamma_idler.
struct CoincidenceProfile {
  double gamma_signal = 1.26e9;  // 1/s
  double gamma_idler = 1.18e9;   // 1/s
  double jitter_s = 0.5e-9 / 2.355;
  double amplitude = 1.0;
  double bin_width_s = 0.0;  // informational; profile() returns a density

  /// Throws DomainError unless both rates are positive and jitter is nonnegative.
  void validate() const;
};

/// Rate density at delay tau (idler time minus signal time), analytic EMG form.
double profile(double tau_s, const CoincidenceProfile& p);

std::vector<double> profile(std::span<const double> tau_s, const CoincidenceProfile& p);

/// Expected counts per bin: profile integrated over [tau - w/2, tau + w/2].
double binned_profile(double tau_center_s, double bin_width_s, const CoincidenceProfile& p);

/// FWHM found numerically on the analytic profile.
double profile_fwhm(const CoincidenceProfile& p);

/// Delta nu = 1 / (pi tau)
double bandwidth_from_correlation(double tau_fwhm_s);
double correlation_from_bandwidth(double bandwidth_hz);

/// 1 + 1/K for K >= 1
double g2_zero(double effective_mode_number);

/// Jitter RMS from a Gaussian FWHM.
double jitter_from_fwhm(double fwhm_s);

}  // namespace clusterpdc::photonstats
