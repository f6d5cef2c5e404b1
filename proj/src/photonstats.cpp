#include "clusterpdc/photonstats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"
#include "clusterpdc/numeric.hpp"

namespace clusterpdc::photonstats {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrtPi = 1.7724538509055159;

// exp(z^2) erfc(z) for z >= 0
double erfcx(double z) {
  if (z < 26.0) return std::exp(z * z) * std::erfc(z);
  // Asymptotic series; relative error below 1e-12 beyond z = 26.
  const double iz2 = 1.0 / (2.0 * z * z);
  return (1.0 - iz2 * (1.0 - 3.0 * iz2 * (1.0 - 5.0 * iz2))) / (z * kSqrtPi);
}

// Exponential exp(-g t) for t >= 0 convolved with a unit-area Gaussian of RMS s.
double one_side(double t, double g, double s) {
  if (s == 0.0) return t >= 0.0 ? std::exp(-g * t) : 0.0;
  const double z = (g * s - t / s) / kSqrt2;
  if (z > 0.0) return 0.5 * erfcx(z) * std::exp(-t * t / (2.0 * s * s));
  return 0.5 * std::exp(0.5 * g * g * s * s - g * t) * std::erfc(z);
}

// Integral of one_side from -inf to t.
double one_side_cdf(double t, double g, double s) {
  // Unsmeared: (1 - exp(-g t))/g for t >= 0. Smeared: Gaussian cdf/g minus EMG/g.
  if (s == 0.0) return t >= 0.0 ? -std::expm1(-g * t) / g : 0.0;
  const double phi = 0.5 * std::erfc(-t / (s * kSqrt2));
  return (phi - one_side(t, g, s)) / g;
}

}  // namespace

void CoincidenceProfile::validate() const {
  if (!(gamma_signal > 0.0 && gamma_idler > 0.0)) throw DomainError("decay rates must be positive");
  if (!(jitter_s >= 0.0)) throw DomainError("jitter must be nonnegative");
  if (!(amplitude >= 0.0)) throw DomainError("amplitude must be nonnegative");
}

double profile(double tau_s, const CoincidenceProfile& p) {
  p.validate();
  return p.amplitude * (one_side(tau_s, p.gamma_idler, p.jitter_s) + one_side(-tau_s, p.gamma_signal, p.jitter_s));
}

std::vector<double> profile(std::span<const double> tau_s, const CoincidenceProfile& p) {
  std::vector<double> out;
  out.reserve(tau_s.size());
  for (double t : tau_s) out.push_back(profile(t, p));
  return out;
}

double binned_profile(double tau_center_s, double bin_width_s, const CoincidenceProfile& p) {
  p.validate();
  if (!(bin_width_s > 0.0)) throw DomainError("bin width must be positive");
  const double a = tau_center_s - 0.5 * bin_width_s;
  const double b = tau_center_s + 0.5 * bin_width_s;
  const double s = p.jitter_s;
  const double right = one_side_cdf(b, p.gamma_idler, s) - one_side_cdf(a, p.gamma_idler, s);
  const double left = one_side_cdf(-a, p.gamma_signal, s) - one_side_cdf(-b, p.gamma_signal, s);
  return p.amplitude * (right + left);
}

double profile_fwhm(const CoincidenceProfile& p) {
  p.validate();
  const double slow = 1.0 / std::min(p.gamma_signal, p.gamma_idler);
  const double span = 20.0 * slow + 10.0 * p.jitter_s;
  const double step = std::min(slow, std::max(p.jitter_s, 1e-3 * slow)) / 50.0;
  return numeric::function_fwhm([&](double t) { return profile(t, p); }, -span, span, step);
}

double bandwidth_from_correlation(double tau_fwhm_s) {
  if (!(tau_fwhm_s > 0.0)) throw DomainError("correlation time must be positive");
  return 1.0 / (kPi * tau_fwhm_s);
}

double correlation_from_bandwidth(double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw DomainError("bandwidth must be positive");
  return 1.0 / (kPi * bandwidth_hz);
}

double g2_zero(double k) {
  if (!(k >= 1.0)) throw DomainError("effective mode number must be at least 1");
  return 1.0 + 1.0 / k;
}

double jitter_from_fwhm(double fwhm_s) {
  if (!(fwhm_s >= 0.0)) throw DomainError("jitter width must be nonnegative");
  return fwhm_s / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

}  // namespace clusterpdc::photonstats
