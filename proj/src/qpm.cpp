#include "clusterpdc/qpm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"

namespace clusterpdc::qpm {

using dispersion::DispersionModel;
using dispersion::Wave;

void PolingSpec::validate() const {
  if (!(period_m > 0.0)) throw DomainError("poling period must be positive");
  if (order <= 0 || order % 2 == 0) throw DomainError("QPM order must be a positive odd integer");
}

double PolingSpec::grating_vector() const { return kTwoPi * order / period_m; }

OperatingPoint::OperatingPoint(double p, double s, double i, double t)
    : pump_m_(p), signal_m_(s), idler_m_(i), temperature_c_(t) {
  if (!(p > 0.0 && s > 0.0 && i > 0.0)) throw DomainError("operating point wavelengths must be positive");
  if (!(s < i)) throw DomainError("signal must be the shorter-wavelength photon");
  if (energy_conservation_error() > 1e-12) throw DomainError("operating point violates energy conservation");
}

OperatingPoint OperatingPoint::from_pump_signal(double pump_m, double signal_m, double temperature_c) {
  if (!(signal_m > pump_m)) throw DomainError("signal wavelength must exceed the pump wavelength");
  const double idler = 1.0 / (1.0 / pump_m - 1.0 / signal_m);
  return {pump_m, signal_m, idler, temperature_c};
}

OperatingPoint OperatingPoint::from_wavelengths(double pump_m, double signal_m, double idler_m, double temperature_c) {
  return {pump_m, signal_m, idler_m, temperature_c};
}

double OperatingPoint::pump_hz() const { return frequency_from_wavelength(pump_m_); }
double OperatingPoint::signal_hz() const { return frequency_from_wavelength(signal_m_); }
double OperatingPoint::idler_hz() const { return frequency_from_wavelength(idler_m_); }

double OperatingPoint::energy_conservation_error() const {
  return std::abs(1.0 / pump_m_ - 1.0 / signal_m_ - 1.0 / idler_m_) * pump_m_;
}

OperatingPoint OperatingPoint::at_temperature(double temperature_c) const {
  return {pump_m_, signal_m_, idler_m_, temperature_c};
}

nlohmann::json OperatingPoint::to_json() const {
  return {{"pump_m", pump_m_},           {"signal_m", signal_m_},          {"idler_m", idler_m_},
          {"pump_nm", pump_m_ * 1e9},    {"signal_nm", signal_m_ * 1e9},   {"idler_nm", idler_m_ * 1e9},
          {"temperature_c", temperature_c_}};
}

double phase_mismatch(double pump_m, double signal_m, double idler_m, double temperature_c,
                      const PolingSpec& poling, const DispersionModel& model) {
  const auto beta = [&](Wave w, double l) { return kTwoPi * model.refractive_index(w, l, temperature_c) / l; };
  return beta(Wave::Pump, pump_m) - beta(Wave::Signal, signal_m) - beta(Wave::Idler, idler_m) -
         poling.grating_vector() + model.correction().residual_mismatch_per_m;
}

double phase_mismatch(const OperatingPoint& op, const PolingSpec& poling, const DispersionModel& model) {
  return phase_mismatch(op.pump_m(), op.signal_m(), op.idler_m(), op.temperature_c(), poling, model);
}

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double envelope_from_mismatch(double mismatch_per_m, double length_m) {
  if (!(length_m > 0.0)) throw DomainError("interaction length must be positive");
  const double s = sinc(0.5 * mismatch_per_m * length_m);
  return s * s;
}

double envelope(const OperatingPoint& op, const PolingSpec& poling, const DispersionModel& model, double length_m) {
  return envelope_from_mismatch(phase_mismatch(op, poling, model), length_m);
}

OperatingPoint solve_operating_point(double pump_m, double temperature_c, const PolingSpec& poling,
                                     const DispersionModel& model, const SearchWindow& window) {
  poling.validate();
  auto mismatch = [&](double signal_m) {
    return phase_mismatch(OperatingPoint::from_pump_signal(pump_m, signal_m, temperature_c), poling, model);
  };

  double lo_value = std::numeric_limits<double>::infinity();
  double hi_value = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> brackets;
  double prev_x = window.signal_min_m;
  double prev_y = mismatch(prev_x);
  lo_value = hi_value = prev_y;
  const auto steps = static_cast<long>(std::ceil((window.signal_max_m - window.signal_min_m) / window.scan_step_m));
  for (long k = 1; k <= steps; ++k) {
    const double x = std::min(window.signal_max_m, window.signal_min_m + static_cast<double>(k) * window.scan_step_m);
    const double y = mismatch(x);
    lo_value = std::min(lo_value, y);
    hi_value = std::max(hi_value, y);
    if (y == 0.0) return OperatingPoint::from_pump_signal(pump_m, x, temperature_c);
    if ((prev_y < 0.0) != (y < 0.0)) brackets.emplace_back(prev_x, x);
    prev_x = x;
    prev_y = y;
  }
  if (brackets.empty()) {
    std::ostringstream os;
    os << "no phase-matched point in signal window [" << window.signal_min_m * 1e9 << ", "
       << window.signal_max_m * 1e9 << "] nm at T = " << temperature_c << " C; scanned mismatch range ["
       << lo_value << ", " << hi_value << "] rad/m";
    throw ComputationError(os.str());
  }
  const double center = 0.5 * (window.signal_min_m + window.signal_max_m);
  const auto best = *std::min_element(brackets.begin(), brackets.end(), [&](const auto& a, const auto& b) {
    return std::abs(0.5 * (a.first + a.second) - center) < std::abs(0.5 * (b.first + b.second) - center);
  });
  auto tol = [&](double a, double b) { return std::abs(b - a) <= window.tolerance_m; };
  const auto root = boost::math::tools::bisect(mismatch, best.first, best.second, tol);
  const double x = std::abs(mismatch(root.first)) < std::abs(mismatch(root.second)) ? root.first : root.second;
  return OperatingPoint::from_pump_signal(pump_m, x, temperature_c);
}

std::string to_string(CalibrationMode mode) { return mode == CalibrationMode::FitFsr ? "fit-fsr" : "phase-only"; }

CalibrationMode calibration_mode_from_string(const std::string& s) {
  if (s == "phase-only") return CalibrationMode::PhaseOnly;
  if (s == "fit-fsr") return CalibrationMode::FitFsr;
  throw ConfigError("unknown calibration mode '" + s + "' (expected phase-only | fit-fsr)");
}

nlohmann::json CalibrationResult::to_json() const {
  return {{"mode", to_string(mode)},
          {"correction", correction.to_json()},
          {"bulk_mismatch_per_m", bulk_mismatch_per_m},
          {"residual_after_per_m", residual_after_per_m},
          {"residual_fraction_of_grating", residual_fraction_of_grating},
          {"fsr_signal_hz", fsr_signal_hz},
          {"fsr_idler_hz", fsr_idler_hz},
          {"fsr_signal_residual_hz", fsr_signal_residual_hz},
          {"fsr_idler_residual_hz", fsr_idler_residual_hz}};
}

CalibrationResult calibrate(const OperatingPoint& targets, const PolingSpec& poling, const DispersionModel& model,
                            const CalibrationOptions& options) {
  poling.validate();
  const double t = targets.temperature_c();
  if (t < 140.0 || t > 180.0) throw DomainError("calibration temperature must lie in [140, 180] C");
  if (!(options.length_m > 0.0)) throw DomainError("calibration length must be positive");

  const DispersionModel bulk = model.with_correction({});
  CalibrationResult result;
  result.mode = options.mode;
  result.bulk_mismatch_per_m = phase_mismatch(targets, poling, bulk);

  dispersion::WaveguideCorrection correction;
  const double length = bulk.expanded_length(options.length_m, t);
  if (options.mode == CalibrationMode::FitFsr) {
    if (!(options.target_fsr_signal_hz > 0.0 && options.target_fsr_idler_hz > 0.0)) {
      throw DomainError("FSR targets must be positive");
    }
    const double ng_s = bulk.group_index(Wave::Signal, targets.signal_m(), t);
    const double ng_i = bulk.group_index(Wave::Idler, targets.idler_m(), t);
    correction.dn_signal = kSpeedOfLight / (2.0 * length * options.target_fsr_signal_hz) - ng_s;
    correction.dn_idler = kSpeedOfLight / (2.0 * length * options.target_fsr_idler_hz) - ng_i;
  }
  if (!correction.is_perturbative()) {
    std::ostringstream os;
    os << "calibration needs index offsets (dn_s = " << correction.dn_signal << ", dn_i = " << correction.dn_idler
       << ") beyond the perturbative bound 0.05; review the Sellmeier coefficient set";
    throw CalibrationError(os.str());
  }
  const double offsets_only = phase_mismatch(targets, poling, bulk.with_correction(correction));
  correction.residual_mismatch_per_m = -offsets_only;
  const DispersionModel calibrated = bulk.with_correction(correction);

  result.correction = correction;
  result.residual_after_per_m = phase_mismatch(targets, poling, calibrated);
  result.residual_fraction_of_grating = std::abs(correction.residual_mismatch_per_m) / poling.grating_vector();
  result.fsr_signal_hz = kSpeedOfLight / (2.0 * length * calibrated.group_index(Wave::Signal, targets.signal_m(), t));
  result.fsr_idler_hz = kSpeedOfLight / (2.0 * length * calibrated.group_index(Wave::Idler, targets.idler_m(), t));
  result.fsr_signal_residual_hz = result.fsr_signal_hz - options.target_fsr_signal_hz;
  result.fsr_idler_residual_hz = result.fsr_idler_hz - options.target_fsr_idler_hz;
  return result;
}

}  // namespace clusterpdc::qpm
