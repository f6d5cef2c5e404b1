#pragma once

#include <optional>

#include <json.hpp>

#include "clusterpdc/dispersion.hpp"

namespace clusterpdc::qpm {

struct PolingSpec {
  double period_m = 4.44e-6;
  int order = 1;

  /// Throws DomainError unless period > 0 and order is a positive odd integer.
  void validate() const;
  [[nodiscard]] double grating_vector() const;  // 2 pi order / period, rad/m
};

/// Pump, signal and idler vacuum wavelengths at a temperature. Construction
/// enforces energy conservation and the signal-is-shorter convention.
class OperatingPoint {
 public:
  /// Idler follows from 1/lambda_i = 1/lambda_p - 1/lambda_s.
  static OperatingPoint from_pump_signal(double pump_m, double signal_m, double temperature_c);

  /// All three given; rejects violations of energy conservation beyond 1e-12 relative.
  static OperatingPoint from_wavelengths(double pump_m, double signal_m, double idler_m, double temperature_c);

  [[nodiscard]] double pump_m() const { return pump_m_; }
  [[nodiscard]] double signal_m() const { return signal_m_; }
  [[nodiscard]] double idler_m() const { return idler_m_; }
  [[nodiscard]] double temperature_c() const { return temperature_c_; }

  [[nodiscard]] double pump_hz() const;
  [[nodiscard]] double signal_hz() const;
  [[nodiscard]] double idler_hz() const;

  /// |1/lp - 1/ls - 1/li| * lp
  [[nodiscard]] double energy_conservation_error() const;

  [[nodiscard]] OperatingPoint at_temperature(double temperature_c) const;
  [[nodiscard]] nlohmann::json to_json() const;

 private:
  OperatingPoint(double p, double s, double i, double t);

  double pump_m_;
  double signal_m_;
  double idler_m_;
  double temperature_c_;
};

/// beta_p - beta_s - beta_i - 2 pi order / period + residual correction, rad/m.
double phase_mismatch(const OperatingPoint& op, const PolingSpec& poling, const dispersion::DispersionModel& model);

/// Same balance evaluated directly from the three wavelengths (no energy check).
double phase_mismatch(double pump_m, double signal_m, double idler_m, double temperature_c,
                      const PolingSpec& poling, const dispersion::DispersionModel& model);

/// sin(x)/x with sinc(0) = 1.
double sinc(double x);

/// sinc^2(dbeta L / 2).
double envelope_from_mismatch(double mismatch_per_m, double length_m);

double envelope(const OperatingPoint& op, const PolingSpec& poling, const dispersion::DispersionModel& model,
                double length_m);

struct SearchWindow {
  double signal_min_m = 850e-9;
  double signal_max_m = 930e-9;
  double scan_step_m = 0.1e-9;
  double tolerance_m = 1e-16;
};

/// Bracketed root of the mismatch in the signal wavelength at fixed pump and
/// temperature. Throws ComputationError ("no phase-matched point") when the
/// scanned mismatch never changes sign; the message carries its extrema.
OperatingPoint solve_operating_point(double pump_m, double temperature_c, const PolingSpec& poling,
                                     const dispersion::DispersionModel& model, const SearchWindow& window = {});

enum class CalibrationMode { PhaseOnly, FitFsr };

struct CalibrationOptions {
  CalibrationMode mode = CalibrationMode::PhaseOnly;
  double length_m = 14.5e-3;  // cavity length used by the FSR side conditions
  double target_fsr_signal_hz = 4.4e9;
  double target_fsr_idler_hz = 4.7e9;
};

struct CalibrationResult {
  dispersion::WaveguideCorrection correction;
  CalibrationMode mode = CalibrationMode::PhaseOnly;
  double bulk_mismatch_per_m = 0.0;        // mismatch before any correction
  double residual_after_per_m = 0.0;       // mismatch after calibration
  double residual_fraction_of_grating = 0.0;  // |dbeta_wg| / (2 pi order / period)
  double fsr_signal_hz = 0.0;
  double fsr_idler_hz = 0.0;
  double fsr_signal_residual_hz = 0.0;  // fitted - target (FitFsr) or model - target (PhaseOnly)
  double fsr_idler_residual_hz = 0.0;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Reconciles the dispersion model with the target operating point. The
/// returned correction is a new value; the input model is not modified.
CalibrationResult calibrate(const OperatingPoint& targets, const PolingSpec& poling,
                            const dispersion::DispersionModel& model, const CalibrationOptions& options = {});

std::string to_string(CalibrationMode mode);
CalibrationMode calibration_mode_from_string(const std::string& s);

}  // namespace clusterpdc::qpm
