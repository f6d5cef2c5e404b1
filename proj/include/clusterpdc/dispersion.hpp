#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace clusterpdc::dispersion {

enum class Polarization { TE, TM };
enum class IndexBranch { Ordinary, Extraordinary };
enum class Wave { Pump, Signal, Idler };

/// Z-cut crystal: TE fields lie in the ordinary plane, TM fields along the optic axis.
constexpr IndexBranch branch_for(Polarization pol) {
  return pol == Polarization::TE ? IndexBranch::Ordinary : IndexBranch::Extraordinary;
}

std::string to_string(Polarization pol);
std::string to_string(Wave wave);

/// Temperature-dependent Sellmeier branch of the form
///   n^2 = A1 + (A2 + B1 F) / (lambda^2 - (A3 + B2 F)^2) + B3 F - A4 lambda^2,
///   F = (T - T0)(T + T0 + 2 * 273.16),
/// with lambda in micrometres and T in degrees Celsius.
struct SellmeierBranch {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
};

struct SellmeierModel {
  SellmeierBranch ordinary;
  SellmeierBranch extraordinary;
  double parameter_reference_c = 24.5;
  double thermal_expansion_per_k = 1.5e-5;
  std::string provenance;

  static constexpr double kMinWavelengthUm = 0.4;
  static constexpr double kMaxWavelengthUm = 1.6;
  static constexpr double kMinTemperatureC = 20.0;
  static constexpr double kMaxTemperatureC = 200.0;

  [[nodiscard]] double temperature_parameter(double temperature_c) const;

  /// Bulk index; throws DomainError outside [0.4, 1.6] um x [20, 200] C.
  [[nodiscard]] double index(IndexBranch branch, double wavelength_um, double temperature_c) const;

  /// Throws ConfigError if the model has a pole or n <= 1 inside the domain.
  void validate() const;

  static SellmeierModel from_json(const nlohmann::json& j);
  static SellmeierModel load(const std::filesystem::path& path);
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Perturbative waveguide correction: constant per-wave index offsets and a
/// residual phase-mismatch term (rad/m) added to the QPM balance.
struct WaveguideCorrection {
  double dn_pump = 0.0;
  double dn_signal = 0.0;
  double dn_idler = 0.0;
  double residual_mismatch_per_m = 0.0;

  static constexpr double kMaxOffset = 0.05;

  [[nodiscard]] double offset(Wave wave) const;
  [[nodiscard]] bool is_perturbative() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static WaveguideCorrection from_json(const nlohmann::json& j);

  friend bool operator==(const WaveguideCorrection&, const WaveguideCorrection&) = default;
};

struct WavePolarizations {
  Polarization pump = Polarization::TE;
  Polarization signal = Polarization::TE;
  Polarization idler = Polarization::TM;

  [[nodiscard]] Polarization of(Wave wave) const;
};

/// Refractive index with fixed polarization per wave and the fitted correction.
/// Wavelengths in metres, temperatures in degrees Celsius.
class DispersionModel {
 public:
  DispersionModel() = default;
  DispersionModel(SellmeierModel sellmeier, WaveguideCorrection correction = {},
                  WavePolarizations polarizations = {});

  [[nodiscard]] double refractive_index(Wave wave, double wavelength_m, double temperature_c) const;

  /// n_g = n - lambda dn/dlambda, central difference with step `fd_step_m`.
  [[nodiscard]] double group_index(Wave wave, double wavelength_m, double temperature_c) const;

  /// n(lambda, T) L (1 + alpha_L (T - T_ref)).
  [[nodiscard]] double optical_path_length(Wave wave, double length_m, double wavelength_m,
                                           double temperature_c) const;

  /// Geometric length after thermal expansion from the reference temperature.
  [[nodiscard]] double expanded_length(double length_m, double temperature_c) const;

  [[nodiscard]] DispersionModel with_correction(const WaveguideCorrection& correction) const;

  [[nodiscard]] const SellmeierModel& sellmeier() const { return sellmeier_; }
  [[nodiscard]] const WaveguideCorrection& correction() const { return correction_; }
  [[nodiscard]] const WavePolarizations& polarizations() const { return polarizations_; }

  double fd_step_m = 0.1e-9;
  double expansion_reference_c = 25.0;

 private:
  SellmeierModel sellmeier_{};
  WaveguideCorrection correction_{};
  WavePolarizations polarizations_{};
};

/// Index for an explicit polarization with an explicit additive offset.
double refractive_index(const SellmeierModel& model, double wavelength_m, double temperature_c,
                        Polarization pol, double offset = 0.0);

}  // namespace clusterpdc::dispersion
