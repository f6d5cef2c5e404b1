#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "clusterpdc/cluster.hpp"
#include "clusterpdc/montecarlo.hpp"
#include "clusterpdc/qpm.hpp"

namespace clusterpdc::config {

inline constexpr const char* kConfigEnvVar = "CLUSTERPDC_CONFIG";

enum class LossMode { Nominal, FitToFinesse };
enum class RateConvention { SingleCavity, Joint };

std::string to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& s);
std::string to_string(RateConvention c);
RateConvention rate_convention_from_string(const std::string& s);

struct ArmConfig {
  double mirror_front = 0.99;
  double mirror_rear = 0.90;
  double loss_db_per_cm = 0.05;
  double finesse = 22.0;  // measured; used by fit-to-finesse
};

struct FilterConfig {
  bool enabled = false;
  double width_m = 0.17e-9;
  /// Center on this signal frequency; when absent, on the strongest cluster.
  std::optional<double> center_signal_hz;
  montecarlo::FilterArm arm = montecarlo::FilterArm::Signal;
};

struct DesignScanConfig {
  double rear_min = 0.70;
  double rear_max = 0.98;
  int rear_steps = 15;
  double length_min_m = 5e-3;
  double length_max_m = 25e-3;
  int length_steps = 9;
  double finesse_min = 20.0;
};

struct DeviceConfig {
  // device
  double length_m = 14.5e-3;
  double poling_period_m = 4.44e-6;
  int qpm_order = 1;
  std::string dispersion_file = "sellmeier_congruent_ln.json";

  // calibration targets
  double pump_wavelength_m = 532e-9;
  double signal_wavelength_m = 890e-9;
  double calibration_temperature_c = 161.57;
  qpm::CalibrationMode calibration_mode = qpm::CalibrationMode::PhaseOnly;
  double target_fsr_signal_hz = 4.4e9;
  double target_fsr_idler_hz = 4.7e9;

  // cavities
  LossMode loss_mode = LossMode::FitToFinesse;
  ArmConfig signal{0.99, 0.90, 0.05, 22.0};
  ArmConfig idler{0.99, 0.90, 0.05, 25.0};

  // spectrum
  double threshold = cluster::kDefaultThreshold;
  RateConvention rate_convention = RateConvention::SingleCavity;
  double jitter_fwhm_s = 0.5e-9;  // combined system response

  // source and detection
  double pair_rate_per_s_per_mw = 7e6;
  bool scale_rate_by_escape = true;
  double pulse_length_s = 200e-9;
  double repetition_hz = 100e3;
  double pump_power_mw = 1.0;
  montecarlo::DetectorSpec signal_detector{0.5, 0.5e-9 / 2.355 / 1.4142135623730951, 100.0, 50e-9};
  montecarlo::DetectorSpec idler_detector{0.1, 0.5e-9 / 2.355 / 1.4142135623730951, 1000.0, 50e-9};
  FilterConfig filter;
  montecarlo::PairStatistics statistics = montecarlo::PairStatistics::Thermal;
  double lead_in_s = 1e-6;

  // mode bandwidth used for brightness; joint linewidth of the dominant mode when absent
  std::optional<double> brightness_bandwidth_hz = 150e6;

  DesignScanConfig design_scan;

  /// Directory that relative data paths resolve against.
  std::filesystem::path base_dir;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;

  static DeviceConfig from_toml_string(const std::string& text, const std::filesystem::path& base_dir = {});
  static DeviceConfig load(const std::filesystem::path& path);
  [[nodiscard]] std::string to_toml_string() const;
  /// Resolved, defaulted configuration.
  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::filesystem::path dispersion_path() const;

  friend bool operator==(const DeviceConfig& a, const DeviceConfig& b);
};

std::string sha256_hex(const std::string& bytes);

/// SHA-256 (hex) of the resolved JSON plus the dispersion table it points to.
std::string config_hash(const DeviceConfig& config);

/// Config path from the explicit argument, else the environment variable.
std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::string>& explicit_path);

struct ResolvedDevice {
  cluster::Device device;
  qpm::CalibrationResult calibration;
  double loss_signal_per_m = 0.0;
  double loss_idler_per_m = 0.0;
  double finesse_signal = 0.0;
  double finesse_idler = 0.0;
  double escape_signal = 0.0;
  double escape_idler = 0.0;
  double pair_escape = 0.0;  // product of the two
  double fsr_signal_hz = 0.0;
  double fsr_idler_hz = 0.0;
  double linewidth_signal_hz = 0.0;
  double linewidth_idler_hz = 0.0;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Loads dispersion, calibrates, and assembles the cavities at the calibration temperature.
ResolvedDevice resolve(const DeviceConfig& config);

/// Cavity parameters for given mirrors, length and loss at the calibration temperature.
struct CavityFigures {
  double finesse = 0.0;
  double fsr_hz = 0.0;
  double linewidth_hz = 0.0;
  double escape = 0.0;
};
CavityFigures cavity_figures(const cluster::Device& device, dispersion::Wave wave);

/// Photon release rates for the timing model under a rate convention.
std::pair<double, double> decay_rates(const ResolvedDevice& resolved, const cluster::ClusterSpectrum& spectrum,
                                      RateConvention convention);

/// Pulse train with the emitted-pair coefficient (scaled by the pair escape when configured).
montecarlo::PulseTrainSpec pulse_train(const DeviceConfig& config, const ResolvedDevice& resolved);

double db_per_cm_to_per_m(double db_per_cm);

}  // namespace clusterpdc::config
