#pragma once

#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "clusterpdc/cavity.hpp"
#include "clusterpdc/dispersion.hpp"
#include "clusterpdc/qpm.hpp"

namespace clusterpdc::cluster {

/// Relative weight below which a comb line is not reported as a mode. It has to
/// clear the singly-resonant Airy floor (about 5e-3 for finesse 22/25), otherwise
/// every comb line inside the envelope survives and clusters merge.
inline constexpr double kDefaultThreshold = 0.02;

struct CavityArm {
  cavity::MirrorPair mirrors;
  double loss_per_m = 0.0;
  double extra_phase_rad = 0.0;  // added to the thermally driven comb offset
};

/// Monolithic doubly resonant source. `design` holds the calibration targets;
/// at design.temperature_c() both combs have a resonance on the design
/// signal/idler frequencies, and away from it the combs move with the optical
/// path length of each wave.
struct Device {
  dispersion::DispersionModel model;
  qpm::PolingSpec poling;
  double length_m = 14.5e-3;
  qpm::OperatingPoint design = qpm::OperatingPoint::from_pump_signal(532e-9, 890e-9, 161.57);
  CavityArm signal;
  CavityArm idler;

  [[nodiscard]] double pump_hz() const { return design.pump_hz(); }
  [[nodiscard]] cavity::CavityState cavity_state(dispersion::Wave wave, double temperature_c) const;
  [[nodiscard]] Device without_mirrors() const;
};

/// S(nu_s) = envelope * A_s(nu_s) * A_i(nu_p - nu_s) at one temperature.
class JointDensity {
 public:
  JointDensity(const Device& device, double temperature_c);

  double operator()(double signal_hz) const;
  [[nodiscard]] double mismatch(double signal_hz) const;
  [[nodiscard]] double envelope(double signal_hz) const;
  [[nodiscard]] double signal_airy(double signal_hz) const;
  [[nodiscard]] double idler_airy(double signal_hz) const;

  /// Signal frequency where the mismatch vanishes.
  [[nodiscard]] double envelope_center_hz() const;
  /// First nulls of the sinc^2 envelope on either side of its center.
  [[nodiscard]] std::pair<double, double> main_lobe() const;

  [[nodiscard]] const cavity::CavityState& signal_cavity() const { return signal_; }
  [[nodiscard]] const cavity::CavityState& idler_cavity() const { return idler_; }
  [[nodiscard]] double pump_hz() const { return pump_hz_; }
  [[nodiscard]] double temperature_c() const { return temperature_c_; }
  [[nodiscard]] const Device& device() const { return *device_; }

 private:
  double solve_mismatch(double target, double start_hz, double direction) const;

  const Device* device_;
  double temperature_c_;
  double pump_hz_;
  double pump_beta_;
  cavity::CavityState signal_;
  cavity::CavityState idler_;
};

double joint_density(double signal_hz, double temperature_c, const Device& device);

struct ModeEntry {
  double signal_hz = 0.0;
  double idler_hz = 0.0;
  double weight = 0.0;        // normalized over the table
  double peak_density = 0.0;  // S at the local maximum
  int cluster_id = 0;
  double linewidth_joint_hz = 0.0;
};

struct ClusterSummary {
  int id = 0;
  double center_signal_hz = 0.0;  // weight-averaged
  double weight = 0.0;
  std::size_t mode_count = 0;
};

struct SpectrumSample {
  double signal_hz = 0.0;
  double density = 0.0;
};

struct ClusterSpectrum {
  std::vector<ModeEntry> modes;  // ascending signal frequency
  std::vector<ClusterSummary> clusters;  // ascending center frequency
  std::vector<SpectrumSample> grid;
  double temperature_c = 0.0;
  double pump_hz = 0.0;
  double threshold = kDefaultThreshold;
  double envelope_center_hz = 0.0;

  [[nodiscard]] std::vector<double> weights() const;
  [[nodiscard]] std::vector<double> cluster_weights(int cluster_id) const;
  [[nodiscard]] const ClusterSummary& strongest_cluster() const;
  [[nodiscard]] const ModeEntry& dominant_mode() const;
};

struct EnumerationOptions {
  double threshold = kDefaultThreshold;
  /// Signal-frequency window walked by the comb; defaults to the envelope main lobe.
  std::optional<std::pair<double, double>> window;
};

ClusterSpectrum enumerate_modes(double temperature_c, const Device& device, const EnumerationOptions& options = {});
ClusterSpectrum enumerate_modes(double temperature_c, const Device& device, double threshold);

/// S sampled on [center - span/2, center + span/2] with the given resolution.
std::vector<SpectrumSample> sample_spectrum(double temperature_c, const Device& device, double center_hz,
                                            double span_hz, double resolution_hz);

double dominant_mode_fraction(const ClusterSpectrum& spectrum);

/// K = (sum w)^2 / sum w^2
double effective_mode_number(std::span<const double> weights);

/// Temperatures must stay within +-2 K of the calibration temperature.
std::vector<ClusterSpectrum> spectrum_vs_temperature(std::span<const double> temperatures_c, const Device& device,
                                                     const EnumerationOptions& options = {});

/// pairs/(s mW MHz) = rate * dominant fraction * eta_pp / (bandwidth in MHz)
double brightness(const ClusterSpectrum& spectrum, double pair_rate_per_s_per_mw, double pair_escape,
                  double mode_bandwidth_hz);
double brightness(double pair_rate_per_s_per_mw, double dominant_fraction, double pair_escape,
                  double mode_bandwidth_hz);

/// FSR_a FSR_b / |FSR_a - FSR_b|
double vernier_spacing(double fsr_a_hz, double fsr_b_hz);

// ---------------------------------------------------------------------------
// Instrument views

struct DeltaInstrument {};
/// Grating spectrometer pixel: rectangular bin of the given width.
struct GratingInstrument {
  double resolution_hz = 0.0;
};
/// Scanning Fabry-Perot: Lorentzian of FWHM fsr/finesse, wrapped with period fsr.
struct ScanningFilterInstrument {
  double fsr_hz = 15e9;
  double finesse = 20.0;
};
using Instrument = std::variant<DeltaInstrument, GratingInstrument, ScanningFilterInstrument>;

/// Mode comb rendered as Lorentzian lines (peak = weight, FWHM = joint linewidth).
std::vector<double> render_modes(const ClusterSpectrum& spectrum, std::span<const double> grid_hz);

/// Mode comb seen through an instrument; kernels are area-normalized so the
/// delta instrument reproduces render_modes exactly.
std::vector<double> instrument_view(const ClusterSpectrum& spectrum, const Instrument& instrument,
                                    std::span<const double> grid_hz);

/// Numerical convolution of an already sampled spectrum (uniform grid).
std::vector<double> instrument_view(std::span<const double> grid_hz, std::span<const double> values,
                                    const Instrument& instrument);

/// Frequency width of a wavelength interval at a carrier.
double wavelength_interval_to_hz(double interval_m, double wavelength_m);

// ---------------------------------------------------------------------------
// Redistribution

struct RedistributionResult {
  double integral_ratio = 0.0;      // normalized resonant / bare, 1 by construction
  double normalization = 0.0;       // factor applied to the resonant spectrum
  double peak_enhancement = 0.0;    // normalized resonant peak / bare level there
  double peak_signal_hz = 0.0;
};

/// Compares the resonant device against the same waveguide without mirrors
/// over the envelope main lobe.
RedistributionResult redistribution_check(const Device& device, double temperature_c, double resolution_hz = 2e6);

// ---------------------------------------------------------------------------
// Temperature-scan summaries

struct ScanPoint {
  double temperature_c = 0.0;
  std::size_t cluster_count = 0;
  double dominant_fraction = 0.0;
  double central_weight = 0.0;          // strongest cluster
  double side_to_central = 0.0;         // mean neighbour weight / strongest cluster weight
  double side_asymmetry = 0.0;          // |left - right| / (left + right)
  double central_k = 0.0;               // K of the strongest cluster
  double top_two_ratio = 0.0;           // strongest / second mode inside the strongest cluster
  double cluster_spacing_hz = 0.0;      // mean spacing of adjacent cluster centers
  double intra_cluster_spacing_hz = 0.0;  // median adjacent-mode spacing inside clusters
  std::vector<double> cluster_weights;  // ascending frequency
};

ScanPoint summarize(const ClusterSpectrum& spectrum);

struct TemperatureScan {
  std::vector<ScanPoint> points;
  double mean_dominant_fraction = 0.0;
  double min_dominant_fraction = 0.0;
  double max_dominant_fraction = 0.0;
  std::size_t symmetric_index = 0;   // most symmetric three-cluster point
  std::size_t balanced_index = 0;    // smallest top-two ratio (two nearly equal modes)
};

TemperatureScan scan_temperature(const Device& device, std::span<const double> temperatures_c,
                                 const EnumerationOptions& options = {});

nlohmann::json to_json(const ClusterSpectrum& spectrum);
nlohmann::json to_json(const ScanPoint& point);

}  // namespace clusterpdc::cluster
