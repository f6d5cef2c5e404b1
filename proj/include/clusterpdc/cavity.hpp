#pragma once

namespace clusterpdc::cavity {

/// Intensity reflectivities of the two end-face mirrors at one wavelength.
struct MirrorPair {
  double front = 0.99;
  double rear = 0.90;

  /// Throws DomainError unless 0 <= R < 1 for both mirrors.
  void validate() const;
  [[nodiscard]] double front_transmission() const { return 1.0 - front; }
  [[nodiscard]] double rear_transmission() const { return 1.0 - rear; }
};

/// One polarization's Fabry-Perot resonator. `reference_frequency_hz` anchors
/// the linearized comb; `phase_offset_rad` is the round-trip phase at that
/// frequency (0 puts a resonance exactly on it).
struct CavityState {
  double length_m = 14.5e-3;
  double loss_per_m = 0.0;  // intensity loss coefficient
  MirrorPair mirrors;
  double phase_index = 2.2;
  double group_index = 2.3;
  double reference_frequency_hz = 0.0;
  double phase_offset_rad = 0.0;

  /// Throws DomainError if the round-trip survival leaves [0, 1) or FSR <= 0.
  void validate() const;
};

/// sqrt(R_front R_rear) exp(-alpha L)
double round_trip_survival(const CavityState& state);

/// 1 - exp(-2 alpha L): intrinsic round-trip intensity loss.
double round_trip_loss(double loss_per_m, double length_m);

double fsr(const CavityState& state);

/// pi sqrt(r) / (1 - r)
double finesse_from_survival(double r);
double finesse(const CavityState& state);

/// Round-trip survival that yields a given finesse (inverse of finesse_from_survival).
double survival_from_finesse(double finesse);

/// Loss coefficient that reproduces a measured finesse. Throws ComputationError
/// when the finesse exceeds the lossless bound of the mirrors.
double infer_loss(double measured_finesse, const MirrorPair& mirrors, double length_m);

/// Peak-normalized Airy enhancement; 1 exactly on resonance.
double airy(double frequency_hz, const CavityState& state);

/// Resonance FWHM of the Airy function, exact: (2 FSR / pi) asin((1 - r) / (2 sqrt r)).
double airy_fwhm(const CavityState& state);

/// Probability that an intracavity photon leaves through the rear mirror:
/// T_rear / (T_front + T_rear + A_rt).
double escape_probability(const MirrorPair& mirrors, double round_trip_loss);

/// Intensity decay rate of the stored photon (2 pi times the resonance FWHM), 1/s.
double photon_decay_rate(const CavityState& state);

}  // namespace clusterpdc::cavity
