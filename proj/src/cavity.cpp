#include "clusterpdc/cavity.hpp"

#include <cmath>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"

namespace clusterpdc::cavity {

void MirrorPair::validate() const {
  if (!(front >= 0.0 && front < 1.0) || !(rear >= 0.0 && rear < 1.0)) {
    throw DomainError("mirror reflectivities must satisfy 0 <= R < 1");
  }
}

void CavityState::validate() const {
  mirrors.validate();
  if (!(length_m > 0.0)) throw DomainError("cavity length must be positive");
  if (!(loss_per_m >= 0.0)) throw DomainError("loss coefficient must be nonnegative");
  if (!(group_index > 0.0)) throw DomainError("group index must be positive");
  const double r = round_trip_survival(*this);
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("round-trip survival must lie in [0, 1)");
}

double round_trip_survival(const CavityState& state) {
  return std::sqrt(state.mirrors.front * state.mirrors.rear) * std::exp(-state.loss_per_m * state.length_m);
}

double round_trip_loss(double loss_per_m, double length_m) { return -std::expm1(-2.0 * loss_per_m * length_m); }

double fsr(const CavityState& state) { return kSpeedOfLight / (2.0 * state.group_index * state.length_m); }

double finesse_from_survival(double r) { return kPi * std::sqrt(r) / (1.0 - r); }

double finesse(const CavityState& state) { return finesse_from_survival(round_trip_survival(state)); }

double survival_from_finesse(double f) {
  if (!(f > 0.0)) throw DomainError("finesse must be positive");
  // pi s = F (1 - s^2) with s = sqrt(r)
  const double s = (-kPi + std::sqrt(kPi * kPi + 4.0 * f * f)) / (2.0 * f);
  return s * s;
}

double infer_loss(double measured_finesse, const MirrorPair& mirrors, double length_m) {
  mirrors.validate();
  if (!(length_m > 0.0)) throw DomainError("cavity length must be positive");
  const double lossless = std::sqrt(mirrors.front * mirrors.rear);
  const double r = survival_from_finesse(measured_finesse);
  const double ratio = lossless / r;
  if (ratio < 1.0) {
    if (ratio > 1.0 - 1e-12) return 0.0;
    throw ComputationError("measured finesse " + std::to_string(measured_finesse) +
                           " exceeds the lossless finesse " + std::to_string(finesse_from_survival(lossless)) +
                           " of these mirrors");
  }
  return std::log(ratio) / length_m;
}

double airy(double frequency_hz, const CavityState& state) {
  const double r = round_trip_survival(state);
  const double a = (1.0 - r) * (1.0 - r);
  const double s = std::sin(kPi * (frequency_hz - state.reference_frequency_hz) / fsr(state) +
                            0.5 * state.phase_offset_rad);
  return a / (a + 4.0 * r * s * s);
}

double airy_fwhm(const CavityState& state) {
  const double r = round_trip_survival(state);
  if (r <= 0.0) return fsr(state);
  const double x = (1.0 - r) / (2.0 * std::sqrt(r));
  if (x >= 1.0) return fsr(state);
  return 2.0 * fsr(state) / kPi * std::asin(x);
}

double escape_probability(const MirrorPair& mirrors, double round_trip_loss) {
  // A perfect front mirror is allowed here: the rear is then the only exit.
  if (!(mirrors.front >= 0.0 && mirrors.front <= 1.0 && mirrors.rear >= 0.0 && mirrors.rear <= 1.0)) {
    throw DomainError("mirror reflectivities must lie in [0, 1]");
  }
  if (!(round_trip_loss >= 0.0 && round_trip_loss < 1.0)) throw DomainError("round-trip loss must lie in [0, 1)");
  const double denominator = mirrors.front_transmission() + mirrors.rear_transmission() + round_trip_loss;
  if (!(denominator > 0.0)) throw ComputationError("degenerate cavity: no loss and no transmission");
  return mirrors.rear_transmission() / denominator;
}

double photon_decay_rate(const CavityState& state) { return kTwoPi * airy_fwhm(state); }

}  // namespace clusterpdc::cavity
