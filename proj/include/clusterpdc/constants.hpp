#pragma once

#include <numbers>

namespace clusterpdc {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double frequency_from_wavelength(double wavelength_m) {
  return kSpeedOfLight / wavelength_m;
}
inline constexpr double wavelength_from_frequency(double frequency_hz) {
  return kSpeedOfLight / frequency_hz;
}

}  // namespace clusterpdc
