#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "clusterpdc/config.hpp"
#include "clusterpdc/random.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return CLUSTERPDC_DATA_DIR; }

inline const clusterpdc::config::DeviceConfig& default_config() {
  static const auto cfg = clusterpdc::config::DeviceConfig::load(data_dir() / "device.toml");
  return cfg;
}

/// Calibrated device from the shipped configuration; built once per process.
inline const clusterpdc::config::ResolvedDevice& resolved() {
  static const auto r = clusterpdc::config::resolve(default_config());
  return r;
}

inline const clusterpdc::cluster::Device& device() { return resolved().device; }

inline double t_cal() { return default_config().calibration_temperature_c; }

/// Small generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool coin() { return (rng_() & 1u) != 0; }

  std::vector<double> weights(std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = uniform(0.0, 1.0);
    return w;
  }

 private:
  clusterpdc::SplitMix64 rng_;
};

/// Runs `body(gen, case_index)` for `cases` generated cases.
template <class Body>
void for_all(int cases, std::uint64_t seed, Body&& body) {
  Gen gen(seed);
  for (int i = 0; i < cases; ++i) body(gen, i);
}

inline bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace testsupport
