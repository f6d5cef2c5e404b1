#pragma once

#include <vector>

#include <json.hpp>

#include "clusterpdc/cluster.hpp"
#include "clusterpdc/config.hpp"

namespace clusterpdc::design {

struct DesignPoint {
  double mirror_rear = 0.0;
  double length_m = 0.0;
  double finesse_signal = 0.0;
  double finesse_idler = 0.0;
  double linewidth_signal_hz = 0.0;
  double linewidth_idler_hz = 0.0;
  double joint_linewidth_hz = 0.0;
  double escape_signal = 0.0;
  double escape_idler = 0.0;
  double pair_escape = 0.0;
  double brightness = 0.0;  // pairs/(s mW MHz)
  bool feasible = false;
  bool pareto = false;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// FWHM of the product of two co-centered Lorentzians of FWHM a and b.
double product_linewidth(double a_hz, double b_hz);

struct ScanInputs {
  double pair_rate_per_s_per_mw = 7e6;
  double dominant_fraction = 0.39;
};

/// Grid over rear reflectivity and length, keeping front mirrors and loss
/// coefficients of `base`. Feasible: both finesses >= finesse_min. Pareto
/// flags mark feasible points not dominated in (brightness, pair escape).
std::vector<DesignPoint> scan(const cluster::Device& base, const config::DesignScanConfig& grid, const ScanInputs& in);

}  // namespace clusterpdc::design
