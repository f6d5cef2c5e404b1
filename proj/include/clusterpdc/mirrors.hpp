#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace clusterpdc::mirrors {

struct Layer {
  double index = 1.0;
  double thickness_m = 0.0;
  /// Optional (wavelength m, index) samples; linear interpolation, clamped at the ends.
  std::vector<std::pair<double, double>> dispersion;

  [[nodiscard]] double index_at(double wavelength_m) const;
};

/// Layers are listed from the incident side towards the substrate.
struct LayerStack {
  std::string name;
  std::vector<Layer> layers;
  double incident_index = 1.0;
  double substrate_index = 2.2;

  /// Throws DomainError unless all indices >= 1 and thicknesses > 0.
  void validate() const;
  [[nodiscard]] LayerStack reversed() const;  // swaps media as well

  static LayerStack from_json(const nlohmann::json& j);
  static LayerStack load(const std::filesystem::path& path);
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Alternating high/low quarter-wave layers starting and ending on high for odd counts.
LayerStack quarter_wave_stack(double n_high, double n_low, int layer_count, double design_wavelength_m,
                              double incident_index, double substrate_index);

/// Normal-incidence intensity reflectivity from the characteristic-matrix product.
double stack_reflectivity(const LayerStack& stack, double wavelength_m);

std::vector<double> stack_spectrum(const LayerStack& stack, std::span<const double> wavelengths_m);

}  // namespace clusterpdc::mirrors
