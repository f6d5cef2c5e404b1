#include "clusterpdc/mirrors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"

namespace clusterpdc::mirrors {

double Layer::index_at(double wavelength_m) const {
  if (dispersion.empty()) return index;
  if (wavelength_m <= dispersion.front().first) return dispersion.front().second;
  if (wavelength_m >= dispersion.back().first) return dispersion.back().second;
  const auto hi = std::lower_bound(dispersion.begin(), dispersion.end(), wavelength_m,
                                   [](const auto& p, double w) { return p.first < w; });
  const auto lo = hi - 1;
  const double f = (wavelength_m - lo->first) / (hi->first - lo->first);
  return lo->second + f * (hi->second - lo->second);
}

void LayerStack::validate() const {
  if (!(incident_index >= 1.0 && substrate_index >= 1.0)) throw DomainError("media indices must be >= 1");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (!(l.index >= 1.0)) throw DomainError("layer " + std::to_string(i) + " index below 1");
    if (!(l.thickness_m > 0.0)) throw DomainError("layer " + std::to_string(i) + " thickness must be positive");
    for (const auto& [w, n] : l.dispersion) {
      if (!(w > 0.0 && n >= 1.0)) throw DomainError("layer " + std::to_string(i) + " has an invalid dispersion sample");
    }
    if (!std::is_sorted(l.dispersion.begin(), l.dispersion.end())) {
      throw DomainError("layer " + std::to_string(i) + " dispersion samples must be sorted by wavelength");
    }
  }
}

LayerStack LayerStack::reversed() const {
  LayerStack r = *this;
  std::reverse(r.layers.begin(), r.layers.end());
  std::swap(r.incident_index, r.substrate_index);
  return r;
}

LayerStack LayerStack::from_json(const nlohmann::json& j) {
  try {
    LayerStack s;
    s.name = j.value("name", std::string());
    s.incident_index = j.value("incident_index", 1.0);
    s.substrate_index = j.value("substrate_index", 2.2);
    for (const auto& lj : j.at("layers")) {
      Layer l;
      l.index = lj.at("index").get<double>();
      l.thickness_m = lj.at("thickness_nm").get<double>() * 1e-9;
      if (lj.contains("dispersion")) {
        for (const auto& p : lj.at("dispersion")) l.dispersion.emplace_back(p.at(0).get<double>() * 1e-9, p.at(1).get<double>());
      }
      s.layers.push_back(std::move(l));
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed layer stack: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid layer stack: ") + e.what());
  }
}

LayerStack LayerStack::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stack file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse stack file " + path.string() + ": " + e.what());
  }
}

nlohmann::json LayerStack::to_json() const {
  nlohmann::json layers_j = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json lj = {{"index", l.index}, {"thickness_nm", l.thickness_m * 1e9}};
    if (!l.dispersion.empty()) {
      nlohmann::json d = nlohmann::json::array();
      for (const auto& [w, n] : l.dispersion) d.push_back({w * 1e9, n});
      lj["dispersion"] = d;
    }
    layers_j.push_back(lj);
  }
  return {{"name", name}, {"incident_index", incident_index}, {"substrate_index", substrate_index}, {"layers", layers_j}};
}

LayerStack quarter_wave_stack(double n_high, double n_low, int layer_count, double design_wavelength_m,
                              double incident_index, double substrate_index) {
  if (layer_count < 0) throw DomainError("layer count must be nonnegative");
  if (!(design_wavelength_m > 0.0)) throw DomainError("design wavelength must be positive");
  LayerStack s;
  s.name = std::to_string(layer_count) + "-layer quarter-wave";
  s.incident_index = incident_index;
  s.substrate_index = substrate_index;
  for (int i = 0; i < layer_count; ++i) {
    const double n = i % 2 == 0 ? n_high : n_low;
    s.layers.push_back({n, design_wavelength_m / (4.0 * n), {}});
  }
  s.validate();
  return s;
}

double stack_reflectivity(const LayerStack& stack, double wavelength_m) {
  if (!(wavelength_m > 0.0)) throw DomainError("wavelength must be positive");
  using C = std::complex<double>;
  const C i(0.0, 1.0);
  // [B, C]^T = prod M_j [1, n_s]^T with M_j = [[cos d, i sin d / n], [i n sin d, cos d]]
  C m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;
  for (const auto& l : stack.layers) {
    const double n = l.index_at(wavelength_m);
    const double d = kTwoPi * n * l.thickness_m / wavelength_m;
    const double c = std::cos(d);
    const double s = std::sin(d);
    const C a11 = c, a12 = i * s / n, a21 = i * n * s, a22 = c;
    const C t11 = m11 * a11 + m12 * a21;
    const C t12 = m11 * a12 + m12 * a22;
    const C t21 = m21 * a11 + m22 * a21;
    const C t22 = m21 * a12 + m22 * a22;
    m11 = t11;
    m12 = t12;
    m21 = t21;
    m22 = t22;
  }
  const double n0 = stack.incident_index;
  const double ns = stack.substrate_index;
  const C b = m11 + m12 * ns;
  const C cc = m21 + m22 * ns;
  const C r = (n0 * b - cc) / (n0 * b + cc);
  return std::clamp(std::norm(r), 0.0, 1.0);
}

std::vector<double> stack_spectrum(const LayerStack& stack, std::span<const double> wavelengths_m) {
  std::vector<double> out;
  out.reserve(wavelengths_m.size());
  for (double w : wavelengths_m) out.push_back(stack_reflectivity(stack, w));
  return out;
}

}  // namespace clusterpdc::mirrors
