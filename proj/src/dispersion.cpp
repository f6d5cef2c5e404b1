#include "clusterpdc/dispersion.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "clusterpdc/error.hpp"

namespace clusterpdc::dispersion {

std::string to_string(Polarization pol) { return pol == Polarization::TE ? "TE" : "TM"; }

std::string to_string(Wave wave) {
  switch (wave) {
    case Wave::Pump: return "pump";
    case Wave::Signal: return "signal";
    case Wave::Idler: return "idler";
  }
  return "unknown";
}

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void check_domain(double wavelength_um, double temperature_c) {
  if (!(wavelength_um >= SellmeierModel::kMinWavelengthUm && wavelength_um <= SellmeierModel::kMaxWavelengthUm)) {
    throw DomainError("wavelength " + format_value(wavelength_um) + " um outside Sellmeier domain [0.4, 1.6] um");
  }
  if (!(temperature_c >= SellmeierModel::kMinTemperatureC && temperature_c <= SellmeierModel::kMaxTemperatureC)) {
    throw DomainError("temperature " + format_value(temperature_c) + " C outside Sellmeier domain [20, 200] C");
  }
}

double index_squared(const SellmeierBranch& b, double lambda_um, double f) {
  const double pole = b.a3 + b.b2 * f;
  return b.a1 + (b.a2 + b.b1 * f) / (lambda_um * lambda_um - pole * pole) + b.b3 * f - b.a4 * lambda_um * lambda_um;
}

SellmeierBranch branch_from_json(const nlohmann::json& j) {
  const auto a = j.at("A").get<std::vector<double>>();
  const auto b = j.at("B").get<std::vector<double>>();
  if (a.size() != 4 || b.size() != 3) throw ConfigError("Sellmeier branch needs 4 A and 3 B coefficients");
  return {a[0], a[1], a[2], a[3], b[0], b[1], b[2]};
}

nlohmann::json branch_to_json(const SellmeierBranch& b) {
  return {{"A", {b.a1, b.a2, b.a3, b.a4}}, {"B", {b.b1, b.b2, b.b3}}};
}

}  // namespace

double SellmeierModel::temperature_parameter(double temperature_c) const {
  return (temperature_c - parameter_reference_c) * (temperature_c + parameter_reference_c + 2.0 * 273.16);
}

double SellmeierModel::index(IndexBranch branch, double wavelength_um, double temperature_c) const {
  check_domain(wavelength_um, temperature_c);
  const double f = temperature_parameter(temperature_c);
  const auto& b = branch == IndexBranch::Ordinary ? ordinary : extraordinary;
  return std::sqrt(index_squared(b, wavelength_um, f));
}

void SellmeierModel::validate() const {
  for (const auto* b : {&ordinary, &extraordinary}) {
    for (double t = kMinTemperatureC; t <= kMaxTemperatureC + 1e-9; t += 5.0) {
      const double f = temperature_parameter(t);
      if (std::abs(b->a3 + b->b2 * f) >= kMinWavelengthUm) {
        throw ConfigError("Sellmeier pole inside the wavelength domain at T = " + format_value(t) + " C");
      }
      for (double l = kMinWavelengthUm; l <= kMaxWavelengthUm + 1e-9; l += 0.01) {
        const double n2 = index_squared(*b, l, f);
        if (!(n2 > 1.0) || !std::isfinite(n2)) {
          throw ConfigError("Sellmeier index <= 1 at lambda = " + format_value(l) + " um, T = " + format_value(t) + " C");
        }
      }
    }
  }
  if (!(thermal_expansion_per_k >= 0.0)) throw ConfigError("thermal expansion coefficient must be nonnegative");
}

SellmeierModel SellmeierModel::from_json(const nlohmann::json& j) {
  try {
    const auto form = j.value("form", std::string("edwards-lawrence"));
    if (form != "edwards-lawrence") throw ConfigError("unsupported Sellmeier form '" + form + "'");
    SellmeierModel m;
    m.ordinary = branch_from_json(j.at("ordinary"));
    m.extraordinary = branch_from_json(j.at("extraordinary"));
    m.parameter_reference_c = j.value("parameter_reference_c", 24.5);
    m.thermal_expansion_per_k = j.value("thermal_expansion_per_k", 1.5e-5);
    m.provenance = j.value("provenance", std::string());
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed dispersion data: ") + e.what());
  }
}

SellmeierModel SellmeierModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dispersion file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse dispersion file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json SellmeierModel::to_json() const {
  return {{"form", "edwards-lawrence"},
          {"parameter_reference_c", parameter_reference_c},
          {"thermal_expansion_per_k", thermal_expansion_per_k},
          {"ordinary", branch_to_json(ordinary)},
          {"extraordinary", branch_to_json(extraordinary)},
          {"provenance", provenance}};
}

double WaveguideCorrection::offset(Wave wave) const {
  switch (wave) {
    case Wave::Pump: return dn_pump;
    case Wave::Signal: return dn_signal;
    case Wave::Idler: return dn_idler;
  }
  return 0.0;
}

bool WaveguideCorrection::is_perturbative() const {
  return std::abs(dn_pump) < kMaxOffset && std::abs(dn_signal) < kMaxOffset && std::abs(dn_idler) < kMaxOffset;
}

nlohmann::json WaveguideCorrection::to_json() const {
  return {{"dn_pump", dn_pump},
          {"dn_signal", dn_signal},
          {"dn_idler", dn_idler},
          {"residual_mismatch_per_m", residual_mismatch_per_m}};
}

WaveguideCorrection WaveguideCorrection::from_json(const nlohmann::json& j) {
  WaveguideCorrection c;
  c.dn_pump = j.value("dn_pump", 0.0);
  c.dn_signal = j.value("dn_signal", 0.0);
  c.dn_idler = j.value("dn_idler", 0.0);
  c.residual_mismatch_per_m = j.value("residual_mismatch_per_m", 0.0);
  if (!c.is_perturbative()) throw ConfigError("waveguide correction offsets must satisfy |dn| < 0.05");
  return c;
}

Polarization WavePolarizations::of(Wave wave) const {
  switch (wave) {
    case Wave::Pump: return pump;
    case Wave::Signal: return signal;
    case Wave::Idler: return idler;
  }
  return pump;
}

DispersionModel::DispersionModel(SellmeierModel sellmeier, WaveguideCorrection correction,
                                 WavePolarizations polarizations)
    : sellmeier_(std::move(sellmeier)), correction_(correction), polarizations_(polarizations) {
  if (!correction_.is_perturbative()) throw DomainError("waveguide correction offsets must satisfy |dn| < 0.05");
}

double DispersionModel::refractive_index(Wave wave, double wavelength_m, double temperature_c) const {
  return dispersion::refractive_index(sellmeier_, wavelength_m, temperature_c, polarizations_.of(wave),
                                      correction_.offset(wave));
}

double DispersionModel::group_index(Wave wave, double wavelength_m, double temperature_c) const {
  const double h = fd_step_m;
  const double lo_um = (wavelength_m - h) * 1e6;
  const double hi_um = (wavelength_m + h) * 1e6;
  if (lo_um < SellmeierModel::kMinWavelengthUm || hi_um > SellmeierModel::kMaxWavelengthUm) {
    throw DomainError("group index at " + format_value(wavelength_m * 1e6) +
                      " um needs one finite-difference step inside [0.4, 1.6] um");
  }
  const double n = refractive_index(wave, wavelength_m, temperature_c);
  const double derivative =
      (refractive_index(wave, wavelength_m + h, temperature_c) - refractive_index(wave, wavelength_m - h, temperature_c)) /
      (2.0 * h);
  return n - wavelength_m * derivative;
}

double DispersionModel::optical_path_length(Wave wave, double length_m, double wavelength_m,
                                            double temperature_c) const {
  if (!(length_m > 0.0)) throw DomainError("optical path length needs a positive geometric length");
  return refractive_index(wave, wavelength_m, temperature_c) * expanded_length(length_m, temperature_c);
}

double DispersionModel::expanded_length(double length_m, double temperature_c) const {
  return length_m * (1.0 + sellmeier_.thermal_expansion_per_k * (temperature_c - expansion_reference_c));
}

DispersionModel DispersionModel::with_correction(const WaveguideCorrection& correction) const {
  DispersionModel copy(sellmeier_, correction, polarizations_);
  copy.fd_step_m = fd_step_m;
  copy.expansion_reference_c = expansion_reference_c;
  return copy;
}

double refractive_index(const SellmeierModel& model, double wavelength_m, double temperature_c,
                        Polarization pol, double offset) {
  return model.index(branch_for(pol), wavelength_m * 1e6, temperature_c) + offset;
}

}  // namespace clusterpdc::dispersion
