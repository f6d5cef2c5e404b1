#include "clusterpdc/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <toml.hpp>

#include "clusterpdc/cavity.hpp"
#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"

namespace clusterpdc::config {

using dispersion::Wave;

std::string to_string(LossMode m) { return m == LossMode::Nominal ? "nominal" : "fit-to-finesse"; }

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "nominal") return LossMode::Nominal;
  if (s == "fit-to-finesse") return LossMode::FitToFinesse;
  throw ConfigError("loss_mode must be 'nominal' or 'fit-to-finesse', got '" + s + "'");
}

std::string to_string(RateConvention c) { return c == RateConvention::SingleCavity ? "single-cavity" : "joint"; }

RateConvention rate_convention_from_string(const std::string& s) {
  if (s == "single-cavity") return RateConvention::SingleCavity;
  if (s == "joint") return RateConvention::Joint;
  throw ConfigError("rate_convention must be 'single-cavity' or 'joint', got '" + s + "'");
}

double db_per_cm_to_per_m(double db_per_cm) { return db_per_cm * 100.0 * std::log(10.0) / 10.0; }

namespace {

class Reader {
 public:
  explicit Reader(const toml::table& t) : table_(t) {}

  template <class T>
  std::optional<T> opt(const std::string& path) {
    seen_.insert(path);
    const auto node = table_.at_path(path);
    if (!node) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (!node.is_number()) throw ConfigError("'" + path + "' must be a number");
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
      if (!node.is_integer()) throw ConfigError("'" + path + "' must be an integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!node.is_boolean()) throw ConfigError("'" + path + "' must be true or false");
    } else {
      if (!node.is_string()) throw ConfigError("'" + path + "' must be a string");
    }
    return node.value<T>();
  }

  /// Number, or a string keyword that maps to nullopt.
  std::optional<double> number_or_keyword(const std::string& path, const std::string& keyword,
                                          std::optional<double> fallback) {
    seen_.insert(path);
    const auto node = table_.at_path(path);
    if (!node) return fallback;
    if (node.is_number()) return node.value<double>();
    if (node.is_string() && *node.value<std::string>() == keyword) return std::nullopt;
    throw ConfigError("'" + path + "' must be a number or \"" + keyword + "\"");
  }

  template <class T>
  void get(const std::string& path, T& target) {
    if (auto v = opt<T>(path)) target = *v;
  }

  void check_unknown() const { walk(table_, ""); }

 private:
  void walk(const toml::table& t, const std::string& prefix) const {
    for (const auto& [key, node] : t) {
      const std::string path = prefix.empty() ? std::string(key.str()) : prefix + "." + std::string(key.str());
      if (const auto* sub = node.as_table()) {
        walk(*sub, path);
      } else if (!seen_.count(path)) {
        throw ConfigError("unknown configuration key '" + path + "'");
      }
    }
  }

  const toml::table& table_;
  std::set<std::string> seen_;
};

void read_arm(Reader& r, const std::string& prefix, ArmConfig& arm) {
  r.get(prefix + ".mirror_front", arm.mirror_front);
  r.get(prefix + ".mirror_rear", arm.mirror_rear);
  r.get(prefix + ".loss_db_per_cm", arm.loss_db_per_cm);
  r.get(prefix + ".finesse", arm.finesse);
}

void read_detector(Reader& r, const std::string& prefix, montecarlo::DetectorSpec& d) {
  r.get(prefix + ".efficiency", d.efficiency);
  r.get(prefix + ".jitter_s", d.jitter_s);
  r.get(prefix + ".dark_rate_per_s", d.dark_rate_per_s);
  r.get(prefix + ".dead_time_s", d.dead_time_s);
}

int read_int(Reader& r, const std::string& path, int fallback) {
  if (auto v = r.opt<std::int64_t>(path)) return static_cast<int>(*v);
  return fallback;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void DeviceConfig::validate() const {
  require(length_m > 0.0, "device.length_m must be positive");
  require(poling_period_m > 0.0, "device.poling_period_m must be positive");
  require(qpm_order > 0 && qpm_order % 2 == 1, "device.qpm_order must be a positive odd integer");
  require(!dispersion_file.empty(), "device.dispersion_file must be set");
  require(pump_wavelength_m > 0.0 && signal_wavelength_m > pump_wavelength_m,
          "calibration wavelengths must be positive with signal longer than pump");
  require(signal_wavelength_m < 2.0 * pump_wavelength_m, "calibration signal must be the shorter pair wavelength");
  require(std::isfinite(calibration_temperature_c), "calibration.temperature_c must be finite");
  require(target_fsr_signal_hz > 0.0 && target_fsr_idler_hz > 0.0, "target FSRs must be positive");
  for (const auto* arm : {&signal, &idler}) {
    require(arm->mirror_front >= 0.0 && arm->mirror_front < 1.0 && arm->mirror_rear >= 0.0 && arm->mirror_rear < 1.0,
            "mirror reflectivities must lie in [0, 1)");
    require(arm->loss_db_per_cm >= 0.0, "loss_db_per_cm must be nonnegative");
    require(arm->finesse > 0.0, "finesse must be positive");
  }
  require(threshold > 0.0 && threshold < 1.0, "spectrum.threshold must lie in (0, 1)");
  require(jitter_fwhm_s >= 0.0, "spectrum.jitter_fwhm_s must be nonnegative");
  require(pair_rate_per_s_per_mw > 0.0, "source.pair_rate_per_s_per_mw must be positive");
  require(pump_power_mw > 0.0, "source.pump_power_mw must be positive");
  require(pulse_length_s > 0.0 && repetition_hz > 0.0 && pulse_length_s * repetition_hz <= 1.0,
          "pulse length and repetition rate must be positive with duty cycle <= 1");
  for (const auto* d : {&signal_detector, &idler_detector}) {
    require(d->efficiency >= 0.0 && d->efficiency <= 1.0, "detector efficiency must lie in [0, 1]");
    require(d->jitter_s >= 0.0 && d->dark_rate_per_s >= 0.0 && d->dead_time_s >= 0.0,
            "detector jitter, dark rate and dead time must be nonnegative");
  }
  require(filter.width_m > 0.0, "filter.width_m must be positive");
  require(!filter.center_signal_hz || *filter.center_signal_hz > 0.0, "filter.center_signal_hz must be positive");
  require(lead_in_s >= 0.0, "simulation.lead_in_s must be nonnegative");
  require(!brightness_bandwidth_hz || *brightness_bandwidth_hz > 0.0, "spectrum.brightness_bandwidth_hz must be positive");
  const auto& d = design_scan;
  require(d.rear_min >= 0.0 && d.rear_max < 1.0 && d.rear_min <= d.rear_max, "design_scan rear range must lie in [0, 1)");
  require(d.length_min_m > 0.0 && d.length_min_m <= d.length_max_m, "design_scan length range must be positive");
  require(d.rear_steps >= 1 && d.length_steps >= 1, "design_scan steps must be at least 1");
  require(d.finesse_min > 0.0, "design_scan.finesse_min must be positive");
}

DeviceConfig DeviceConfig::from_toml_string(const std::string& text, const std::filesystem::path& base_dir) {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "malformed TOML: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  DeviceConfig c;
  c.base_dir = base_dir;
  Reader r(t);
  r.get("device.length_m", c.length_m);
  r.get("device.poling_period_m", c.poling_period_m);
  c.qpm_order = read_int(r, "device.qpm_order", c.qpm_order);
  r.get("device.dispersion_file", c.dispersion_file);

  r.get("calibration.pump_wavelength_m", c.pump_wavelength_m);
  r.get("calibration.signal_wavelength_m", c.signal_wavelength_m);
  r.get("calibration.temperature_c", c.calibration_temperature_c);
  if (auto m = r.opt<std::string>("calibration.mode")) {
    try {
      c.calibration_mode = qpm::calibration_mode_from_string(*m);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  r.get("calibration.target_fsr_signal_hz", c.target_fsr_signal_hz);
  r.get("calibration.target_fsr_idler_hz", c.target_fsr_idler_hz);

  if (auto m = r.opt<std::string>("cavity.loss_mode")) c.loss_mode = loss_mode_from_string(*m);
  read_arm(r, "cavity.signal", c.signal);
  read_arm(r, "cavity.idler", c.idler);

  r.get("spectrum.threshold", c.threshold);
  if (auto m = r.opt<std::string>("spectrum.rate_convention")) c.rate_convention = rate_convention_from_string(*m);
  r.get("spectrum.jitter_fwhm_s", c.jitter_fwhm_s);
  c.brightness_bandwidth_hz = r.number_or_keyword("spectrum.brightness_bandwidth_hz", "joint", c.brightness_bandwidth_hz);

  r.get("source.pair_rate_per_s_per_mw", c.pair_rate_per_s_per_mw);
  r.get("source.scale_rate_by_escape", c.scale_rate_by_escape);
  r.get("source.pump_power_mw", c.pump_power_mw);
  r.get("pulses.length_s", c.pulse_length_s);
  r.get("pulses.repetition_hz", c.repetition_hz);
  read_detector(r, "detectors.signal", c.signal_detector);
  read_detector(r, "detectors.idler", c.idler_detector);

  r.get("filter.enabled", c.filter.enabled);
  r.get("filter.width_m", c.filter.width_m);
  c.filter.center_signal_hz = r.number_or_keyword("filter.center_signal_hz", "strongest-cluster", std::nullopt);
  if (auto a = r.opt<std::string>("filter.arm")) c.filter.arm = montecarlo::filter_arm_from_string(*a);

  if (auto s = r.opt<std::string>("simulation.statistics")) c.statistics = montecarlo::pair_statistics_from_string(*s);
  r.get("simulation.lead_in_s", c.lead_in_s);

  r.get("design_scan.rear_min", c.design_scan.rear_min);
  r.get("design_scan.rear_max", c.design_scan.rear_max);
  c.design_scan.rear_steps = read_int(r, "design_scan.rear_steps", c.design_scan.rear_steps);
  r.get("design_scan.length_min_m", c.design_scan.length_min_m);
  r.get("design_scan.length_max_m", c.design_scan.length_max_m);
  c.design_scan.length_steps = read_int(r, "design_scan.length_steps", c.design_scan.length_steps);
  r.get("design_scan.finesse_min", c.design_scan.finesse_min);

  r.check_unknown();
  c.validate();
  return c;
}

DeviceConfig DeviceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_toml_string(ss.str(), path.parent_path());
}

std::string DeviceConfig::to_toml_string() const {
  const auto arm = [](const ArmConfig& a) {
    return toml::table{{"mirror_front", a.mirror_front},
                       {"mirror_rear", a.mirror_rear},
                       {"loss_db_per_cm", a.loss_db_per_cm},
                       {"finesse", a.finesse}};
  };
  const auto det = [](const montecarlo::DetectorSpec& d) {
    return toml::table{{"efficiency", d.efficiency},
                       {"jitter_s", d.jitter_s},
                       {"dark_rate_per_s", d.dark_rate_per_s},
                       {"dead_time_s", d.dead_time_s}};
  };
  toml::table spectrum{{"threshold", threshold},
                       {"rate_convention", to_string(rate_convention)},
                       {"jitter_fwhm_s", jitter_fwhm_s}};
  if (brightness_bandwidth_hz) spectrum.insert("brightness_bandwidth_hz", *brightness_bandwidth_hz);
  else spectrum.insert("brightness_bandwidth_hz", "joint");
  toml::table filt{{"enabled", filter.enabled}, {"width_m", filter.width_m}, {"arm", montecarlo::to_string(filter.arm)}};
  if (filter.center_signal_hz) filt.insert("center_signal_hz", *filter.center_signal_hz);
  else filt.insert("center_signal_hz", "strongest-cluster");

  toml::table t{
      {"device", toml::table{{"length_m", length_m},
                             {"poling_period_m", poling_period_m},
                             {"qpm_order", qpm_order},
                             {"dispersion_file", dispersion_file}}},
      {"calibration", toml::table{{"pump_wavelength_m", pump_wavelength_m},
                                  {"signal_wavelength_m", signal_wavelength_m},
                                  {"temperature_c", calibration_temperature_c},
                                  {"mode", qpm::to_string(calibration_mode)},
                                  {"target_fsr_signal_hz", target_fsr_signal_hz},
                                  {"target_fsr_idler_hz", target_fsr_idler_hz}}},
      {"cavity", toml::table{{"loss_mode", to_string(loss_mode)}, {"signal", arm(signal)}, {"idler", arm(idler)}}},
      {"spectrum", spectrum},
      {"source", toml::table{{"pair_rate_per_s_per_mw", pair_rate_per_s_per_mw},
                             {"scale_rate_by_escape", scale_rate_by_escape},
                             {"pump_power_mw", pump_power_mw}}},
      {"pulses", toml::table{{"length_s", pulse_length_s}, {"repetition_hz", repetition_hz}}},
      {"detectors", toml::table{{"signal", det(signal_detector)}, {"idler", det(idler_detector)}}},
      {"filter", filt},
      {"simulation", toml::table{{"statistics", montecarlo::to_string(statistics)}, {"lead_in_s", lead_in_s}}},
      {"design_scan", toml::table{{"rear_min", design_scan.rear_min},
                                  {"rear_max", design_scan.rear_max},
                                  {"rear_steps", design_scan.rear_steps},
                                  {"length_min_m", design_scan.length_min_m},
                                  {"length_max_m", design_scan.length_max_m},
                                  {"length_steps", design_scan.length_steps},
                                  {"finesse_min", design_scan.finesse_min}}},
  };
  std::ostringstream os;
  os << t << '\n';
  return os.str();
}

nlohmann::json DeviceConfig::to_json() const {
  const auto arm = [](const ArmConfig& a) {
    return nlohmann::json{{"mirror_front", a.mirror_front},
                          {"mirror_rear", a.mirror_rear},
                          {"loss_db_per_cm", a.loss_db_per_cm},
                          {"finesse", a.finesse}};
  };
  const auto det = [](const montecarlo::DetectorSpec& d) {
    return nlohmann::json{{"efficiency", d.efficiency},
                          {"jitter_s", d.jitter_s},
                          {"dark_rate_per_s", d.dark_rate_per_s},
                          {"dead_time_s", d.dead_time_s}};
  };
  const auto opt = [](const std::optional<double>& v, const char* keyword) {
    return v ? nlohmann::json(*v) : nlohmann::json(keyword);
  };
  return {
      {"device", {{"length_m", length_m},
                  {"poling_period_m", poling_period_m},
                  {"qpm_order", qpm_order},
                  {"dispersion_file", dispersion_file}}},
      {"calibration", {{"pump_wavelength_m", pump_wavelength_m},
                       {"pump_wavelength_nm", pump_wavelength_m * 1e9},
                       {"signal_wavelength_m", signal_wavelength_m},
                       {"signal_wavelength_nm", signal_wavelength_m * 1e9},
                       {"temperature_c", calibration_temperature_c},
                       {"mode", qpm::to_string(calibration_mode)},
                       {"target_fsr_signal_hz", target_fsr_signal_hz},
                       {"target_fsr_idler_hz", target_fsr_idler_hz}}},
      {"cavity", {{"loss_mode", to_string(loss_mode)}, {"signal", arm(signal)}, {"idler", arm(idler)}}},
      {"spectrum", {{"threshold", threshold},
                    {"rate_convention", to_string(rate_convention)},
                    {"jitter_fwhm_s", jitter_fwhm_s},
                    {"brightness_bandwidth_hz", opt(brightness_bandwidth_hz, "joint")}}},
      {"source", {{"pair_rate_per_s_per_mw", pair_rate_per_s_per_mw},
                  {"scale_rate_by_escape", scale_rate_by_escape},
                  {"pump_power_mw", pump_power_mw}}},
      {"pulses", {{"length_s", pulse_length_s}, {"repetition_hz", repetition_hz}}},
      {"detectors", {{"signal", det(signal_detector)}, {"idler", det(idler_detector)}}},
      {"filter", {{"enabled", filter.enabled},
                  {"width_m", filter.width_m},
                  {"width_nm", filter.width_m * 1e9},
                  {"center_signal_hz", opt(filter.center_signal_hz, "strongest-cluster")},
                  {"arm", montecarlo::to_string(filter.arm)}}},
      {"simulation", {{"statistics", montecarlo::to_string(statistics)}, {"lead_in_s", lead_in_s}}},
      {"design_scan", {{"rear_min", design_scan.rear_min},
                       {"rear_max", design_scan.rear_max},
                       {"rear_steps", design_scan.rear_steps},
                       {"length_min_m", design_scan.length_min_m},
                       {"length_max_m", design_scan.length_max_m},
                       {"length_steps", design_scan.length_steps},
                       {"finesse_min", design_scan.finesse_min}}},
  };
}

std::filesystem::path DeviceConfig::dispersion_path() const {
  const std::filesystem::path p(dispersion_file);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

bool operator==(const DeviceConfig& a, const DeviceConfig& b) { return a.to_json() == b.to_json(); }

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw ComputationError("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

std::string config_hash(const DeviceConfig& config) {
  nlohmann::json j = config.to_json();
  j["dispersion_model"] = dispersion::SellmeierModel::load(config.dispersion_path()).to_json();
  return sha256_hex(j.dump());
}

std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::string>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return std::filesystem::path(*explicit_path);
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

nlohmann::json ResolvedDevice::to_json() const {
  return {{"calibration", calibration.to_json()},
          {"design", device.design.to_json()},
          {"loss_signal_per_m", loss_signal_per_m},
          {"loss_idler_per_m", loss_idler_per_m},
          {"finesse_signal", finesse_signal},
          {"finesse_idler", finesse_idler},
          {"escape_signal", escape_signal},
          {"escape_idler", escape_idler},
          {"pair_escape", pair_escape},
          {"fsr_signal_hz", fsr_signal_hz},
          {"fsr_idler_hz", fsr_idler_hz},
          {"linewidth_signal_hz", linewidth_signal_hz},
          {"linewidth_idler_hz", linewidth_idler_hz}};
}

CavityFigures cavity_figures(const cluster::Device& device, Wave wave) {
  const auto state = device.cavity_state(wave, device.design.temperature_c());
  state.validate();
  CavityFigures f;
  f.finesse = cavity::finesse(state);
  f.fsr_hz = cavity::fsr(state);
  f.linewidth_hz = cavity::airy_fwhm(state);
  f.escape = cavity::escape_probability(state.mirrors, cavity::round_trip_loss(state.loss_per_m, state.length_m));
  return f;
}

ResolvedDevice resolve(const DeviceConfig& config) {
  config.validate();
  const auto sellmeier = dispersion::SellmeierModel::load(config.dispersion_path());
  const dispersion::DispersionModel bulk(sellmeier);
  const auto design = qpm::OperatingPoint::from_pump_signal(config.pump_wavelength_m, config.signal_wavelength_m,
                                                            config.calibration_temperature_c);
  qpm::PolingSpec poling{config.poling_period_m, config.qpm_order};

  qpm::CalibrationOptions options;
  options.mode = config.calibration_mode;
  options.length_m = config.length_m;
  options.target_fsr_signal_hz = config.target_fsr_signal_hz;
  options.target_fsr_idler_hz = config.target_fsr_idler_hz;

  ResolvedDevice r;
  r.calibration = qpm::calibrate(design, poling, bulk, options);
  auto& d = r.device;
  d.model = bulk.with_correction(r.calibration.correction);
  d.poling = poling;
  d.length_m = config.length_m;
  d.design = design;
  d.signal.mirrors = {config.signal.mirror_front, config.signal.mirror_rear};
  d.idler.mirrors = {config.idler.mirror_front, config.idler.mirror_rear};

  const double cavity_length = d.model.expanded_length(config.length_m, config.calibration_temperature_c);
  if (config.loss_mode == LossMode::Nominal) {
    r.loss_signal_per_m = db_per_cm_to_per_m(config.signal.loss_db_per_cm);
    r.loss_idler_per_m = db_per_cm_to_per_m(config.idler.loss_db_per_cm);
  } else {
    r.loss_signal_per_m = cavity::infer_loss(config.signal.finesse, d.signal.mirrors, cavity_length);
    r.loss_idler_per_m = cavity::infer_loss(config.idler.finesse, d.idler.mirrors, cavity_length);
  }
  d.signal.loss_per_m = r.loss_signal_per_m;
  d.idler.loss_per_m = r.loss_idler_per_m;

  const auto fs = cavity_figures(d, Wave::Signal);
  const auto fi = cavity_figures(d, Wave::Idler);
  r.finesse_signal = fs.finesse;
  r.finesse_idler = fi.finesse;
  r.escape_signal = fs.escape;
  r.escape_idler = fi.escape;
  r.pair_escape = fs.escape * fi.escape;
  r.fsr_signal_hz = fs.fsr_hz;
  r.fsr_idler_hz = fi.fsr_hz;
  r.linewidth_signal_hz = fs.linewidth_hz;
  r.linewidth_idler_hz = fi.linewidth_hz;
  return r;
}

std::pair<double, double> decay_rates(const ResolvedDevice& resolved, const cluster::ClusterSpectrum& spectrum,
                                      RateConvention convention) {
  if (convention == RateConvention::SingleCavity) {
    return {kTwoPi * resolved.linewidth_signal_hz, kTwoPi * resolved.linewidth_idler_hz};
  }
  const double g = kTwoPi * spectrum.dominant_mode().linewidth_joint_hz;
  return {g, g};
}

montecarlo::PulseTrainSpec pulse_train(const DeviceConfig& config, const ResolvedDevice& resolved) {
  montecarlo::PulseTrainSpec p;
  p.pulse_length_s = config.pulse_length_s;
  p.repetition_hz = config.repetition_hz;
  p.pump_power_mw = config.pump_power_mw;
  p.pair_rate_per_s_per_mw = config.pair_rate_per_s_per_mw * (config.scale_rate_by_escape ? resolved.pair_escape : 1.0);
  return p;
}

}  // namespace clusterpdc::config
