#include "clusterpdc/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "clusterpdc/cluster.hpp"
#include "clusterpdc/config.hpp"
#include "clusterpdc/constants.hpp"
#include "clusterpdc/design.hpp"
#include "clusterpdc/error.hpp"
#include "clusterpdc/mirrors.hpp"
#include "clusterpdc/montecarlo.hpp"
#include "clusterpdc/numeric.hpp"
#include "clusterpdc/photonstats.hpp"
#include "clusterpdc/timetag_io.hpp"

namespace clusterpdc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSchemaPrefix = "clusterpdc/";

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... T>
  void row(const T&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct Common {
  std::optional<std::string> config;
  std::string out_dir = ".";
  std::optional<unsigned> threads;
};

class Context {
 public:
  Context(const Common& common, std::ostream& out) : common_(common), out_(out) {}

  const config::DeviceConfig& cfg() {
    if (!cfg_) {
      const auto path = config::resolve_config_path(common_.config);
      if (!path) {
        throw ConfigError(std::string("no config given; pass --config or set ") + config::kConfigEnvVar);
      }
      cfg_ = config::DeviceConfig::load(*path);
      hash_ = config::config_hash(*cfg_);
    }
    return *cfg_;
  }

  const std::string& hash() {
    cfg();
    return hash_;
  }

  const config::ResolvedDevice& device() {
    if (!resolved_) resolved_ = config::resolve(cfg());
    return *resolved_;
  }

  fs::path out_dir() {
    fs::path d(common_.out_dir);
    fs::create_directories(d);
    return d;
  }

  /// Envelope shared by every JSON output; also drops the resolved config next to it.
  json header(const std::string& schema, const std::string& command, std::optional<std::uint64_t> seed = {}) {
    json j = {{"schema", std::string(kSchemaPrefix) + schema + "/v1"}, {"command", command}, {"config_hash", hash()}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    write_json(out_dir() / "config.resolved.json", {{"schema", std::string(kSchemaPrefix) + "resolved-config/v1"},
                                                    {"config_hash", hash()},
                                                    {"config", cfg().to_json()}});
    return j;
  }

  void announce(const fs::path& p) { out_ << p.string() << '\n'; }

  [[nodiscard]] std::optional<unsigned> threads() const { return common_.threads; }

 private:
  const Common& common_;
  std::ostream& out_;
  std::optional<config::DeviceConfig> cfg_;
  std::string hash_;
  std::optional<config::ResolvedDevice> resolved_;
};

cluster::EnumerationOptions enumeration(Context& ctx, std::optional<double> threshold) {
  cluster::EnumerationOptions o;
  o.threshold = threshold.value_or(ctx.cfg().threshold);
  return o;
}

void write_modes_csv(const fs::path& path, const cluster::ClusterSpectrum& s) {
  CsvWriter csv(path, "signal_hz,idler_hz,signal_nm,weight,cluster_id,linewidth_hz");
  for (const auto& m : s.modes) {
    csv.row(m.signal_hz, m.idler_hz, wavelength_from_frequency(m.signal_hz) * 1e9, m.weight, m.cluster_id,
            m.linewidth_joint_hz);
  }
}

json brightness_block(Context& ctx, const cluster::ClusterSpectrum& s) {
  const auto& cfg = ctx.cfg();
  const auto& dev = ctx.device();
  const double bw = cfg.brightness_bandwidth_hz.value_or(s.dominant_mode().linewidth_joint_hz);
  const double fraction = cluster::dominant_mode_fraction(s);
  return {{"pair_rate_per_s_per_mw", cfg.pair_rate_per_s_per_mw},
          {"dominant_fraction", fraction},
          {"pair_escape", dev.pair_escape},
          {"mode_bandwidth_hz", bw},
          {"brightness_pairs_per_s_mw_mhz",
           cluster::brightness(cfg.pair_rate_per_s_per_mw, fraction, dev.pair_escape, bw)}};
}

// ---------------------------------------------------------------------------

struct CalibrateOpts {
  std::optional<std::string> mode;
};

int cmd_calibrate(Context& ctx, const CalibrateOpts& o) {
  if (o.mode) {
    auto cfg = ctx.cfg();
    cfg.calibration_mode = qpm::calibration_mode_from_string(*o.mode);
    const auto r = config::resolve(cfg);
    json j = ctx.header("calibration", "calibrate");
    j["calibration_mode"] = *o.mode;
    j["device"] = r.to_json();
    const auto path = ctx.out_dir() / "calibration.json";
    write_json(path, j);
    ctx.announce(path);
    return kExitOk;
  }
  json j = ctx.header("calibration", "calibrate");
  j["calibration_mode"] = qpm::to_string(ctx.cfg().calibration_mode);
  j["device"] = ctx.device().to_json();
  const auto path = ctx.out_dir() / "calibration.json";
  write_json(path, j);
  ctx.announce(path);
  return kExitOk;
}

struct SpectrumOpts {
  std::optional<double> temp;
  double span = 400e9;
  double res = 1e7;
  std::optional<double> center;
  std::optional<double> threshold;
  bool grid = true;
};

int cmd_spectrum(Context& ctx, const SpectrumOpts& o, const std::string& command) {
  const auto& dev = ctx.device();
  const double t = o.temp.value_or(ctx.cfg().calibration_temperature_c);
  const auto spectrum = cluster::enumerate_modes(t, dev.device, enumeration(ctx, o.threshold));
  const auto dir = ctx.out_dir();

  json j = ctx.header(command == "spectrum" ? "spectrum" : "clusters", command);
  j["spectrum"] = cluster::to_json(spectrum);
  j["summary"] = cluster::to_json(cluster::summarize(spectrum));
  j["vernier_spacing_hz"] = cluster::vernier_spacing(dev.fsr_signal_hz, dev.fsr_idler_hz);
  j["brightness"] = brightness_block(ctx, spectrum);
  j["modes_file"] = "modes.csv";
  write_modes_csv(dir / "modes.csv", spectrum);

  if (o.grid) {
    const double center = o.center.value_or(spectrum.envelope_center_hz);
    const auto samples = cluster::sample_spectrum(t, dev.device, center, o.span, o.res);
    CsvWriter csv(dir / "spectrum_grid.csv", "signal_hz,idler_hz,density_rel");
    for (const auto& s : samples) csv.row(s.signal_hz, spectrum.pump_hz - s.signal_hz, s.density);
    j["grid"] = {{"file", "spectrum_grid.csv"},
                 {"center_hz", center},
                 {"span_hz", o.span},
                 {"resolution_hz", o.res},
                 {"points", samples.size()}};
  }
  const auto path = dir / (command + ".json");
  write_json(path, j);
  ctx.announce(path);
  return kExitOk;
}

struct ScanOpts {
  std::optional<double> from;
  std::optional<double> to;
  double step = 1e-3;
  std::optional<double> threshold;
};

int cmd_temp_scan(Context& ctx, const ScanOpts& o) {
  const auto& dev = ctx.device();
  const double tc = ctx.cfg().calibration_temperature_c;
  const double from = o.from.value_or(tc - 0.05);
  const double to = o.to.value_or(tc + 0.05);
  if (!(o.step > 0.0) || !(to >= from)) throw DomainError("temperature range must be ascending with a positive step");
  const auto temps = numeric::arange(from, to, o.step);
  const auto scan = cluster::scan_temperature(dev.device, temps, enumeration(ctx, o.threshold));
  const auto dir = ctx.out_dir();

  CsvWriter csv(dir / "temp_scan.csv",
                "temperature_c,cluster_count,dominant_fraction,central_weight,side_to_central,side_asymmetry,"
                "central_k,top_two_ratio,cluster_spacing_hz,intra_cluster_spacing_hz");
  json points = json::array();
  for (const auto& p : scan.points) {
    csv.row(p.temperature_c, p.cluster_count, p.dominant_fraction, p.central_weight, p.side_to_central,
            p.side_asymmetry, p.central_k, p.top_two_ratio, p.cluster_spacing_hz, p.intra_cluster_spacing_hz);
    points.push_back(cluster::to_json(p));
  }
  json j = ctx.header("temp-scan", "temp-scan");
  j["scan"] = {{"from_c", from}, {"to_c", to}, {"step_c", o.step}, {"points", points.size()}};
  j["mean_dominant_fraction"] = scan.mean_dominant_fraction;
  j["min_dominant_fraction"] = scan.min_dominant_fraction;
  j["max_dominant_fraction"] = scan.max_dominant_fraction;
  j["symmetric"] = cluster::to_json(scan.points[scan.symmetric_index]);
  j["balanced"] = cluster::to_json(scan.points[scan.balanced_index]);
  j["points"] = points;
  j["table_file"] = "temp_scan.csv";
  const auto path = dir / "temp_scan.json";
  write_json(path, j);
  ctx.announce(path);
  return kExitOk;
}

struct CoincidenceOpts {
  double bin = 50e-12;
  double span = 20e-9;
  std::optional<double> temp;
  std::optional<std::string> input;
};

int cmd_coincidence(Context& ctx, const CoincidenceOpts& o) {
  const auto& dev = ctx.device();
  const auto& cfg = ctx.cfg();
  const double t = o.temp.value_or(cfg.calibration_temperature_c);
  const auto spectrum = cluster::enumerate_modes(t, dev.device, enumeration(ctx, std::nullopt));
  const double jitter = photonstats::jitter_from_fwhm(cfg.jitter_fwhm_s);

  json conventions = json::object();
  std::vector<photonstats::CoincidenceProfile> profiles;
  for (const auto c : {config::RateConvention::SingleCavity, config::RateConvention::Joint}) {
    const auto [gs, gi] = config::decay_rates(dev, spectrum, c);
    photonstats::CoincidenceProfile p{gs, gi, jitter, 1.0, o.bin};
    const double fwhm = photonstats::profile_fwhm(p);
    conventions[config::to_string(c)] = {{"gamma_signal_per_s", gs},
                                         {"gamma_idler_per_s", gi},
                                         {"fwhm_s", fwhm},
                                         {"bandwidth_hz", photonstats::bandwidth_from_correlation(fwhm)}};
    profiles.push_back(p);
  }
  const auto dir = ctx.out_dir();
  {
    CsvWriter csv(dir / "coincidence_profile.csv", "tau_s,density_single_cavity_per_s,density_joint_per_s");
    const auto n = static_cast<std::size_t>(std::llround(o.span / o.bin)) + 1;
    for (double tau : numeric::linspace(-0.5 * o.span, 0.5 * o.span, n)) {
      csv.row(tau, photonstats::profile(tau, profiles[0]), photonstats::profile(tau, profiles[1]));
    }
  }
  std::optional<std::uint64_t> seed;
  json measured = nullptr;
  if (o.input) {
    const auto [tags, sidecar] = timetag_io::read_stream(*o.input);
    seed = sidecar.seed;
    const auto h = montecarlo::coincidence_histogram(tags, montecarlo::kSignalChannel, montecarlo::kIdlerChannel,
                                                     o.bin, o.span);
    CsvWriter csv(dir / "coincidence_histogram.csv", "tau_center_s,counts");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      csv.row(h.center_s(i), h.counts[i]);
      x.push_back(h.center_s(i));
      y.push_back(static_cast<double>(h.counts[i]));
    }
    measured = {{"stream", *o.input},
                {"stream_config_hash", sidecar.config_hash},
                {"total", h.total()},
                {"fwhm_s", h.total() > 0 ? json(numeric::sampled_fwhm(x, y)) : json(nullptr)},
                {"histogram_file", "coincidence_histogram.csv"}};
    try {
      measured["fitted_gamma_idler_per_s"] = montecarlo::fit_decay_rate(h, 1e-9, 5e-9);
      measured["fitted_gamma_signal_per_s"] = montecarlo::fit_decay_rate(h, -5e-9, -1e-9);
    } catch (const ComputationError&) {
      measured["fitted_gamma_idler_per_s"] = nullptr;
      measured["fitted_gamma_signal_per_s"] = nullptr;
    }
  }
  json j = ctx.header("coincidence", "coincidence", seed);
  j["temperature_c"] = t;
  j["jitter_rms_s"] = jitter;
  j["conventions"] = conventions;
  j["profile_file"] = "coincidence_profile.csv";
  j["measured"] = measured;
  const auto path = dir / "coincidence.json";
  write_json(path, j);
  ctx.announce(path);
  return kExitOk;
}

std::optional<montecarlo::BandpassFilter> make_filter(const config::DeviceConfig& cfg,
                                                      const cluster::ClusterSpectrum& spectrum, bool force) {
  if (!cfg.filter.enabled && !force) return std::nullopt;
  const double center = cfg.filter.center_signal_hz.value_or(spectrum.strongest_cluster().center_signal_hz);
  const double width = cluster::wavelength_interval_to_hz(cfg.filter.width_m, wavelength_from_frequency(center));
  return montecarlo::BandpassFilter{center, width};
}

struct G2Opts {
  std::optional<std::string> input;
  std::optional<double> window;
  std::optional<double> temp;
};

int cmd_g2(Context& ctx, const G2Opts& o) {
  const auto& dev = ctx.device();
  const auto& cfg = ctx.cfg();
  const double t = o.temp.value_or(cfg.calibration_temperature_c);
  const auto spectrum = cluster::enumerate_modes(t, dev.device, enumeration(ctx, std::nullopt));
  const auto filter = make_filter(cfg, spectrum, true);
  std::vector<double> passed;
  for (const auto& m : spectrum.modes) {
    if (filter->passes(m.signal_hz)) passed.push_back(m.weight);
  }
  const double k_all = cluster::effective_mode_number(spectrum.weights());
  const double k_filtered = cluster::effective_mode_number(passed);
  json analytic = {{"k_filtered", k_filtered},
                   {"g2_filtered", photonstats::g2_zero(k_filtered)},
                   {"k_unfiltered", k_all},
                   {"g2_unfiltered", photonstats::g2_zero(k_all)},
                   {"filter_center_hz", filter->center_hz},
                   {"filter_width_hz", filter->width_hz}};
  std::optional<std::uint64_t> seed;
  json measured = nullptr;
  if (o.input) {
    const auto [tags, sidecar] = timetag_io::read_stream(*o.input);
    seed = sidecar.seed;
    const double window = o.window.value_or(sidecar.timing.pulse_length_s + 20e-9);
    measured = montecarlo::g2_hbt(tags, sidecar.timing, window).to_json();
    measured["window_s"] = window;
    measured["stream"] = *o.input;
    measured["stream_config_hash"] = sidecar.config_hash;
  }
  json j = ctx.header("g2", "g2", seed);
  j["temperature_c"] = t;
  j["analytic"] = analytic;
  j["measured"] = measured;
  const auto path = ctx.out_dir() / "g2.json";
  write_json(path, j);
  ctx.announce(path);
  return kExitOk;
}

struct SimulateOpts {
  std::uint64_t seed = 1;
  double run_length = 1.0;
  std::optional<double> temp;
  std::string format = "csv";
  std::optional<std::string> output;
  bool split = false;
  bool filter = false;
  std::optional<std::string> statistics;
  std::optional<double> power;
};

int cmd_simulate(Context& ctx, const SimulateOpts& o) {
  const auto& dev = ctx.device();
  const auto& cfg = ctx.cfg();
  const double t = o.temp.value_or(cfg.calibration_temperature_c);
  const auto spectrum = cluster::enumerate_modes(t, dev.device, enumeration(ctx, std::nullopt));
  const auto [gs, gi] = config::decay_rates(dev, spectrum, cfg.rate_convention);

  montecarlo::SimulationConfig sim;
  sim.run_length_s = o.run_length;
  sim.pulses = config::pulse_train(cfg, dev);
  if (o.power) sim.pulses.pump_power_mw = *o.power;
  sim.gamma_signal = gs;
  sim.gamma_idler = gi;
  sim.signal_detector = cfg.signal_detector;
  sim.idler_detector = cfg.idler_detector;
  sim.filter = make_filter(cfg, spectrum, o.filter);
  sim.filter_arm = cfg.filter.arm;
  sim.statistics = o.statistics ? montecarlo::pair_statistics_from_string(*o.statistics) : cfg.statistics;
  sim.split_signal = o.split;
  sim.lead_in_s = cfg.lead_in_s;
  sim.seed = o.seed;
  sim.threads = ctx.threads().value_or(0);
  const auto result = montecarlo::simulate(sim, spectrum);

  const auto format = timetag_io::format_from_string(o.format);
  const auto dir = ctx.out_dir();
  const fs::path stream = dir / o.output.value_or(format == timetag_io::Format::Binary ? "timetags.bin" : "timetags.csv");
  timetag_io::write_timetags(stream, result.tags, format);

  timetag_io::Sidecar side;
  side.format = format;
  side.seed = o.seed;
  side.config_hash = ctx.hash();
  if (o.split) {
    side.channel_map = {{1, "idler"}, {2, "signal-split-a"}, {3, "signal-split-b"}};
  } else {
    side.channel_map = {{0, "signal"}, {1, "idler"}};
  }
  side.timing = {sim.pulses.pulse_length_s, sim.pulses.repetition_hz, sim.lead_in_s, result.truth.pulses};
  side.ground_truth = {{"pulses", result.truth.pulses},
                       {"pairs", result.truth.pairs},
                       {"mean_pairs_per_pulse", result.truth.mean_pairs_per_pulse},
                       {"pair_rate_per_s", result.truth.pair_rate_per_s},
                       {"effective_mode_number", result.truth.effective_mode_number},
                       {"efficiency_signal", sim.signal_detector.efficiency},
                       {"efficiency_idler", sim.idler_detector.efficiency},
                       {"gamma_signal_per_s", gs},
                       {"gamma_idler_per_s", gi},
                       {"statistics", montecarlo::to_string(sim.statistics)},
                       {"filter", sim.filter ? json{{"center_hz", sim.filter->center_hz}, {"width_hz", sim.filter->width_hz},
                                                    {"arm", montecarlo::to_string(sim.filter_arm)}}
                                             : json(nullptr)},
                       {"temperature_c", t},
                       {"tags", result.tags.size()}};
  timetag_io::write_sidecar(stream, side);
  ctx.header("timetag-sidecar", "simulate", o.seed);  // refreshes config.resolved.json
  ctx.announce(stream);
  return kExitOk;
}

struct AnalyzeOpts {
  std::optional<std::string> input;
  double window = 12e-9;
  double side_offset = 60e-9;
  std::size_t blocks = 50;
  double bin = 50e-12;
  double span = 20e-9;
};

int cmd_analyze(const Common& common, const AnalyzeOpts& o, std::istream& in, std::ostream& out) {
  std::string input;
  if (o.input) {
    input = *o.input;
  } else if (!std::getline(in, input) || input.empty()) {
    throw ConfigError("analyze needs --input or a stream path on standard input");
  }
  const auto [tags, side] = timetag_io::read_stream(input);
  json j = {{"schema", std::string(kSchemaPrefix) + "analyze/v1"},
            {"command", "analyze"},
            {"config_hash", side.config_hash},
            {"seed", side.seed},
            {"stream", input}};

  const bool has_pair = side.channel_map.count(0) && side.channel_map.count(1);
  const bool has_split = side.channel_map.count(2) && side.channel_map.count(3);
  const fs::path dir(common.out_dir);
  fs::create_directories(dir);
  if (has_pair) {
    montecarlo::AnalysisOptions opts;
    opts.window_s = o.window;
    opts.side_offset_s = o.side_offset;
    opts.blocks = o.blocks;
    const auto a = montecarlo::analyze_rates(tags, side.timing, opts);
    j["rates"] = a.to_json();
    if (side.ground_truth.contains("pair_rate_per_s")) {
      const double truth = side.ground_truth["pair_rate_per_s"].get<double>();
      j["injected_pair_rate_per_s"] = truth;
      j["pair_rate_z"] = a.pair_rate_se > 0.0 ? (a.report.pair_rate - truth) / a.pair_rate_se : 0.0;
    }
    const auto h = montecarlo::coincidence_histogram(tags, montecarlo::kSignalChannel, montecarlo::kIdlerChannel,
                                                     o.bin, o.span);
    CsvWriter csv(dir / "analyze_histogram.csv", "tau_center_s,counts");
    for (std::size_t i = 0; i < h.counts.size(); ++i) csv.row(h.center_s(i), h.counts[i]);
    j["histogram_file"] = "analyze_histogram.csv";
    j["histogram_total"] = h.total();
  } else {
    j["rates"] = nullptr;
  }
  if (has_split) {
    j["g2"] = montecarlo::g2_hbt(tags, side.timing, side.timing.pulse_length_s + 20e-9).to_json();
  } else {
    j["g2"] = nullptr;
  }
  const auto path = dir / "analyze.json";
  write_json(path, j);
  out << path.string() << '\n';
  return kExitOk;
}

struct MirrorOpts {
  std::string stack;
  std::vector<double> wavelengths_nm;
  double from_nm = 400.0;
  double to_nm = 1600.0;
  double step_nm = 1.0;
};

int cmd_mirror(const Common& common, const MirrorOpts& o, std::ostream& out) {
  std::ifstream in(o.stack);
  if (!in) throw ConfigError("cannot open stack file " + o.stack);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto stack = mirrors::LayerStack::load(o.stack);
  const fs::path dir(common.out_dir);
  fs::create_directories(dir);

  json points = json::array();
  for (double nm : o.wavelengths_nm) {
    points.push_back({{"wavelength_nm", nm}, {"reflectivity", mirrors::stack_reflectivity(stack, nm * 1e-9)}});
  }
  const auto grid = numeric::arange(o.from_nm, o.to_nm, o.step_nm);
  double rmin = 1.0, rmax = 0.0;
  {
    CsvWriter csv(dir / "mirror_curve.csv", "wavelength_nm,reflectivity");
    for (double nm : grid) {
      const double r = mirrors::stack_reflectivity(stack, nm * 1e-9);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      csv.row(nm, r);
    }
  }
  json j = {{"schema", std::string(kSchemaPrefix) + "mirror/v1"},
            {"command", "mirror"},
            {"config_hash", config::sha256_hex(ss.str())},
            {"seed", nullptr},
            {"stack", stack.to_json()},
            {"layer_count", stack.layers.size()},
            {"points", points},
            {"curve", {{"file", "mirror_curve.csv"}, {"from_nm", o.from_nm}, {"to_nm", o.to_nm}, {"step_nm", o.step_nm},
                       {"min_reflectivity", rmin}, {"max_reflectivity", rmax}}}};
  const auto path = dir / "mirror.json";
  write_json(path, j);
  out << path.string() << '\n';
  return kExitOk;
}

struct DesignOpts {
  std::optional<double> finesse_min;
  std::optional<double> rear_min, rear_max, length_min, length_max;
  std::optional<int> rear_steps, length_steps;
  bool lossless = false;
};

int cmd_design_scan(Context& ctx, const DesignOpts& o) {
  const auto& cfg = ctx.cfg();
  const auto& dev = ctx.device();
  auto grid = cfg.design_scan;
  if (o.finesse_min) grid.finesse_min = *o.finesse_min;
  if (o.rear_min) grid.rear_min = *o.rear_min;
  if (o.rear_max) grid.rear_max = *o.rear_max;
  if (o.length_min) grid.length_min_m = *o.length_min;
  if (o.length_max) grid.length_max_m = *o.length_max;
  if (o.rear_steps) grid.rear_steps = *o.rear_steps;
  if (o.length_steps) grid.length_steps = *o.length_steps;

  auto base = dev.device;
  if (o.lossless) base.signal.loss_per_m = base.idler.loss_per_m = 0.0;
  const auto spectrum = cluster::enumerate_modes(cfg.calibration_temperature_c, dev.device, enumeration(ctx, std::nullopt));
  const design::ScanInputs inputs{cfg.pair_rate_per_s_per_mw, cluster::dominant_mode_fraction(spectrum)};
  const auto points = design::scan(base, grid, inputs);

  cluster::Device reference = base;
  const auto reference_point = design::scan(
      reference, {dev.device.signal.mirrors.rear, dev.device.signal.mirrors.rear, 1, cfg.length_m, cfg.length_m, 1, grid.finesse_min},
      inputs);

  const auto dir = ctx.out_dir();
  CsvWriter csv(dir / "design_scan.csv",
                "mirror_rear,length_m,finesse_signal,finesse_idler,linewidth_signal_hz,linewidth_idler_hz,"
                "joint_linewidth_hz,escape_signal,escape_idler,pair_escape,brightness_pairs_per_s_mw_mhz,feasible,pareto");
  json pareto = json::array();
  std::size_t feasible = 0;
  for (const auto& p : points) {
    csv.row(p.mirror_rear, p.length_m, p.finesse_signal, p.finesse_idler, p.linewidth_signal_hz, p.linewidth_idler_hz,
            p.joint_linewidth_hz, p.escape_signal, p.escape_idler, p.pair_escape, p.brightness,
            static_cast<int>(p.feasible), static_cast<int>(p.pareto));
    feasible += p.feasible ? 1 : 0;
    if (p.pareto) pareto.push_back(p.to_json());
  }
  json j = ctx.header("design-scan", "design-scan");
  j["grid"] = {{"rear_min", grid.rear_min},         {"rear_max", grid.rear_max},
               {"rear_steps", grid.rear_steps},     {"length_min_m", grid.length_min_m},
               {"length_max_m", grid.length_max_m}, {"length_steps", grid.length_steps},
               {"finesse_min", grid.finesse_min},   {"lossless", o.lossless}};
  j["dominant_fraction"] = inputs.dominant_fraction;
  j["points"] = points.size();
  j["feasible"] = feasible;
  j["pareto"] = pareto;
  j["reference_point"] = reference_point.front().to_json();
  j["table_file"] = "design_scan.csv";
  const auto path = dir / "design_scan.json";
  write_json(path, j);
  ctx.announce(path);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cluster-mode photon-pair source toolkit", "clusterpdc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");
  Common common;
  app.add_option("-c,--config", common.config, std::string("Device TOML (default: $") + config::kConfigEnvVar + ")");
  app.add_option("-o,--out-dir", common.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads for simulation (0: all cores)");

  CalibrateOpts cal;
  auto* c_cal = app.add_subcommand("calibrate", "Fit the waveguide correction to the calibration targets");
  c_cal->add_option("--mode", cal.mode, "phase-only or fit-fsr (overrides config)")
      ->check(CLI::IsMember({"phase-only", "fit-fsr"}));

  SpectrumOpts spec;
  auto* c_spec = app.add_subcommand("spectrum", "Joint spectrum grid and cluster table at one temperature");
  c_spec->add_option("--temp", spec.temp, "Temperature, C");
  c_spec->add_option("--span", spec.span, "Grid span, Hz")->capture_default_str();
  c_spec->add_option("--res", spec.res, "Grid resolution, Hz")->capture_default_str();
  c_spec->add_option("--center", spec.center, "Grid center, Hz (default: envelope center)");
  c_spec->add_option("--threshold", spec.threshold, "Relative mode threshold");

  SpectrumOpts clus;
  clus.grid = false;
  auto* c_clus = app.add_subcommand("clusters", "Mode and cluster table at one temperature");
  c_clus->add_option("--temp", clus.temp, "Temperature, C");
  c_clus->add_option("--threshold", clus.threshold, "Relative mode threshold");

  ScanOpts scan;
  auto* c_scan = app.add_subcommand("temp-scan", "Cluster metrics over a temperature range");
  c_scan->add_option("--from", scan.from, "First temperature, C (default T_cal - 50 mK)");
  c_scan->add_option("--to", scan.to, "Last temperature, C (default T_cal + 50 mK)");
  c_scan->add_option("--step", scan.step, "Step, K")->capture_default_str();
  c_scan->add_option("--threshold", scan.threshold, "Relative mode threshold");

  CoincidenceOpts coin;
  auto* c_coin = app.add_subcommand("coincidence", "Analytic coincidence profiles, optionally against a stream");
  c_coin->add_option("--bin", coin.bin, "Bin width, s")->capture_default_str();
  c_coin->add_option("--span", coin.span, "Delay span, s")->capture_default_str();
  c_coin->add_option("--temp", coin.temp, "Temperature, C");
  c_coin->add_option("--input", coin.input, "Timetag stream to histogram");

  G2Opts g2;
  auto* c_g2 = app.add_subcommand("g2", "g2(0) from mode content, optionally HBT estimate from a split stream");
  c_g2->add_option("--input", g2.input, "Timetag stream simulated with --split");
  c_g2->add_option("--window", g2.window, "Per-pulse counting window, s");
  c_g2->add_option("--temp", g2.temp, "Temperature, C");

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte-Carlo timetag stream");
  c_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  c_sim->add_option("--run-length", sim.run_length, "Run length, s")->capture_default_str();
  c_sim->add_option("--temp", sim.temp, "Temperature, C");
  c_sim->add_option("--format", sim.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}))->capture_default_str();
  c_sim->add_option("--output", sim.output, "Stream file name inside the output directory");
  c_sim->add_flag("--split", sim.split, "Split the signal arm 50:50 onto channels 2 and 3");
  c_sim->add_flag("--filter", sim.filter, "Enable the bandpass filter even if the config disables it");
  c_sim->add_option("--statistics", sim.statistics, "thermal or poisson")->check(CLI::IsMember({"thermal", "poisson"}));
  c_sim->add_option("--power", sim.power, "Pump power, mW");

  AnalyzeOpts ana;
  auto* c_ana = app.add_subcommand("analyze", "Klyshko rates, histogram and g2 from a timetag stream");
  c_ana->add_option("--input", ana.input, "Timetag stream (default: path read from stdin)");
  c_ana->add_option("--window", ana.window, "Coincidence window, s")->capture_default_str();
  c_ana->add_option("--side-offset", ana.side_offset, "Accidental window offset, s")->capture_default_str();
  c_ana->add_option("--blocks", ana.blocks, "Jackknife blocks")->capture_default_str();
  c_ana->add_option("--bin", ana.bin, "Histogram bin, s")->capture_default_str();
  c_ana->add_option("--span", ana.span, "Histogram span, s")->capture_default_str();

  MirrorOpts mir;
  auto* c_mir = app.add_subcommand("mirror", "Reflectivity of a layer stack");
  c_mir->add_option("--stack", mir.stack, "Stack JSON file")->required();
  c_mir->add_option("--wavelength", mir.wavelengths_nm, "Wavelength(s) to report, nm");
  c_mir->add_option("--from-nm", mir.from_nm, "Curve start, nm")->capture_default_str();
  c_mir->add_option("--to-nm", mir.to_nm, "Curve end, nm")->capture_default_str();
  c_mir->add_option("--step-nm", mir.step_nm, "Curve step, nm")->capture_default_str();

  DesignOpts des;
  auto* c_des = app.add_subcommand("design-scan", "Finesse/escape/brightness over rear mirror and length");
  c_des->add_option("--finesse-min", des.finesse_min, "Feasibility bound on both finesses");
  c_des->add_option("--rear-min", des.rear_min, "Lowest rear mirror reflectivity");
  c_des->add_option("--rear-max", des.rear_max, "Highest rear mirror reflectivity");
  c_des->add_option("--rear-steps", des.rear_steps, "Rear reflectivity grid points");
  c_des->add_option("--length-min", des.length_min, "Shortest length, m");
  c_des->add_option("--length-max", des.length_max, "Longest length, m");
  c_des->add_option("--length-steps", des.length_steps, "Length grid points");
  c_des->add_flag("--lossless", des.lossless, "Set intracavity loss to zero");

  std::vector<std::string> argv_store{"clusterpdc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx(common, out);
    if (*c_cal) return cmd_calibrate(ctx, cal);
    if (*c_spec) return cmd_spectrum(ctx, spec, "spectrum");
    if (*c_clus) return cmd_spectrum(ctx, clus, "clusters");
    if (*c_scan) return cmd_temp_scan(ctx, scan);
    if (*c_coin) return cmd_coincidence(ctx, coin);
    if (*c_g2) return cmd_g2(ctx, g2);
    if (*c_sim) return cmd_simulate(ctx, sim);
    if (*c_ana) return cmd_analyze(common, ana, in, out);
    if (*c_mir) return cmd_mirror(common, mir, out);
    if (*c_des) return cmd_design_scan(ctx, des);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitUsage;
}

}  // namespace clusterpdc::cli
