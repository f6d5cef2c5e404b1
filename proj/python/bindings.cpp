#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clusterpdc/cli.hpp"
#include "clusterpdc/cluster.hpp"
#include "clusterpdc/config.hpp"
#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"
#include "clusterpdc/mirrors.hpp"
#include "clusterpdc/montecarlo.hpp"
#include "clusterpdc/photonstats.hpp"

namespace py = pybind11;
using namespace clusterpdc;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
std::string dump(const nlohmann::json& j) { return j.dump(); }

class Session {
 public:
  explicit Session(const std::string& path)
      : config_(config::DeviceConfig::load(path)), resolved_(config::resolve(config_)) {}

  [[nodiscard]] std::string config_hash() const { return config::config_hash(config_); }
  [[nodiscard]] double calibration_temperature() const { return config_.calibration_temperature_c; }
  [[nodiscard]] std::string resolved_json() const { return dump(resolved_.to_json()); }

  [[nodiscard]] cluster::ClusterSpectrum spectrum(std::optional<double> t, std::optional<double> threshold) const {
    cluster::EnumerationOptions opts;
    opts.threshold = threshold.value_or(config_.threshold);
    return cluster::enumerate_modes(t.value_or(config_.calibration_temperature_c), resolved_.device, opts);
  }

  [[nodiscard]] std::string modes_json(std::optional<double> t, std::optional<double> threshold) const {
    const auto s = spectrum(t, threshold);
    auto j = cluster::to_json(s);
    j["summary"] = cluster::to_json(cluster::summarize(s));
    return dump(j);
  }

  [[nodiscard]] std::string scan_json(const std::vector<double>& temperatures) const {
    cluster::EnumerationOptions opts;
    opts.threshold = config_.threshold;
    const auto scan = cluster::scan_temperature(resolved_.device, temperatures, opts);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : scan.points) points.push_back(cluster::to_json(p));
    return dump({{"points", points},
                 {"mean_dominant_fraction", scan.mean_dominant_fraction},
                 {"min_dominant_fraction", scan.min_dominant_fraction},
                 {"max_dominant_fraction", scan.max_dominant_fraction},
                 {"symmetric_index", scan.symmetric_index},
                 {"balanced_index", scan.balanced_index}});
  }

  [[nodiscard]] double joint_density(double signal_hz, std::optional<double> t) const {
    return cluster::joint_density(signal_hz, t.value_or(config_.calibration_temperature_c), resolved_.device);
  }

  py::tuple simulate(double run_length_s, std::uint64_t seed, bool split, bool filter, std::optional<double> t,
                     std::optional<std::string> statistics) const {
    const auto s = spectrum(t, std::nullopt);
    const auto [gs, gi] = config::decay_rates(resolved_, s, config_.rate_convention);
    montecarlo::SimulationConfig sim;
    sim.run_length_s = run_length_s;
    sim.pulses = config::pulse_train(config_, resolved_);
    sim.gamma_signal = gs;
    sim.gamma_idler = gi;
    sim.signal_detector = config_.signal_detector;
    sim.idler_detector = config_.idler_detector;
    if (filter || config_.filter.enabled) {
      const double center = config_.filter.center_signal_hz.value_or(s.strongest_cluster().center_signal_hz);
      sim.filter = montecarlo::BandpassFilter{
          center, cluster::wavelength_interval_to_hz(config_.filter.width_m, wavelength_from_frequency(center))};
      sim.filter_arm = config_.filter.arm;
    }
    sim.statistics = statistics ? montecarlo::pair_statistics_from_string(*statistics) : config_.statistics;
    sim.split_signal = split;
    sim.lead_in_s = config_.lead_in_s;
    sim.seed = seed;
    montecarlo::SimulationResult result;
    {
      py::gil_scoped_release release;
      result = montecarlo::simulate(sim, s);
    }
    std::vector<std::uint8_t> ch;
    std::vector<std::uint64_t> ps;
    ch.reserve(result.tags.size());
    ps.reserve(result.tags.size());
    for (const auto& tag : result.tags) {
      ch.push_back(tag.channel);
      ps.push_back(tag.time_ps);
    }
    const auto n = static_cast<py::ssize_t>(result.tags.size());
    py::array_t<std::uint8_t> channels(std::vector<py::ssize_t>{n}, ch.data());
    py::array_t<std::uint64_t> times(std::vector<py::ssize_t>{n}, ps.data());
    const montecarlo::PulseTiming timing{sim.pulses.pulse_length_s, sim.pulses.repetition_hz, sim.lead_in_s,
                                         result.truth.pulses};
    const nlohmann::json truth = {{"pulses", result.truth.pulses},
                                  {"pairs", result.truth.pairs},
                                  {"mean_pairs_per_pulse", result.truth.mean_pairs_per_pulse},
                                  {"pair_rate_per_s", result.truth.pair_rate_per_s},
                                  {"effective_mode_number", result.truth.effective_mode_number},
                                  {"timing", timing.to_json()},
                                  {"seed", seed},
                                  {"config_hash", config_hash()}};
    return py::make_tuple(channels, times, dump(truth));
  }

 private:
  config::DeviceConfig config_;
  config::ResolvedDevice resolved_;
};

std::vector<montecarlo::TimetagRecord> records(const py::array_t<std::uint8_t>& channels,
                                               const py::array_t<std::uint64_t>& times) {
  if (channels.ndim() != 1 || times.ndim() != 1 || channels.shape(0) != times.shape(0)) {
    throw DomainError("channel and time arrays must be one-dimensional and of equal length");
  }
  const auto c = channels.unchecked<1>();
  const auto t = times.unchecked<1>();
  std::vector<montecarlo::TimetagRecord> out(static_cast<std::size_t>(channels.shape(0)));
  for (py::ssize_t k = 0; k < channels.shape(0); ++k) out[static_cast<std::size_t>(k)] = {c(k), t(k)};
  return out;
}

std::string analyze(const py::array_t<std::uint8_t>& channels, const py::array_t<std::uint64_t>& times,
                    const std::string& timing_json) {
  const auto tags = records(channels, times);
  const auto timing = montecarlo::PulseTiming::from_json(nlohmann::json::parse(timing_json));
  return dump(montecarlo::analyze_rates(tags, timing).to_json());
}

std::string g2_hbt(const py::array_t<std::uint8_t>& channels, const py::array_t<std::uint64_t>& times,
                   const std::string& timing_json, double window_s) {
  const auto tags = records(channels, times);
  const auto timing = montecarlo::PulseTiming::from_json(nlohmann::json::parse(timing_json));
  return dump(montecarlo::g2_hbt(tags, timing, window_s).to_json());
}

py::tuple run_cli(const std::vector<std::string>& args, const std::string& stdin_text) {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(args, in, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cluster-mode photon-pair source toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ComputationError>(m, "ComputationError", PyExc_RuntimeError);

  py::class_<Session>(m, "Session")
      .def(py::init<const std::string&>(), py::arg("config_path"))
      .def_property_readonly("config_hash", &Session::config_hash)
      .def_property_readonly("calibration_temperature", &Session::calibration_temperature)
      .def("_resolved", &Session::resolved_json)
      .def("_modes", &Session::modes_json, py::arg("temperature") = py::none(), py::arg("threshold") = py::none())
      .def("_scan", &Session::scan_json, py::arg("temperatures"))
      .def("joint_density", &Session::joint_density, py::arg("signal_hz"), py::arg("temperature") = py::none())
      .def("_simulate", &Session::simulate, py::arg("run_length_s"), py::arg("seed"), py::arg("split") = false,
           py::arg("filter") = false, py::arg("temperature") = py::none(), py::arg("statistics") = py::none());

  m.def("_analyze", &analyze, py::arg("channels"), py::arg("times"), py::arg("timing"));
  m.def("_g2_hbt", &g2_hbt, py::arg("channels"), py::arg("times"), py::arg("timing"), py::arg("window_s"));
  m.def("run_cli", &run_cli, py::arg("args"), py::arg("stdin") = "");

  m.def("g2_zero", &photonstats::g2_zero, py::arg("effective_mode_number"));
  m.def("bandwidth_from_correlation", &photonstats::bandwidth_from_correlation, py::arg("tau_fwhm_s"));
  m.def("effective_mode_number", [](const std::vector<double>& w) { return cluster::effective_mode_number(w); },
        py::arg("weights"));
  m.def("vernier_spacing", &cluster::vernier_spacing, py::arg("fsr_a_hz"), py::arg("fsr_b_hz"));
  m.def("brightness",
        py::overload_cast<double, double, double, double>(&cluster::brightness), py::arg("pair_rate_per_s_per_mw"),
        py::arg("dominant_fraction"), py::arg("pair_escape"), py::arg("mode_bandwidth_hz"));
  m.def(
      "coincidence_profile",
      [](const std::vector<double>& tau_s, double gamma_signal, double gamma_idler, double jitter_s) {
        return photonstats::profile(tau_s, photonstats::CoincidenceProfile{gamma_signal, gamma_idler, jitter_s, 1.0, 0.0});
      },
      py::arg("tau_s"), py::arg("gamma_signal"), py::arg("gamma_idler"), py::arg("jitter_s"));
  m.def(
      "stack_reflectivity",
      [](const std::string& stack_path, const std::vector<double>& wavelengths_m) {
        return mirrors::stack_spectrum(mirrors::LayerStack::load(stack_path), wavelengths_m);
      },
      py::arg("stack_path"), py::arg("wavelengths_m"));
  m.def(
      "quarter_wave_reflectivity",
      [](double n_high, double n_low, int layers, double design_m, double incident, double substrate, double wavelength_m) {
        return mirrors::stack_reflectivity(mirrors::quarter_wave_stack(n_high, n_low, layers, design_m, incident, substrate),
                                           wavelength_m);
      },
      py::arg("n_high"), py::arg("n_low"), py::arg("layers"), py::arg("design_m"), py::arg("incident_index"),
      py::arg("substrate_index"), py::arg("wavelength_m"));

  m.attr("DATA_DIR") = CLUSTERPDC_DATA_DIR;
  m.attr("CONFIG_ENV_VAR") = config::kConfigEnvVar;
}
