#include "clusterpdc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "clusterpdc/constants.hpp"
#include "clusterpdc/error.hpp"
#include "clusterpdc/numeric.hpp"

namespace clusterpdc::cluster {

using dispersion::Wave;
using numeric::linspace;
using numeric::trapezoid;

namespace {

constexpr double kTemperatureRangeK = 2.0;
constexpr double kCenterScanStepHz = 20e9;
constexpr double kCenterScanSpanHz = 5e12;

}  // namespace

cavity::CavityState Device::cavity_state(Wave wave, double temperature_c) const {
  const bool is_signal = wave == Wave::Signal;
  if (!is_signal && wave != Wave::Idler) throw DomainError("the pump is not resonant");
  const CavityArm& arm = is_signal ? signal : idler;
  const double lambda = is_signal ? design.signal_m() : design.idler_m();
  const double nu = is_signal ? design.signal_hz() : design.idler_hz();
  const double t_cal = design.temperature_c();

  cavity::CavityState state;
  state.length_m = model.expanded_length(length_m, temperature_c);
  state.loss_per_m = arm.loss_per_m;
  state.mirrors = arm.mirrors;
  state.phase_index = model.refractive_index(wave, lambda, temperature_c);
  state.group_index = model.group_index(wave, lambda, temperature_c);
  state.reference_frequency_hz = nu;
  // Round-trip phase relative to calibration, where a resonance sits on nu.
  const double opl_now = model.optical_path_length(wave, length_m, lambda, temperature_c);
  const double opl_cal = model.optical_path_length(wave, length_m, lambda, t_cal);
  state.phase_offset_rad = 2.0 * kTwoPi * nu / kSpeedOfLight * (opl_now - opl_cal) + arm.extra_phase_rad;
  return state;
}

Device Device::without_mirrors() const {
  Device bare = *this;
  bare.signal.mirrors = {0.0, 0.0};
  bare.idler.mirrors = {0.0, 0.0};
  bare.signal.loss_per_m = 0.0;
  bare.idler.loss_per_m = 0.0;
  return bare;
}

JointDensity::JointDensity(const Device& device, double temperature_c)
    : device_(&device),
      temperature_c_(temperature_c),
      pump_hz_(device.pump_hz()),
      pump_beta_(kTwoPi * device.model.refractive_index(Wave::Pump, device.design.pump_m(), temperature_c) /
                 device.design.pump_m()),
      signal_(device.cavity_state(Wave::Signal, temperature_c)),
      idler_(device.cavity_state(Wave::Idler, temperature_c)) {
  signal_.validate();
  idler_.validate();
}

double JointDensity::mismatch(double signal_hz) const {
  const double idler_hz = pump_hz_ - signal_hz;
  if (!(signal_hz > 0.0 && idler_hz > 0.0)) throw DomainError("signal frequency outside (0, pump)");
  const auto& m = device_->model;
  const double ls = wavelength_from_frequency(signal_hz);
  const double li = wavelength_from_frequency(idler_hz);
  return pump_beta_ - kTwoPi * m.refractive_index(Wave::Signal, ls, temperature_c_) / ls -
         kTwoPi * m.refractive_index(Wave::Idler, li, temperature_c_) / li - device_->poling.grating_vector() +
         m.correction().residual_mismatch_per_m;
}

double JointDensity::envelope(double signal_hz) const {
  return qpm::envelope_from_mismatch(mismatch(signal_hz), device_->length_m);
}

double JointDensity::signal_airy(double signal_hz) const { return cavity::airy(signal_hz, signal_); }

double JointDensity::idler_airy(double signal_hz) const { return cavity::airy(pump_hz_ - signal_hz, idler_); }

double JointDensity::operator()(double signal_hz) const {
  return envelope(signal_hz) * signal_airy(signal_hz) * idler_airy(signal_hz);
}

double JointDensity::solve_mismatch(double target, double start_hz, double direction) const {
  // Walks from start_hz until mismatch - target changes sign, then bisects.
  const auto f = [&](double nu) { return mismatch(nu) - target; };
  double a = start_hz;
  double fa = f(a);
  if (fa == 0.0) return a;
  for (double walked = 0.0; walked < kCenterScanSpanHz; walked += kCenterScanStepHz) {
    const double b = a + direction * kCenterScanStepHz;
    const double fb = f(b);
    if (fa * fb <= 0.0) {
      boost::math::tools::eps_tolerance<double> tol(44);
      const auto r = boost::math::tools::bisect(f, std::min(a, b), std::max(a, b), tol);
      return 0.5 * (r.first + r.second);
    }
    a = b;
    fa = fb;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double JointDensity::envelope_center_hz() const {
  const double start = device_->design.signal_hz();
  const double up = solve_mismatch(0.0, start, +1.0);
  const double down = solve_mismatch(0.0, start, -1.0);
  if (std::isnan(up) && std::isnan(down)) {
    throw ComputationError("no phase-matched point within 5 THz of the design signal at " +
                           std::to_string(temperature_c_) + " C");
  }
  if (std::isnan(up)) return down;
  if (std::isnan(down)) return up;
  return std::abs(up - start) <= std::abs(down - start) ? up : down;
}

std::pair<double, double> JointDensity::main_lobe() const {
  const double center = envelope_center_hz();
  const double null = kTwoPi / device_->length_m;
  const double slope = mismatch(center + 1e9) - mismatch(center - 1e9);
  // The mismatch is monotonic across the lobe; pick the null target per side.
  const double target_up = slope > 0.0 ? null : -null;
  const double hi = solve_mismatch(target_up, center, +1.0);
  const double lo = solve_mismatch(-target_up, center, -1.0);
  if (std::isnan(hi) || std::isnan(lo)) throw ComputationError("envelope nulls not found");
  return {lo, hi};
}

double joint_density(double signal_hz, double temperature_c, const Device& device) {
  return JointDensity(device, temperature_c)(signal_hz);
}

// ---------------------------------------------------------------------------

std::vector<double> ClusterSpectrum::weights() const {
  std::vector<double> w;
  w.reserve(modes.size());
  for (const auto& m : modes) w.push_back(m.weight);
  return w;
}

std::vector<double> ClusterSpectrum::cluster_weights(int cluster_id) const {
  std::vector<double> w;
  for (const auto& m : modes) {
    if (m.cluster_id == cluster_id) w.push_back(m.weight);
  }
  return w;
}

const ClusterSummary& ClusterSpectrum::strongest_cluster() const {
  if (clusters.empty()) throw ComputationError("spectrum has no clusters");
  return *std::max_element(clusters.begin(), clusters.end(),
                           [](const auto& a, const auto& b) { return a.weight < b.weight; });
}

const ModeEntry& ClusterSpectrum::dominant_mode() const {
  if (modes.empty()) throw ComputationError("spectrum has no modes");
  return *std::max_element(modes.begin(), modes.end(), [](const auto& a, const auto& b) { return a.weight < b.weight; });
}

namespace {

struct Peak {
  double x;
  double value;
};

Peak climb(const JointDensity& s, double start, double step, double limit) {
  double x = start;
  double fx = s(x);
  const double up = s(x + step);
  const double down = s(x - step);
  double dir = 0.0;
  if (up > fx && up >= down) dir = 1.0;
  if (down > fx && down > up) dir = -1.0;
  if (dir != 0.0) {
    for (;;) {
      const double nx = x + dir * step;
      if (std::abs(nx - start) > limit) break;
      const double fn = s(nx);
      if (!(fn > fx)) break;
      x = nx;
      fx = fn;
    }
  }
  const auto r = boost::math::tools::brent_find_minima([&](double v) { return -s(v); }, x - step, x + step, 40);
  if (-r.second > fx) return {r.first, -r.second};
  return {x, fx};
}

double half_width(const JointDensity& s, double x0, double half, double step, double limit, double dir) {
  double inside = x0;
  for (double d = step; d <= limit; d += step) {
    const double x = x0 + dir * d;
    if (s(x) < half) {
      boost::math::tools::eps_tolerance<double> tol(30);
      const auto g = [&](double v) { return s(v) - half; };
      const auto r = boost::math::tools::bisect(g, std::min(inside, x), std::max(inside, x), tol);
      return std::abs(0.5 * (r.first + r.second) - x0);
    }
    inside = x;
  }
  return limit;
}

void assign_clusters(ClusterSpectrum& out) {
  auto& modes = out.modes;
  if (modes.empty()) return;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < modes.size(); ++i) gaps.push_back(modes[i].signal_hz - modes[i - 1].signal_hz);
  double cut = std::numeric_limits<double>::infinity();
  if (!gaps.empty()) {
    std::vector<double> sorted = gaps;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    cut = 5.0 * sorted[sorted.size() / 2];
  }
  int id = 0;
  modes[0].cluster_id = 0;
  for (std::size_t i = 1; i < modes.size(); ++i) {
    if (gaps[i - 1] > cut) ++id;
    modes[i].cluster_id = id;
  }
  out.clusters.assign(static_cast<std::size_t>(id + 1), {});
  for (int k = 0; k <= id; ++k) out.clusters[k].id = k;
  for (const auto& m : modes) {
    auto& c = out.clusters[m.cluster_id];
    c.weight += m.weight;
    c.center_signal_hz += m.weight * m.signal_hz;
    ++c.mode_count;
  }
  for (auto& c : out.clusters) c.center_signal_hz /= c.weight;
}

}  // namespace

ClusterSpectrum enumerate_modes(double temperature_c, const Device& device, const EnumerationOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) throw DomainError("threshold must lie in (0, 1)");
  const JointDensity s(device, temperature_c);
  const auto& sig = s.signal_cavity();
  const auto& idl = s.idler_cavity();

  ClusterSpectrum out;
  out.temperature_c = temperature_c;
  out.pump_hz = s.pump_hz();
  out.threshold = options.threshold;
  out.envelope_center_hz = s.envelope_center_hz();
  const auto [lo, hi] = options.window ? *options.window : s.main_lobe();
  if (!(hi > lo)) throw DomainError("enumeration window is empty");

  const double fsr_s = cavity::fsr(sig);
  const double step = std::min(cavity::airy_fwhm(sig), cavity::airy_fwhm(idl)) / 20.0;
  const double limit = 0.5 * fsr_s;
  const double shift = sig.phase_offset_rad / kTwoPi;
  const auto k_lo = static_cast<long>(std::ceil((lo - sig.reference_frequency_hz) / fsr_s + shift));
  const auto k_hi = static_cast<long>(std::floor((hi - sig.reference_frequency_hz) / fsr_s + shift));

  std::vector<Peak> peaks;
  for (long k = k_lo; k <= k_hi; ++k) {
    const double line = sig.reference_frequency_hz + fsr_s * (static_cast<double>(k) - shift);
    const Peak p = climb(s, line, step, limit);
    if (p.x < lo || p.x > hi) continue;
    if (!peaks.empty() && std::abs(p.x - peaks.back().x) < step) continue;
    peaks.push_back(p);
  }
  if (peaks.empty()) throw ComputationError("no comb line inside the enumeration window");

  const double top = std::max_element(peaks.begin(), peaks.end(), [](auto& a, auto& b) { return a.value < b.value; })->value;
  if (!(top > 0.0)) throw ComputationError("joint density vanishes across the window");
  double total = 0.0;
  for (const auto& p : peaks) {
    if (p.value < options.threshold * top) continue;
    ModeEntry m;
    m.signal_hz = p.x;
    m.idler_hz = out.pump_hz - p.x;
    m.peak_density = p.value;
    m.linewidth_joint_hz = half_width(s, p.x, 0.5 * p.value, step, limit, -1.0) +
                           half_width(s, p.x, 0.5 * p.value, step, limit, +1.0);
    total += p.value;
    out.modes.push_back(m);
  }
  for (auto& m : out.modes) m.weight = m.peak_density / total;
  std::sort(out.modes.begin(), out.modes.end(), [](auto& a, auto& b) { return a.signal_hz < b.signal_hz; });
  assign_clusters(out);
  return out;
}

ClusterSpectrum enumerate_modes(double temperature_c, const Device& device, double threshold) {
  EnumerationOptions options;
  options.threshold = threshold;
  return enumerate_modes(temperature_c, device, options);
}

std::vector<SpectrumSample> sample_spectrum(double temperature_c, const Device& device, double center_hz,
                                            double span_hz, double resolution_hz) {
  if (!(span_hz > 0.0 && resolution_hz > 0.0)) throw DomainError("span and resolution must be positive");
  const auto count = static_cast<std::size_t>(std::llround(span_hz / resolution_hz)) + 1;
  if (count > 50'000'000) throw DomainError("spectrum grid too large");
  const JointDensity s(device, temperature_c);
  std::vector<SpectrumSample> out;
  out.reserve(count);
  for (double nu : linspace(center_hz - 0.5 * span_hz, center_hz + 0.5 * span_hz, count)) out.push_back({nu, s(nu)});
  return out;
}

double dominant_mode_fraction(const ClusterSpectrum& spectrum) {
  if (spectrum.modes.empty()) throw ComputationError("spectrum has no modes");
  double total = 0.0;
  for (const auto& m : spectrum.modes) total += m.weight;
  return spectrum.dominant_mode().weight / total;
}

double effective_mode_number(std::span<const double> weights) {
  double sum = 0.0;
  double sq = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DomainError("mode weights must be nonnegative");
    sum += w;
    sq += w * w;
  }
  if (!(sq > 0.0)) throw DomainError("mode weights are all zero");
  return sum * sum / sq;
}

std::vector<ClusterSpectrum> spectrum_vs_temperature(std::span<const double> temperatures_c, const Device& device,
                                                     const EnumerationOptions& options) {
  std::vector<ClusterSpectrum> out;
  out.reserve(temperatures_c.size());
  const double t_cal = device.design.temperature_c();
  for (double t : temperatures_c) {
    if (std::abs(t - t_cal) > kTemperatureRangeK) {
      throw DomainError("temperature " + std::to_string(t) + " C is more than 2 K from calibration");
    }
    out.push_back(enumerate_modes(t, device, options));
  }
  return out;
}

double brightness(double pair_rate_per_s_per_mw, double dominant_fraction, double pair_escape,
                  double mode_bandwidth_hz) {
  if (!(mode_bandwidth_hz > 0.0)) throw DomainError("mode bandwidth must be positive");
  if (pair_rate_per_s_per_mw < 0.0) throw DomainError("pair rate must be nonnegative");
  return pair_rate_per_s_per_mw * dominant_fraction * pair_escape / (mode_bandwidth_hz * 1e-6);
}

double brightness(const ClusterSpectrum& spectrum, double pair_rate_per_s_per_mw, double pair_escape,
                  double mode_bandwidth_hz) {
  return brightness(pair_rate_per_s_per_mw, dominant_mode_fraction(spectrum), pair_escape, mode_bandwidth_hz);
}

double vernier_spacing(double fsr_a_hz, double fsr_b_hz) {
  const double d = std::abs(fsr_a_hz - fsr_b_hz);
  if (!(d > 0.0)) throw DomainError("equal free spectral ranges have no Vernier period");
  return fsr_a_hz * fsr_b_hz / d;
}

// ---------------------------------------------------------------------------

namespace {

double lorentzian(double x, double center, double fwhm) {
  const double u = 2.0 * (x - center) / fwhm;
  return 1.0 / (1.0 + u * u);
}

double wrapped_lorentzian(double x, double half_width, double period) {
  const double a = kTwoPi * half_width / period;
  return std::sinh(a) / (period * (std::cosh(a) - std::cos(kTwoPi * x / period)));
}

void check_instrument(const Instrument& instrument) {
  if (const auto* g = std::get_if<GratingInstrument>(&instrument)) {
    if (!(g->resolution_hz > 0.0)) throw DomainError("grating resolution must be positive");
  }
  if (const auto* f = std::get_if<ScanningFilterInstrument>(&instrument)) {
    if (!(f->fsr_hz > 0.0 && f->finesse > 0.0)) throw DomainError("filter FSR and finesse must be positive");
  }
}

}  // namespace

std::vector<double> render_modes(const ClusterSpectrum& spectrum, std::span<const double> grid_hz) {
  std::vector<double> out(grid_hz.size(), 0.0);
  for (const auto& m : spectrum.modes) {
    for (std::size_t i = 0; i < grid_hz.size(); ++i) out[i] += m.weight * lorentzian(grid_hz[i], m.signal_hz, m.linewidth_joint_hz);
  }
  return out;
}

std::vector<double> instrument_view(const ClusterSpectrum& spectrum, const Instrument& instrument,
                                    std::span<const double> grid_hz) {
  check_instrument(instrument);
  if (std::holds_alternative<DeltaInstrument>(instrument)) return render_modes(spectrum, grid_hz);
  std::vector<double> out(grid_hz.size(), 0.0);
  for (const auto& m : spectrum.modes) {
    const double gamma = m.linewidth_joint_hz;
    const double area = m.weight * kPi * gamma / 2.0;
    for (std::size_t i = 0; i < grid_hz.size(); ++i) {
      const double x = grid_hz[i] - m.signal_hz;
      if (const auto* g = std::get_if<GratingInstrument>(&instrument)) {
        const double r = g->resolution_hz;
        out[i] += m.weight * (gamma / 2.0) / r *
                  (std::atan(2.0 * (x + r / 2.0) / gamma) - std::atan(2.0 * (x - r / 2.0) / gamma));
      } else {
        const auto& f = std::get<ScanningFilterInstrument>(instrument);
        // Lorentzian widths add under convolution.
        const double half = 0.5 * (gamma + f.fsr_hz / f.finesse);
        out[i] += area * wrapped_lorentzian(x, half, f.fsr_hz);
      }
    }
  }
  return out;
}

std::vector<double> instrument_view(std::span<const double> grid_hz, std::span<const double> values,
                                    const Instrument& instrument) {
  check_instrument(instrument);
  if (grid_hz.size() != values.size()) throw DomainError("grid and values differ in length");
  if (grid_hz.size() < 2) throw DomainError("need at least two samples");
  const std::size_t n = grid_hz.size();
  const double dx = (grid_hz.back() - grid_hz.front()) / static_cast<double>(n - 1);
  std::vector<double> out(n, 0.0);
  if (std::holds_alternative<DeltaInstrument>(instrument)) {
    out.assign(values.begin(), values.end());
    return out;
  }
  if (const auto* g = std::get_if<GratingInstrument>(&instrument)) {
    // Box average; edge samples carry half weight when the bin edge falls on them.
    const double half = g->resolution_hz / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = std::abs(grid_hz[j] - grid_hz[i]);
        if (d < half - 1e-9 * dx) acc += values[j];
        else if (d <= half + 1e-9 * dx) acc += 0.5 * values[j];
      }
      out[i] = acc * dx / g->resolution_hz;
    }
    return out;
  }
  const auto& f = std::get<ScanningFilterInstrument>(instrument);
  const double half = 0.5 * f.fsr_hz / f.finesse;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += values[j] * wrapped_lorentzian(grid_hz[i] - grid_hz[j], half, f.fsr_hz);
    out[i] = acc * dx;
  }
  return out;
}

double wavelength_interval_to_hz(double interval_m, double wavelength_m) {
  if (!(interval_m > 0.0 && wavelength_m > 0.0)) throw DomainError("wavelengths must be positive");
  return kSpeedOfLight * interval_m / (wavelength_m * wavelength_m);
}

// ---------------------------------------------------------------------------

RedistributionResult redistribution_check(const Device& device, double temperature_c, double resolution_hz) {
  if (!(resolution_hz > 0.0)) throw DomainError("resolution must be positive");
  const JointDensity s(device, temperature_c);
  const auto [lo, hi] = s.main_lobe();
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / resolution_hz)) + 1;
  const auto grid = linspace(lo, hi, count);
  std::vector<double> resonant(count);
  std::vector<double> bare(count);
  for (std::size_t i = 0; i < count; ++i) {
    bare[i] = s.envelope(grid[i]);
    resonant[i] = bare[i] * s.signal_airy(grid[i]) * s.idler_airy(grid[i]);
  }
  const double int_resonant = trapezoid(grid, resonant);
  const double int_bare = trapezoid(grid, bare);
  if (!(int_resonant > 0.0)) throw ComputationError("resonant spectrum integrates to zero");
  RedistributionResult r;
  r.normalization = int_bare / int_resonant;
  for (auto& v : resonant) v *= r.normalization;
  r.integral_ratio = trapezoid(grid, resonant) / int_bare;
  const auto peak = static_cast<std::size_t>(std::max_element(resonant.begin(), resonant.end()) - resonant.begin());
  r.peak_signal_hz = grid[peak];
  r.peak_enhancement = resonant[peak] / bare[peak];
  return r;
}

// ---------------------------------------------------------------------------

ScanPoint summarize(const ClusterSpectrum& spectrum) {
  ScanPoint p;
  p.temperature_c = spectrum.temperature_c;
  p.cluster_count = spectrum.clusters.size();
  p.dominant_fraction = dominant_mode_fraction(spectrum);
  for (const auto& c : spectrum.clusters) p.cluster_weights.push_back(c.weight);
  const auto& strongest = spectrum.strongest_cluster();
  const auto idx = static_cast<std::size_t>(strongest.id);
  p.central_weight = strongest.weight;

  std::vector<double> sides;
  if (idx > 0) sides.push_back(p.cluster_weights[idx - 1]);
  if (idx + 1 < p.cluster_weights.size()) sides.push_back(p.cluster_weights[idx + 1]);
  if (!sides.empty()) p.side_to_central = std::accumulate(sides.begin(), sides.end(), 0.0) / sides.size() / strongest.weight;
  p.side_asymmetry = sides.size() == 2 ? std::abs(sides[0] - sides[1]) / (sides[0] + sides[1]) : 1.0;

  auto inner = spectrum.cluster_weights(strongest.id);
  p.central_k = effective_mode_number(inner);
  std::sort(inner.rbegin(), inner.rend());
  p.top_two_ratio = inner.size() > 1 ? inner[0] / inner[1] : std::numeric_limits<double>::infinity();

  if (spectrum.clusters.size() > 1) {
    p.cluster_spacing_hz = (spectrum.clusters.back().center_signal_hz - spectrum.clusters.front().center_signal_hz) /
                           static_cast<double>(spectrum.clusters.size() - 1);
  }
  std::vector<double> gaps;
  for (std::size_t i = 1; i < spectrum.modes.size(); ++i) {
    if (spectrum.modes[i].cluster_id == spectrum.modes[i - 1].cluster_id) {
      gaps.push_back(spectrum.modes[i].signal_hz - spectrum.modes[i - 1].signal_hz);
    }
  }
  if (!gaps.empty()) {
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    p.intra_cluster_spacing_hz = gaps[gaps.size() / 2];
  }
  return p;
}

TemperatureScan scan_temperature(const Device& device, std::span<const double> temperatures_c,
                                 const EnumerationOptions& options) {
  if (temperatures_c.empty()) throw DomainError("temperature scan is empty");
  TemperatureScan scan;
  for (const auto& s : spectrum_vs_temperature(temperatures_c, device, options)) scan.points.push_back(summarize(s));
  double sum = 0.0;
  scan.min_dominant_fraction = std::numeric_limits<double>::infinity();
  for (const auto& p : scan.points) {
    sum += p.dominant_fraction;
    scan.min_dominant_fraction = std::min(scan.min_dominant_fraction, p.dominant_fraction);
    scan.max_dominant_fraction = std::max(scan.max_dominant_fraction, p.dominant_fraction);
  }
  scan.mean_dominant_fraction = sum / static_cast<double>(scan.points.size());

  double best = std::numeric_limits<double>::infinity();
  bool have_three = false;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    const bool three = p.cluster_count == 3;
    if (three && !have_three) best = std::numeric_limits<double>::infinity();
    if (have_three && !three) continue;
    have_three = have_three || three;
    if (p.side_asymmetry < best) {
      best = p.side_asymmetry;
      scan.symmetric_index = i;
    }
  }
  for (std::size_t i = 1; i < scan.points.size(); ++i) {
    if (scan.points[i].top_two_ratio < scan.points[scan.balanced_index].top_two_ratio) scan.balanced_index = i;
  }
  return scan;
}

nlohmann::json to_json(const ClusterSpectrum& spectrum) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : spectrum.modes) {
    modes.push_back({{"signal_hz", m.signal_hz},
                     {"idler_hz", m.idler_hz},
                     {"weight", m.weight},
                     {"cluster_id", m.cluster_id},
                     {"linewidth_joint_hz", m.linewidth_joint_hz}});
  }
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : spectrum.clusters) {
    clusters.push_back({{"id", c.id},
                        {"center_signal_hz", c.center_signal_hz},
                        {"weight", c.weight},
                        {"mode_count", c.mode_count}});
  }
  return {{"temperature_c", spectrum.temperature_c},
          {"pump_hz", spectrum.pump_hz},
          {"threshold", spectrum.threshold},
          {"envelope_center_hz", spectrum.envelope_center_hz},
          {"dominant_fraction", dominant_mode_fraction(spectrum)},
          {"effective_mode_number", effective_mode_number(spectrum.weights())},
          {"modes", modes},
          {"clusters", clusters}};
}

nlohmann::json to_json(const ScanPoint& p) {
  return {{"temperature_c", p.temperature_c},
          {"cluster_count", p.cluster_count},
          {"dominant_fraction", p.dominant_fraction},
          {"central_weight", p.central_weight},
          {"side_to_central", p.side_to_central},
          {"side_asymmetry", p.side_asymmetry},
          {"central_k", p.central_k},
          {"top_two_ratio", std::isfinite(p.top_two_ratio) ? nlohmann::json(p.top_two_ratio) : nlohmann::json(nullptr)},
          {"cluster_spacing_hz", p.cluster_spacing_hz},
          {"intra_cluster_spacing_hz", p.intra_cluster_spacing_hz},
          {"cluster_weights", p.cluster_weights}};
}

}  // namespace clusterpdc::cluster
