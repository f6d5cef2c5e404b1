#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clusterpdc/cluster.hpp"

namespace clusterpdc::montecarlo {

inline constexpr std::uint8_t kSignalChannel = 0;
inline constexpr std::uint8_t kIdlerChannel = 1;
inline constexpr std::uint8_t kSplitChannelA = 2;  // signal arm behind a 50:50 coupler
inline constexpr std::uint8_t kSplitChannelB = 3;

struct PulseTrainSpec {
  double pulse_length_s = 200e-9;
  double repetition_hz = 100e3;
  double pump_power_mw = 1.0;
  /// Emitted pairs per second per mW of in-pulse pump power.
  double pair_rate_per_s_per_mw = 7e6 * 0.152;

  void validate() const;
  [[nodiscard]] double duty_cycle() const { return pulse_length_s * repetition_hz; }
  [[nodiscard]] double period_s() const { return 1.0 / repetition_hz; }
  /// coefficient * power * pulse length
  [[nodiscard]] double mean_pairs_per_pulse() const;
};

struct DetectorSpec {
  double efficiency = 0.5;
  double jitter_s = 0.5e-9 / 2.355 / 1.4142135623730951;  // per detector; two add in quadrature
  double dark_rate_per_s = 100.0;
  double dead_time_s = 50e-9;

  void validate() const;
};

struct TimetagRecord {
  std::uint8_t channel = 0;
  std::uint64_t time_ps = 0;

  friend bool operator==(const TimetagRecord&, const TimetagRecord&) = default;
};

/// Rectangular passband on the signal frequency of a mode.
struct BandpassFilter {
  double center_hz = 0.0;
  double width_hz = 0.0;

  void validate() const;
  [[nodiscard]] bool passes(double signal_hz) const;
};

enum class FilterArm { Signal, Idler, Both };
enum class PairStatistics { Poisson, Thermal };

std::string to_string(PairStatistics s);
PairStatistics pair_statistics_from_string(const std::string& s);
std::string to_string(FilterArm a);
FilterArm filter_arm_from_string(const std::string& s);

struct SimulationConfig {
  double run_length_s = 1.0;
  PulseTrainSpec pulses;
  double gamma_signal = 1.26e9;  // photon release rates, 1/s
  double gamma_idler = 1.18e9;
  DetectorSpec signal_detector;
  DetectorSpec idler_detector{0.1, 0.5e-9 / 2.355 / 1.4142135623730951, 1000.0, 50e-9};
  std::optional<BandpassFilter> filter;
  FilterArm filter_arm = FilterArm::Signal;
  /// Thermal: each mode carries geometric pair numbers (g2 = 1 + 1/K). Poisson: uncorrelated.
  PairStatistics statistics = PairStatistics::Thermal;
  /// Route the signal arm through a 50:50 coupler onto channels 2 and 3.
  bool split_signal = false;
  double lead_in_s = 1e-6;  // first pulse starts here, keeps jittered times positive
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
  [[nodiscard]] std::uint64_t pulse_count() const;
  [[nodiscard]] double pulse_start_s(std::uint64_t index) const;
};

struct GroundTruth {
  std::uint64_t pulses = 0;
  std::uint64_t pairs = 0;
  double mean_pairs_per_pulse = 0.0;
  double pair_rate_per_s = 0.0;       // expected, mean pairs per pulse * repetition rate
  double effective_mode_number = 0.0; // of the modes passing the filter
  std::vector<double> mode_weights;   // renormalized weights actually sampled
};

struct SimulationResult {
  std::vector<TimetagRecord> tags;  // sorted by (time, channel)
  GroundTruth truth;
};

/// Emits the timetag stream. Every pulse and every dark-count channel draws
/// from its own substream of `seed`, so the result does not depend on threads.
SimulationResult simulate(const SimulationConfig& config, const cluster::ClusterSpectrum& spectrum);

/// Same with explicit mode weights and signal frequencies (for synthetic studies).
SimulationResult simulate(const SimulationConfig& config, std::span<const double> weights,
                          std::span<const double> signal_hz);

/// Times of one channel in ascending order.
std::vector<std::uint64_t> channel_times(std::span<const TimetagRecord> tags, std::uint8_t channel);

/// Keeps the first tag and drops any tag closer than dead_time to the last kept one, per channel.
std::vector<TimetagRecord> apply_dead_time(std::span<const TimetagRecord> tags, std::span<const double> dead_time_s);

// ---------------------------------------------------------------------------
// Analysis

struct Histogram {
  std::int64_t bin_width_ps = 0;
  std::int64_t start_ps = 0;  // left edge of bin 0
  std::vector<std::uint64_t> counts;

  [[nodiscard]] double center_s(std::size_t bin) const;
  [[nodiscard]] std::uint64_t total() const;
};

/// Counts of t_b - t_a over all tag pairs with the difference in [-span/2, span/2).
/// Bin edges are symmetric about zero when the span is an even multiple of the bin width.
Histogram coincidence_histogram(std::span<const TimetagRecord> tags, std::uint8_t channel_a, std::uint8_t channel_b,
                                double bin_width_s, double span_s);

/// Number of (a, b) tag pairs with t_b - t_a in [lo, hi] picoseconds.
std::uint64_t count_pairs(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b, std::int64_t lo_ps,
                          std::int64_t hi_ps);

/// Decay rate from a weighted log-linear fit of histogram counts over a delay range.
/// Returns the magnitude of the fitted slope, 1/s.
double fit_decay_rate(const Histogram& h, double from_s, double to_s);

struct RateReport {
  double singles_a = 0.0;      // 1/s, dark-corrected
  double singles_b = 0.0;
  double coincidences = 0.0;   // 1/s, raw
  double accidentals = 0.0;    // 1/s
  double pair_rate = 0.0;      // s_a s_b / (C - A)
  double efficiency_a = 0.0;   // (C - A) / s_b
  double efficiency_b = 0.0;   // (C - A) / s_a

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Klyshko estimates from rates. Throws ComputationError when C == A.
RateReport klyshko(double singles_a, double singles_b, double coincidences, double accidentals);

struct PulseTiming {
  double pulse_length_s = 200e-9;
  double repetition_hz = 100e3;
  double lead_in_s = 1e-6;
  std::uint64_t pulses = 0;

  [[nodiscard]] nlohmann::json to_json() const;
  static PulseTiming from_json(const nlohmann::json& j);
};

struct AnalysisOptions {
  std::uint8_t channel_a = kSignalChannel;
  std::uint8_t channel_b = kIdlerChannel;
  double window_s = 12e-9;       // full coincidence window centered on zero delay
  double side_offset_s = 60e-9;  // accidental windows at +-offset inside the same pulse
  double guard_s = 50e-9;        // after a pulse before the dark-count gap begins
  std::size_t blocks = 50;       // jackknife blocks
};

struct RateAnalysis {
  RateReport report;
  double pair_rate_se = 0.0;
  double efficiency_a_se = 0.0;
  double efficiency_b_se = 0.0;
  double dark_rate_a = 0.0;
  double dark_rate_b = 0.0;
  std::uint64_t raw_coincidences = 0;
  double raw_accidentals = 0.0;
  double run_time_s = 0.0;

  [[nodiscard]] nlohmann::json to_json() const;
};

RateAnalysis analyze_rates(std::span<const TimetagRecord> tags, const PulseTiming& timing,
                           const AnalysisOptions& options = {});

struct G2Estimate {
  double g2 = 0.0;
  double standard_error = 0.0;
  std::uint64_t pulses = 0;
  std::uint64_t counts_a = 0;
  std::uint64_t counts_b = 0;
  std::uint64_t coincidences = 0;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Pulse-windowed HBT estimate N_cc N_pulses / (N_a N_b), where the counts
/// are integrated over [pulse start, pulse start + window) of every pulse.
G2Estimate g2_hbt(std::span<const TimetagRecord> tags, const PulseTiming& timing, double window_s,
                  std::uint8_t channel_a = kSplitChannelA, std::uint8_t channel_b = kSplitChannelB);

}  // namespace clusterpdc::montecarlo
