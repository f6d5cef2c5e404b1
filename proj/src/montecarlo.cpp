#include "clusterpdc/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "clusterpdc/error.hpp"
#include "clusterpdc/random.hpp"

namespace clusterpdc::montecarlo {

namespace {

constexpr std::uint64_t kPulseStream = 0;
constexpr std::uint64_t kDarkStream = 1;
constexpr std::uint64_t kBlockPulses = 1 << 15;
constexpr double kPreMargin = 10e-9;  // HBT windows open this much before the pulse

std::uint64_t to_ps(double t) { return t <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(t * 1e12)); }

}  // namespace

void PulseTrainSpec::validate() const {
  if (!(pulse_length_s > 0.0 && repetition_hz > 0.0)) throw DomainError("pulse length and repetition rate must be positive");
  if (!(duty_cycle() <= 1.0)) throw DomainError("duty cycle exceeds 1");
  if (!(pump_power_mw > 0.0)) throw DomainError("pump power must be positive");
  if (!(pair_rate_per_s_per_mw >= 0.0)) throw DomainError("pair rate coefficient must be nonnegative");
}

double PulseTrainSpec::mean_pairs_per_pulse() const { return pair_rate_per_s_per_mw * pump_power_mw * pulse_length_s; }

void DetectorSpec::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw DomainError("detector efficiency must lie in [0, 1]");
  if (!(jitter_s >= 0.0 && dark_rate_per_s >= 0.0 && dead_time_s >= 0.0)) {
    throw DomainError("detector jitter, dark rate and dead time must be nonnegative");
  }
}

void BandpassFilter::validate() const {
  if (!(center_hz > 0.0 && width_hz > 0.0)) throw DomainError("filter center and width must be positive");
}

bool BandpassFilter::passes(double signal_hz) const { return std::abs(signal_hz - center_hz) <= 0.5 * width_hz; }

std::string to_string(PairStatistics s) { return s == PairStatistics::Thermal ? "thermal" : "poisson"; }

PairStatistics pair_statistics_from_string(const std::string& s) {
  if (s == "thermal") return PairStatistics::Thermal;
  if (s == "poisson") return PairStatistics::Poisson;
  throw ConfigError("pair statistics must be 'thermal' or 'poisson', got '" + s + "'");
}

std::string to_string(FilterArm a) {
  switch (a) {
    case FilterArm::Signal: return "signal";
    case FilterArm::Idler: return "idler";
    case FilterArm::Both: return "both";
  }
  return "signal";
}

FilterArm filter_arm_from_string(const std::string& s) {
  if (s == "signal") return FilterArm::Signal;
  if (s == "idler") return FilterArm::Idler;
  if (s == "both") return FilterArm::Both;
  throw ConfigError("filter arm must be 'signal', 'idler' or 'both', got '" + s + "'");
}

void SimulationConfig::validate() const {
  if (!(run_length_s > 0.0)) throw DomainError("run length must be positive");
  pulses.validate();
  if (!(gamma_signal > 0.0 && gamma_idler > 0.0)) throw DomainError("release rates must be positive");
  signal_detector.validate();
  idler_detector.validate();
  if (filter) filter->validate();
  if (!(lead_in_s >= 0.0)) throw DomainError("lead-in must be nonnegative");
  if (pulse_count() == 0) throw DomainError("run shorter than one pulse period");
}

std::uint64_t SimulationConfig::pulse_count() const {
  return static_cast<std::uint64_t>(std::floor(run_length_s * pulses.repetition_hz + 1e-9));
}

double SimulationConfig::pulse_start_s(std::uint64_t index) const {
  return lead_in_s + static_cast<double>(index) / pulses.repetition_hz;
}

SimulationResult simulate(const SimulationConfig& config, const cluster::ClusterSpectrum& spectrum) {
  std::vector<double> w;
  std::vector<double> nu;
  for (const auto& m : spectrum.modes) {
    w.push_back(m.weight);
    nu.push_back(m.signal_hz);
  }
  return simulate(config, w, nu);
}

SimulationResult simulate(const SimulationConfig& config, std::span<const double> weights,
                          std::span<const double> signal_hz) {
  config.validate();
  if (weights.empty() || weights.size() != signal_hz.size()) throw DomainError("mode table is empty or inconsistent");

  const bool filter_signal = config.filter && config.filter_arm != FilterArm::Idler;
  const bool filter_idler = config.filter && config.filter_arm != FilterArm::Signal;
  const std::size_t modes = weights.size();
  std::vector<char> passes(modes, 1);
  double total = 0.0;
  for (std::size_t m = 0; m < modes; ++m) {
    if (!(weights[m] >= 0.0)) throw DomainError("mode weights must be nonnegative");
    total += weights[m];
    if (config.filter) passes[m] = config.filter->passes(signal_hz[m]) ? 1 : 0;
  }
  if (!(total > 0.0)) throw DomainError("mode weights are all zero");

  SimulationResult result;
  auto& truth = result.truth;
  truth.pulses = config.pulse_count();
  truth.mean_pairs_per_pulse = config.pulses.mean_pairs_per_pulse();
  truth.pair_rate_per_s = truth.mean_pairs_per_pulse * config.pulses.repetition_hz;
  double kept = 0.0;
  double kept_sq = 0.0;
  for (std::size_t m = 0; m < modes; ++m) {
    truth.mode_weights.push_back(weights[m] / total);
    if (passes[m]) {
      kept += weights[m];
      kept_sq += weights[m] * weights[m];
    }
  }
  if (!(kept > 0.0)) throw ComputationError("no mode passes the bandpass filter");
  truth.effective_mode_number = kept * kept / kept_sq;

  std::vector<double> mean(modes);
  for (std::size_t m = 0; m < modes; ++m) mean[m] = truth.mean_pairs_per_pulse * truth.mode_weights[m];

  const double tau_p = config.pulses.pulse_length_s;
  const auto& sd = config.signal_detector;
  const auto& id = config.idler_detector;

  const std::uint64_t pulses = truth.pulses;
  const std::uint64_t blocks = (pulses + kBlockPulses - 1) / kBlockPulses;
  std::vector<std::vector<TimetagRecord>> out(blocks);
  std::vector<std::uint64_t> pair_counts(blocks, 0);

  const auto run_block = [&](std::uint64_t b) {
    auto& tags = out[b];
    std::uint64_t pairs = 0;
    const std::uint64_t end = std::min(pulses, (b + 1) * kBlockPulses);
    for (std::uint64_t k = b * kBlockPulses; k < end; ++k) {
      SplitMix64 rng(substream_seed(config.seed, kPulseStream, k));
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      std::exponential_distribution<double> release_s(config.gamma_signal);
      std::exponential_distribution<double> release_i(config.gamma_idler);
      std::normal_distribution<double> normal(0.0, 1.0);
      const double start = config.pulse_start_s(k);
      for (std::size_t m = 0; m < modes; ++m) {
        if (mean[m] <= 0.0) continue;
        std::uint64_t n = 0;
        if (config.statistics == PairStatistics::Thermal) {
          n = std::geometric_distribution<std::uint64_t>(1.0 / (1.0 + mean[m]))(rng);
        } else {
          n = std::poisson_distribution<std::uint64_t>(mean[m])(rng);
        }
        for (std::uint64_t j = 0; j < n; ++j) {
          ++pairs;
          const double birth = start + tau_p * uniform(rng);
          const double ts = birth + release_s(rng);
          const double ti = birth + release_i(rng);
          if (!(filter_signal && !passes[m])) {
            std::uint8_t ch = kSignalChannel;
            if (config.split_signal) ch = uniform(rng) < 0.5 ? kSplitChannelA : kSplitChannelB;
            if (uniform(rng) < sd.efficiency) tags.push_back({ch, to_ps(ts + sd.jitter_s * normal(rng))});
          }
          if (!(filter_idler && !passes[m])) {
            if (uniform(rng) < id.efficiency) tags.push_back({kIdlerChannel, to_ps(ti + id.jitter_s * normal(rng))});
          }
        }
      }
    }
    pair_counts[b] = pairs;
  };

  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(blocks, 1)));
  if (threads <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::uint64_t b = next++; b < blocks; b = next++) run_block(b);
      });
    }
  }

  std::vector<TimetagRecord> tags;
  std::size_t n_tags = 0;
  for (const auto& v : out) n_tags += v.size();
  tags.reserve(n_tags);
  for (auto& v : out) {
    tags.insert(tags.end(), v.begin(), v.end());
    std::vector<TimetagRecord>().swap(v);
  }
  truth.pairs = std::accumulate(pair_counts.begin(), pair_counts.end(), std::uint64_t{0});

  // Dark counts over the whole record, one substream per channel.
  const double record_s = config.pulse_start_s(pulses);
  std::vector<std::pair<std::uint8_t, const DetectorSpec*>> channels;
  if (config.split_signal) {
    channels = {{kIdlerChannel, &id}, {kSplitChannelA, &sd}, {kSplitChannelB, &sd}};
  } else {
    channels = {{kSignalChannel, &sd}, {kIdlerChannel, &id}};
  }
  for (const auto& [ch, det] : channels) {
    if (det->dark_rate_per_s <= 0.0) continue;
    SplitMix64 rng(substream_seed(config.seed, kDarkStream + ch, 0));
    const auto n = std::poisson_distribution<std::uint64_t>(det->dark_rate_per_s * record_s)(rng);
    std::uniform_real_distribution<double> uniform(0.0, record_s);
    for (std::uint64_t j = 0; j < n; ++j) tags.push_back({ch, to_ps(uniform(rng))});
  }

  std::sort(tags.begin(), tags.end(), [](const TimetagRecord& a, const TimetagRecord& b) {
    return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.channel < b.channel;
  });
  const std::vector<double> dead{sd.dead_time_s, id.dead_time_s, sd.dead_time_s, sd.dead_time_s};
  result.tags = apply_dead_time(tags, dead);
  return result;
}

std::vector<std::uint64_t> channel_times(std::span<const TimetagRecord> tags, std::uint8_t channel) {
  std::vector<std::uint64_t> t;
  for (const auto& r : tags) {
    if (r.channel == channel) t.push_back(r.time_ps);
  }
  if (!std::is_sorted(t.begin(), t.end())) std::sort(t.begin(), t.end());
  return t;
}

std::vector<TimetagRecord> apply_dead_time(std::span<const TimetagRecord> tags, std::span<const double> dead_time_s) {
  std::vector<TimetagRecord> out;
  out.reserve(tags.size());
  std::vector<std::uint64_t> last(256, 0);
  std::vector<char> seen(256, 0);
  for (const auto& r : tags) {
    const double dead = r.channel < dead_time_s.size() ? dead_time_s[r.channel] : 0.0;
    const auto dead_ps = static_cast<std::uint64_t>(std::llround(dead * 1e12));
    if (seen[r.channel] && r.time_ps - last[r.channel] < dead_ps) continue;
    seen[r.channel] = 1;
    last[r.channel] = r.time_ps;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

double Histogram::center_s(std::size_t bin) const {
  return (static_cast<double>(start_ps) + (static_cast<double>(bin) + 0.5) * static_cast<double>(bin_width_ps)) * 1e-12;
}

std::uint64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

Histogram coincidence_histogram(std::span<const TimetagRecord> tags, std::uint8_t channel_a, std::uint8_t channel_b,
                                double bin_width_s, double span_s) {
  if (!(bin_width_s > 0.0)) throw DomainError("bin width must be positive");
  if (!(span_s >= bin_width_s)) throw DomainError("span must cover at least one bin");
  Histogram h;
  h.bin_width_ps = std::llround(bin_width_s * 1e12);
  if (h.bin_width_ps <= 0) throw DomainError("bin width below 1 ps");
  const auto bins = static_cast<std::int64_t>(std::llround(span_s / bin_width_s));
  h.start_ps = -(bins * h.bin_width_ps) / 2;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const std::int64_t end_ps = h.start_ps + bins * h.bin_width_ps;

  const auto a = channel_times(tags, channel_a);
  const auto b = channel_times(tags, channel_b);
  std::size_t first = 0;
  for (const std::uint64_t ta : a) {
    const auto t = static_cast<std::int64_t>(ta);
    while (first < b.size() && static_cast<std::int64_t>(b[first]) - t < h.start_ps) ++first;
    for (std::size_t j = first; j < b.size(); ++j) {
      const std::int64_t d = static_cast<std::int64_t>(b[j]) - t;
      if (d >= end_ps) break;
      ++h.counts[static_cast<std::size_t>((d - h.start_ps) / h.bin_width_ps)];
    }
  }
  return h;
}

std::uint64_t count_pairs(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b, std::int64_t lo_ps,
                          std::int64_t hi_ps) {
  std::uint64_t n = 0;
  std::size_t first = 0;
  for (const std::uint64_t ta : a) {
    const auto t = static_cast<std::int64_t>(ta);
    while (first < b.size() && static_cast<std::int64_t>(b[first]) - t < lo_ps) ++first;
    for (std::size_t j = first; j < b.size() && static_cast<std::int64_t>(b[j]) - t <= hi_ps; ++j) ++n;
  }
  return n;
}

double fit_decay_rate(const Histogram& h, double from_s, double to_s) {
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double x = h.center_s(i);
    if (x < std::min(from_s, to_s) || x > std::max(from_s, to_s) || h.counts[i] == 0) continue;
    const double w = static_cast<double>(h.counts[i]);
    const double y = std::log(w);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++used;
  }
  if (used < 3) throw ComputationError("too few populated bins for a decay fit");
  const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  return std::abs(slope);
}

// ---------------------------------------------------------------------------

nlohmann::json RateReport::to_json() const {
  return {{"singles_a_per_s", singles_a},         {"singles_b_per_s", singles_b},
          {"coincidences_per_s", coincidences},   {"accidentals_per_s", accidentals},
          {"pair_rate_per_s", pair_rate},         {"efficiency_a", efficiency_a},
          {"efficiency_b", efficiency_b}};
}

RateReport klyshko(double singles_a, double singles_b, double coincidences, double accidentals) {
  if (!(singles_a > 0.0 && singles_b > 0.0)) throw DomainError("singles must be positive");
  if (!(accidentals >= 0.0 && coincidences >= accidentals)) throw DomainError("need C >= A >= 0");
  const double net = coincidences - accidentals;
  if (!(net > 0.0)) throw ComputationError("no coincidences above accidentals; pair rate undefined");
  RateReport r;
  r.singles_a = singles_a;
  r.singles_b = singles_b;
  r.coincidences = coincidences;
  r.accidentals = accidentals;
  r.pair_rate = singles_a * singles_b / net;
  r.efficiency_a = net / singles_b;
  r.efficiency_b = net / singles_a;
  return r;
}

nlohmann::json PulseTiming::to_json() const {
  return {{"pulse_length_s", pulse_length_s}, {"repetition_hz", repetition_hz}, {"lead_in_s", lead_in_s}, {"pulses", pulses}};
}

PulseTiming PulseTiming::from_json(const nlohmann::json& j) {
  PulseTiming t;
  t.pulse_length_s = j.at("pulse_length_s").get<double>();
  t.repetition_hz = j.at("repetition_hz").get<double>();
  t.lead_in_s = j.at("lead_in_s").get<double>();
  t.pulses = j.at("pulses").get<std::uint64_t>();
  return t;
}

nlohmann::json RateAnalysis::to_json() const {
  return {{"report", report.to_json()},          {"pair_rate_se_per_s", pair_rate_se},
          {"efficiency_a_se", efficiency_a_se},  {"efficiency_b_se", efficiency_b_se},
          {"dark_rate_a_per_s", dark_rate_a},    {"dark_rate_b_per_s", dark_rate_b},
          {"raw_coincidences", raw_coincidences}, {"raw_accidentals", raw_accidentals},
          {"run_time_s", run_time_s}};
}

namespace {

struct BlockTotals {
  double pulses = 0;
  double n_a = 0, n_b = 0;
  double gap_a = 0, gap_b = 0;
  double coinc = 0, side = 0;

  BlockTotals& operator+=(const BlockTotals& o) {
    pulses += o.pulses;
    n_a += o.n_a;
    n_b += o.n_b;
    gap_a += o.gap_a;
    gap_b += o.gap_b;
    coinc += o.coinc;
    side += o.side;
    return *this;
  }
  BlockTotals& operator-=(const BlockTotals& o) {
    pulses -= o.pulses;
    n_a -= o.n_a;
    n_b -= o.n_b;
    gap_a -= o.gap_a;
    gap_b -= o.gap_b;
    coinc -= o.coinc;
    side -= o.side;
    return *this;
  }
};

struct Estimate {
  RateReport report;
  double dark_a = 0.0;
  double dark_b = 0.0;
  double accidental_counts = 0.0;
};

class PulseClock {
 public:
  explicit PulseClock(const PulseTiming& t)
      : lead_ps_(static_cast<double>(t.lead_in_s) * 1e12), period_ps_(1e12 / t.repetition_hz), pulses_(t.pulses) {}

  // Pulse index clamped to [0, pulses) and the phase inside that period, ps.
  [[nodiscard]] std::pair<std::uint64_t, double> locate(std::uint64_t t_ps) const {
    const double rel = static_cast<double>(t_ps) - lead_ps_;
    if (rel < 0.0) return {0, rel};
    auto k = static_cast<std::uint64_t>(rel / period_ps_);
    if (k >= pulses_) k = pulses_ - 1;
    return {k, rel - static_cast<double>(k) * period_ps_};
  }

 private:
  double lead_ps_;
  double period_ps_;
  std::uint64_t pulses_;
};

}  // namespace

RateAnalysis analyze_rates(std::span<const TimetagRecord> tags, const PulseTiming& timing,
                           const AnalysisOptions& options) {
  if (timing.pulses == 0 || !(timing.repetition_hz > 0.0) || !(timing.pulse_length_s > 0.0)) {
    throw DomainError("pulse timing is incomplete");
  }
  if (!(options.window_s > 0.0)) throw DomainError("coincidence window must be positive");
  const double period = 1.0 / timing.repetition_hz;
  const double tau_p = timing.pulse_length_s;
  if (!(options.side_offset_s > options.window_s && options.side_offset_s < tau_p)) {
    throw DomainError("side-window offset must exceed the window and stay inside the pulse");
  }
  const double gap_from = tau_p + options.guard_s;
  const double gap_to = period - kPreMargin;
  if (!(gap_to > gap_from)) throw DomainError("no dark-count gap between pulses");
  const double gap_len = gap_to - gap_from;

  const std::size_t blocks = std::max<std::size_t>(2, std::min<std::size_t>(options.blocks, timing.pulses));
  const PulseClock clock(timing);
  const auto block_of = [&](std::uint64_t k) { return static_cast<std::size_t>(k * blocks / timing.pulses); };

  std::vector<BlockTotals> per(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::uint64_t lo = (b * timing.pulses + blocks - 1) / blocks;
    const std::uint64_t hi = ((b + 1) * timing.pulses + blocks - 1) / blocks;
    per[b].pulses = static_cast<double>(hi - lo);
  }

  const auto a = channel_times(tags, options.channel_a);
  const auto b = channel_times(tags, options.channel_b);
  const auto in_gap = [&](double phase_ps) { return phase_ps >= gap_from * 1e12 && phase_ps < gap_to * 1e12; };
  for (const auto t : a) {
    const auto [k, phase] = clock.locate(t);
    auto& blk = per[block_of(k)];
    blk.n_a += 1;
    if (in_gap(phase)) blk.gap_a += 1;
  }
  for (const auto t : b) {
    const auto [k, phase] = clock.locate(t);
    auto& blk = per[block_of(k)];
    blk.n_b += 1;
    if (in_gap(phase)) blk.gap_b += 1;
  }

  const auto half = static_cast<std::int64_t>(std::llround(0.5 * options.window_s * 1e12));
  const auto offset = static_cast<std::int64_t>(std::llround(options.side_offset_s * 1e12));
  std::size_t f0 = 0, f1 = 0, f2 = 0;
  const auto advance = [&](std::size_t& first, std::int64_t t, std::int64_t lo, std::int64_t hi) {
    while (first < b.size() && static_cast<std::int64_t>(b[first]) - t < lo) ++first;
    std::uint64_t n = 0;
    for (std::size_t j = first; j < b.size() && static_cast<std::int64_t>(b[j]) - t <= hi; ++j) ++n;
    return static_cast<double>(n);
  };
  for (const auto ta : a) {
    const auto t = static_cast<std::int64_t>(ta);
    auto& blk = per[block_of(clock.locate(ta).first)];
    blk.side += advance(f1, t, -offset - half, -offset + half);
    blk.coinc += advance(f0, t, -half, half);
    blk.side += advance(f2, t, offset - half, offset + half);
  }

  // Two uniform births in one pulse differ by d with density (tau_p - |d|) / tau_p^2.
  const double triangle = tau_p / (tau_p - options.side_offset_s);
  const auto estimate = [&](const BlockTotals& s) {
    const double run = s.pulses * period;
    const double gap_time = s.pulses * gap_len;
    Estimate e;
    e.dark_a = s.gap_a / gap_time;
    e.dark_b = s.gap_b / gap_time;
    e.accidental_counts = 0.5 * s.side * triangle;
    const double sa = s.n_a / run - e.dark_a;
    const double sb = s.n_b / run - e.dark_b;
    const double c = s.coinc / run;
    const double acc = std::min(c, e.accidental_counts / run);
    e.report = klyshko(sa, sb, c, acc);
    return e;
  };

  BlockTotals all;
  for (const auto& p : per) all += p;
  const Estimate full = estimate(all);

  std::vector<double> r(blocks), ea(blocks), eb(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    BlockTotals loo = all;
    loo -= per[i];
    const Estimate e = estimate(loo);
    r[i] = e.report.pair_rate;
    ea[i] = e.report.efficiency_a;
    eb[i] = e.report.efficiency_b;
  }
  const auto jackknife = [&](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss * static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  };

  RateAnalysis out;
  out.report = full.report;
  out.pair_rate_se = jackknife(r);
  out.efficiency_a_se = jackknife(ea);
  out.efficiency_b_se = jackknife(eb);
  out.dark_rate_a = full.dark_a;
  out.dark_rate_b = full.dark_b;
  out.raw_coincidences = static_cast<std::uint64_t>(all.coinc);
  out.raw_accidentals = full.accidental_counts;
  out.run_time_s = all.pulses * period;
  return out;
}

nlohmann::json G2Estimate::to_json() const {
  return {{"g2", g2},         {"standard_error", standard_error}, {"pulses", pulses},
          {"counts_a", counts_a}, {"counts_b", counts_b},        {"coincidences", coincidences}};
}

G2Estimate g2_hbt(std::span<const TimetagRecord> tags, const PulseTiming& timing, double window_s,
                  std::uint8_t channel_a, std::uint8_t channel_b) {
  if (!(window_s > 0.0)) throw DomainError("counting window must be positive");
  if (timing.pulses == 0 || !(timing.repetition_hz > 0.0)) throw DomainError("pulse timing is incomplete");
  const double period = 1.0 / timing.repetition_hz;
  if (!(window_s < period)) throw DomainError("counting window exceeds the pulse period");

  PulseTiming shifted = timing;
  shifted.lead_in_s = timing.lead_in_s - kPreMargin;
  const PulseClock clock(shifted);
  const double window_ps = window_s * 1e12;

  std::vector<TimetagRecord> sorted;
  const auto by_time = [](const TimetagRecord& x, const TimetagRecord& y) { return x.time_ps < y.time_ps; };
  if (!std::is_sorted(tags.begin(), tags.end(), by_time)) {
    sorted.assign(tags.begin(), tags.end());
    std::stable_sort(sorted.begin(), sorted.end(), by_time);
    tags = sorted;
  }

  G2Estimate g;
  g.pulses = timing.pulses;
  std::uint64_t current = 0;
  std::uint64_t na = 0, nb = 0;
  bool open = false;
  const auto flush = [&] {
    g.coincidences += na * nb;
    na = nb = 0;
  };
  for (const auto& r : tags) {
    if (r.channel != channel_a && r.channel != channel_b) continue;
    const auto [k, phase] = clock.locate(r.time_ps);
    if (phase < 0.0 || phase >= window_ps) continue;
    if (open && k != current) flush();
    open = true;
    current = k;
    if (r.channel == channel_a) {
      ++na;
      ++g.counts_a;
    } else {
      ++nb;
      ++g.counts_b;
    }
  }
  flush();
  if (g.counts_a == 0 || g.counts_b == 0) throw ComputationError("no counts in one HBT arm; g2 undefined");
  g.g2 = static_cast<double>(g.coincidences) * static_cast<double>(g.pulses) /
         (static_cast<double>(g.counts_a) * static_cast<double>(g.counts_b));
  g.standard_error = g.coincidences > 0 ? g.g2 / std::sqrt(static_cast<double>(g.coincidences)) : g.g2;
  return g;
}

}  // namespace clusterpdc::montecarlo
