#pragma once

// Ground-truth channel worlds.
//
// A world answers three questions for every (channel, slot): what a passive
// listen reports, what a pilot transmission reports, and what the true SNR
// was. Two implementations exist:
//
//  * SyntheticEnvironment: per-channel interference and fading processes,
//    realized up front for the whole horizon from one seed.
//  * TraceEnvironment: replay of recorded field data, raw per-sample or
//    per-window statistical aggregates.
//
// RSSI is the signal power excluding noise, so SNR = RSSI - noise exactly.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pamlr/core.hpp"
#include "pamlr/random.hpp"

namespace pamlr {

template <class E>
concept ChannelEnvironment = requires(const E& e, ChannelId c, TimeSlot t, SpreadingFactor sf) {
  { e.n_channels() } -> std::convertible_to<std::size_t>;
  /// Number of slots the world can serve; slots >= horizon() are exhausted.
  { e.horizon() } -> std::convertible_to<TimeSlot>;
  { e.sample_passive(c, t) } -> std::same_as<PassiveSample>;
  { e.sample_active(c, t, sf) } -> std::same_as<ActiveOutcome>;
  { e.ground_truth_snr(t) } -> std::same_as<std::vector<double>>;
};

// ---------------------------------------------------------------------------
// Process descriptions

struct NoInterference {};
/// Additive interference that is either off or `level_db` above the noise
/// floor. Each slot the state is resampled from Bernoulli(p_on) with
/// probability 1/mean_dwell, so P(on) = p_on and states last mean_dwell slots
/// on average between resamples.
struct OnOffInterference {
  double level_db = 30.0;
  double p_on = 0.6;
  double mean_dwell = 20.0;
};
/// Reflected-free random walk: x <- clamp(x + sigma*Z, lo, hi), started
/// uniformly inside [lo, hi].
struct GaussianWalk {
  double sigma_db = 1.0;
  double lo = 0.0;
  double hi = 20.0;
};
using InterferenceProcess = std::variant<NoInterference, OnOffInterference, GaussianWalk>;

struct NoFading {};
/// Shadowing loss |X_t| where X is a stationary Gaussian AR(1) process with
/// standard deviation sigma_db and correlation exp(-1/coherence_slots).
/// The loss is never negative, so a faded channel is never better than the
/// same channel without fading.
struct LogNormalShadow {
  double sigma_db = 8.0;
  double coherence_slots = 50.0;
};
using FadingProcess = std::variant<NoFading, LogNormalShadow, GaussianWalk>;

struct ChannelModel {
  double noise_base_dbm = -110.0;
  InterferenceProcess interference = NoInterference{};
  /// Transmit power minus path loss.
  double signal_base_dbm = -100.0;
  FadingProcess fading = NoFading{};
};

struct MeasurementOptions {
  /// Standard deviation of the measurement error on noise readings.
  double jitter_db = 1.0;
  /// Reception succeeds when snr >= min_snr (true) or snr > min_snr (false).
  bool reception_inclusive = true;
};

struct ScenarioSpec {
  std::string name = "custom";
  std::vector<ChannelModel> channels;
  TimeSlot horizon = 5000;
  MeasurementOptions measurement{};

  std::size_t n_channels() const { return channels.size(); }
};

inline std::vector<std::string> validate_scenario(const ScenarioSpec& spec) {
  std::vector<std::string> out;
  if (spec.channels.size() < 2) out.emplace_back("scenario needs at least 2 channels");
  if (!(spec.measurement.jitter_db >= 0.0)) out.emplace_back("jitter_db >= 0");
  for (std::size_t i = 0; i < spec.channels.size(); ++i) {
    const auto& ch = spec.channels[i];
    const std::string at = "channel " + std::to_string(i) + ": ";
    if (const auto* oo = std::get_if<OnOffInterference>(&ch.interference)) {
      if (!(oo->p_on >= 0.0 && oo->p_on <= 1.0)) out.push_back(at + "p_on in [0,1]");
      if (!(oo->mean_dwell >= 1.0)) out.push_back(at + "mean_dwell >= 1");
    }
    if (const auto* gw = std::get_if<GaussianWalk>(&ch.interference)) {
      if (!(gw->sigma_db >= 0.0)) out.push_back(at + "interference sigma >= 0");
      if (!(gw->lo <= gw->hi)) out.push_back(at + "interference clamp lo <= hi");
    }
    if (const auto* ls = std::get_if<LogNormalShadow>(&ch.fading)) {
      if (!(ls->sigma_db >= 0.0)) out.push_back(at + "fading sigma >= 0");
      if (!(ls->coherence_slots >= 1.0)) out.push_back(at + "coherence_slots >= 1");
    }
    if (const auto* gw = std::get_if<GaussianWalk>(&ch.fading)) {
      if (!(gw->sigma_db >= 0.0)) out.push_back(at + "fading sigma >= 0");
      if (!(gw->lo <= gw->hi)) out.push_back(at + "fading clamp lo <= hi");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario generators

/// Defaults shared by the synthetic scenarios.
struct ScenarioDefaults {
  static constexpr double kNoiseFloorDbm = -110.0;
  static constexpr double kSignalDbm = -100.0;
  static constexpr double kInterferenceLevelDb = 30.0;
  static constexpr double kInterferencePOn = 0.6;
  static constexpr double kInterferenceDwell = 20.0;
  static constexpr double kFadingSigmaDb = 8.0;
  static constexpr double kFadingCoherence = 50.0;
};

/// Interference diversity: channels 0-1 clean, the rest with strong on/off
/// interference; no fading and equal signal power everywhere.
inline ScenarioSpec make_scenario_a(Rng& /*rng*/, std::size_t n_channels = 10) {
  using D = ScenarioDefaults;
  ScenarioSpec spec;
  spec.name = "a";
  for (std::size_t i = 0; i < n_channels; ++i) {
    ChannelModel m;
    m.noise_base_dbm = D::kNoiseFloorDbm;
    m.signal_base_dbm = D::kSignalDbm;
    if (i >= 2) m.interference = OnOffInterference{D::kInterferenceLevelDb, D::kInterferencePOn, D::kInterferenceDwell};
    spec.channels.push_back(m);
  }
  return spec;
}

/// Fading diversity: channels 0-1 unfaded, the rest with strong shadowing;
/// identical noise everywhere.
inline ScenarioSpec make_scenario_b(Rng& /*rng*/, std::size_t n_channels = 10) {
  using D = ScenarioDefaults;
  ScenarioSpec spec;
  spec.name = "b";
  for (std::size_t i = 0; i < n_channels; ++i) {
    ChannelModel m;
    m.noise_base_dbm = D::kNoiseFloorDbm;
    m.signal_base_dbm = D::kSignalDbm;
    if (i >= 2) m.fading = LogNormalShadow{D::kFadingSigmaDb, D::kFadingCoherence};
    spec.channels.push_back(m);
  }
  return spec;
}

/// Parameter ranges for the composite scenario; every channel draws each
/// parameter uniformly from its range. Signal bases span 26 dB, so against
/// the -110 dBm floor some channels sit below the SF8 demodulation limit
/// while others are comfortably above it.
struct ScenarioCRanges {
  double signal_lo_dbm = -122.0, signal_hi_dbm = -96.0;
  double level_lo_db = 0.0, level_hi_db = 10.0;
  double p_on_lo = 0.1, p_on_hi = 0.9;
  double dwell_lo = 5.0, dwell_hi = 100.0;
  double fade_sigma_lo_db = 0.0, fade_sigma_hi_db = 8.0;
  double coherence_lo = 10.0, coherence_hi = 100.0;
};

/// Interference and fading both diverse, drawn per channel from `ranges`.
/// The returned spec holds the concrete draws.
inline ScenarioSpec make_scenario_c(Rng& rng, std::size_t n_channels = 10, const ScenarioCRanges& r = {}) {
  ScenarioSpec spec;
  spec.name = "c";
  for (std::size_t i = 0; i < n_channels; ++i) {
    ChannelModel m;
    m.noise_base_dbm = ScenarioDefaults::kNoiseFloorDbm;
    m.signal_base_dbm = uniform(rng, r.signal_lo_dbm, r.signal_hi_dbm);
    OnOffInterference oo;
    oo.level_db = uniform(rng, r.level_lo_db, r.level_hi_db);
    oo.p_on = uniform(rng, r.p_on_lo, r.p_on_hi);
    oo.mean_dwell = uniform(rng, r.dwell_lo, r.dwell_hi);
    m.interference = oo;
    LogNormalShadow ls;
    ls.sigma_db = uniform(rng, r.fade_sigma_lo_db, r.fade_sigma_hi_db);
    ls.coherence_slots = uniform(rng, r.coherence_lo, r.coherence_hi);
    m.fading = ls;
    spec.channels.push_back(m);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Synthetic realization

class SyntheticEnvironment {
 public:
  SyntheticEnvironment(const ScenarioSpec& spec, std::uint64_t seed)
      : n_(spec.channels.size()), horizon_(spec.horizon), seed_(seed), options_(spec.measurement) {
    if (auto errs = validate_scenario(spec); !errs.empty()) {
      throw std::invalid_argument("invalid scenario: " + errs.front());
    }
    noise_.resize(static_cast<std::size_t>(horizon_) * n_);
    signal_.resize(static_cast<std::size_t>(horizon_) * n_);
    for (std::size_t c = 0; c < n_; ++c) realize_channel(spec.channels[c], c);
  }

  std::size_t n_channels() const { return n_; }
  TimeSlot horizon() const { return horizon_; }
  const MeasurementOptions& options() const { return options_; }

  /// Noise without measurement error.
  double true_noise_dbm(ChannelId c, TimeSlot t) const { return noise_[at(c, t)]; }
  double signal_dbm(ChannelId c, TimeSlot t) const { return signal_[at(c, t)]; }

  /// Noise as a receiver would read it: truth plus a jitter term keyed on
  /// (seed, channel, slot), so a passive and an active measurement of the same
  /// channel in the same slot see the same noise.
  double measured_noise_dbm(ChannelId c, TimeSlot t) const {
    const double truth = noise_[at(c, t)];
    if (options_.jitter_db == 0.0) return truth;
    return truth + options_.jitter_db * keyed_normal(seed_, c.index(), t);
  }

  PassiveSample sample_passive(ChannelId c, TimeSlot t) const { return {c, t, measured_noise_dbm(c, t)}; }

  ActiveOutcome sample_active(ChannelId c, TimeSlot t, SpreadingFactor sf) const {
    const double rssi = signal_[at(c, t)];
    const double snr = rssi - measured_noise_dbm(c, t);
    const double gmin = min_snr_for_sf(sf);
    const bool ok = options_.reception_inclusive ? snr >= gmin : snr > gmin;
    return ok ? ActiveOutcome::success(c, t, rssi, snr) : ActiveOutcome::loss(c, t);
  }

  std::vector<double> ground_truth_snr(TimeSlot t) const {
    std::vector<double> out(n_);
    for (std::size_t c = 0; c < n_; ++c) out[c] = signal_[at(ChannelId{c}, t)] - noise_[at(ChannelId{c}, t)];
    return out;
  }

 private:
  std::size_t at(ChannelId c, TimeSlot t) const {
    if (c.index() >= n_ || t >= horizon_) throw ContractViolation("environment query out of range");
    return static_cast<std::size_t>(t) * n_ + c.index();
  }

  void realize_channel(const ChannelModel& m, std::size_t c) {
    Rng irng(derive_seed(seed_, 2 * c));
    Rng frng(derive_seed(seed_, 2 * c + 1));

    bool on = false;
    double walk_i = 0.0;
    if (const auto* oo = std::get_if<OnOffInterference>(&m.interference)) on = bernoulli(irng, oo->p_on);
    if (const auto* gw = std::get_if<GaussianWalk>(&m.interference)) walk_i = uniform(irng, gw->lo, gw->hi);

    double shadow = 0.0;
    double rho = 0.0;
    double walk_f = 0.0;
    if (const auto* ls = std::get_if<LogNormalShadow>(&m.fading)) {
      rho = std::exp(-1.0 / ls->coherence_slots);
      shadow = ls->sigma_db * standard_normal(frng);
    }
    if (const auto* gw = std::get_if<GaussianWalk>(&m.fading)) walk_f = uniform(frng, gw->lo, gw->hi);

    for (TimeSlot t = 0; t < horizon_; ++t) {
      double interference = 0.0;
      if (const auto* oo = std::get_if<OnOffInterference>(&m.interference)) {
        if (t > 0 && bernoulli(irng, 1.0 / oo->mean_dwell)) on = bernoulli(irng, oo->p_on);
        interference = on ? oo->level_db : 0.0;
      } else if (const auto* gw = std::get_if<GaussianWalk>(&m.interference)) {
        if (t > 0) walk_i = std::clamp(walk_i + gw->sigma_db * standard_normal(irng), gw->lo, gw->hi);
        interference = walk_i;
      }

      double loss = 0.0;
      if (const auto* ls = std::get_if<LogNormalShadow>(&m.fading)) {
        if (t > 0) shadow = rho * shadow + std::sqrt(1.0 - rho * rho) * ls->sigma_db * standard_normal(frng);
        loss = std::abs(shadow);
      } else if (const auto* gw = std::get_if<GaussianWalk>(&m.fading)) {
        if (t > 0) walk_f = std::clamp(walk_f + gw->sigma_db * standard_normal(frng), gw->lo, gw->hi);
        loss = walk_f;
      }

      const std::size_t idx = static_cast<std::size_t>(t) * n_ + c;
      noise_[idx] = m.noise_base_dbm + interference;
      signal_[idx] = m.signal_base_dbm - loss;
    }
  }

  std::size_t n_;
  TimeSlot horizon_;
  std::uint64_t seed_;
  MeasurementOptions options_;
  std::vector<double> noise_;
  std::vector<double> signal_;
};

// ---------------------------------------------------------------------------
// Named scenarios

enum class ScenarioKind { A, B, C, Custom };

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view s) {
  if (s == "a" || s == "A") return ScenarioKind::A;
  if (s == "b" || s == "B") return ScenarioKind::B;
  if (s == "c" || s == "C") return ScenarioKind::C;
  if (s == "custom") return ScenarioKind::Custom;
  return std::nullopt;
}

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::A: return "a";
    case ScenarioKind::B: return "b";
    case ScenarioKind::C: return "c";
    case ScenarioKind::Custom: return "custom";
  }
  return "custom";
}

/// What is needed to build one trial's world from an environment seed.
struct ScenarioSetup {
  ScenarioKind kind = ScenarioKind::A;
  std::size_t n_channels = 10;
  TimeSlot horizon = 5000;
  MeasurementOptions measurement{};
  ScenarioCRanges c_ranges{};
  /// Channels and measurement options for Custom; the horizon above still applies.
  ScenarioSpec custom{};
};

/// The scenario drawn for environment seed `seed`. Scenario C redraws its
/// per-channel parameters for every seed.
inline ScenarioSpec scenario_spec_for(const ScenarioSetup& s, std::uint64_t seed) {
  if (s.kind == ScenarioKind::Custom) {
    ScenarioSpec spec = s.custom;
    spec.horizon = s.horizon;
    return spec;
  }
  Rng rng(seed);
  ScenarioSpec spec = s.kind == ScenarioKind::A   ? make_scenario_a(rng, s.n_channels)
                      : s.kind == ScenarioKind::B ? make_scenario_b(rng, s.n_channels)
                                                  : make_scenario_c(rng, s.n_channels, s.c_ranges);
  spec.horizon = s.horizon;
  spec.measurement = s.measurement;
  return spec;
}

inline SyntheticEnvironment make_environment(const ScenarioSetup& s, std::uint64_t seed) {
  return SyntheticEnvironment(scenario_spec_for(s, seed), derive_seed(seed, 99));
}

// ---------------------------------------------------------------------------
// Trace replay

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceRecord {
  TimeSlot t = 0;
  ChannelId channel;
  double noise_dbm = 0.0;
  std::optional<double> rssi_dbm;
  std::optional<double> snr_db;
  bool received = false;
};

struct AggregateRecord {
  std::uint64_t window_index = 0;
  ChannelId channel;
  double noise_p95_dbm = 0.0;
  double snr_p5_db = 0.0;
  double rssi_p5_dbm = 0.0;
};

enum class TraceFormat { Raw, Aggregate };

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  return std::nullopt;
}

/// Shortest decimal text that parses back to exactly v.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

/// Column index by name for a header line; throws if a name is missing.
inline std::vector<std::size_t> map_columns(std::string_view header, const std::vector<std::string>& names) {
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  const auto cols = split_csv(header);
  std::vector<std::size_t> idx;
  for (const auto& name : names) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw TraceFormatError("line 1: missing column '" + name + "'");
    idx.push_back(static_cast<std::size_t>(it - cols.begin()));
  }
  if (cols.size() != names.size()) throw TraceFormatError("line 1: expected " + std::to_string(names.size()) + " columns");
  return idx;
}

}  // namespace detail

inline std::vector<TraceRecord> parse_raw_trace(std::istream& in) {
  static const std::vector<std::string> kCols{"t", "channel", "noise_dbm", "rssi_dbm", "snr_db", "received"};
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("line 1: empty trace file");
  const auto col = detail::map_columns(line, kCols);

  std::vector<TraceRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    const auto f = detail::split_csv(sv);
    const std::string at = "line " + std::to_string(lineno) + ": ";
    if (f.size() != kCols.size()) throw TraceFormatError(at + "expected 6 fields, got " + std::to_string(f.size()));

    TraceRecord r;
    const auto t = detail::parse_uint(f[col[0]]);
    const auto ch = detail::parse_uint(f[col[1]]);
    const auto noise = detail::parse_double(f[col[2]]);
    const auto rec = detail::parse_bool(f[col[5]]);
    if (!t) throw TraceFormatError(at + "bad t");
    if (!ch) throw TraceFormatError(at + "bad channel");
    if (!noise) throw TraceFormatError(at + "bad noise_dbm");
    if (!rec) throw TraceFormatError(at + "bad received flag");
    r.t = *t;
    r.channel = ChannelId{*ch};
    r.noise_dbm = *noise;
    r.received = *rec;
    if (!f[col[3]].empty()) {
      r.rssi_dbm = detail::parse_double(f[col[3]]);
      if (!r.rssi_dbm) throw TraceFormatError(at + "bad rssi_dbm");
    }
    if (!f[col[4]].empty()) {
      r.snr_db = detail::parse_double(f[col[4]]);
      if (!r.snr_db) throw TraceFormatError(at + "bad snr_db");
    }
    const bool has_both = r.rssi_dbm && r.snr_db;
    const bool has_none = !r.rssi_dbm && !r.snr_db;
    if (r.received ? !has_both : !has_none) {
      throw TraceFormatError(at + (r.received ? "received=1 requires rssi_dbm and snr_db"
                                              : "received=0 requires empty rssi_dbm and snr_db"));
    }
    out.push_back(r);
  }
  return out;
}

inline std::vector<AggregateRecord> parse_aggregate_trace(std::istream& in) {
  static const std::vector<std::string> kCols{"window_index", "channel", "noise_p95_dbm", "snr_p5_db", "rssi_p5_dbm"};
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("line 1: empty trace file");
  const auto col = detail::map_columns(line, kCols);

  std::vector<AggregateRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    const auto f = detail::split_csv(sv);
    const std::string at = "line " + std::to_string(lineno) + ": ";
    if (f.size() != kCols.size()) throw TraceFormatError(at + "expected 5 fields, got " + std::to_string(f.size()));
    const auto w = detail::parse_uint(f[col[0]]);
    const auto ch = detail::parse_uint(f[col[1]]);
    const auto noise = detail::parse_double(f[col[2]]);
    const auto snr = detail::parse_double(f[col[3]]);
    const auto rssi = detail::parse_double(f[col[4]]);
    if (!w || !ch || !noise || !snr || !rssi) throw TraceFormatError(at + "malformed field");
    out.push_back({*w, ChannelId{*ch}, *noise, *snr, *rssi});
  }
  return out;
}

inline void write_raw_trace(std::ostream& os, const std::vector<TraceRecord>& records) {
  os << "t,channel,noise_dbm,rssi_dbm,snr_db,received\n";
  for (const auto& r : records) {
    os << r.t << ',' << r.channel.index() << ',' << detail::format_double(r.noise_dbm) << ','
       << (r.rssi_dbm ? detail::format_double(*r.rssi_dbm) : "") << ','
       << (r.snr_db ? detail::format_double(*r.snr_db) : "") << ',' << (r.received ? 1 : 0) << '\n';
  }
}

inline void write_aggregate_trace(std::ostream& os, const std::vector<AggregateRecord>& records) {
  os << "window_index,channel,noise_p95_dbm,snr_p5_db,rssi_p5_dbm\n";
  for (const auto& r : records) {
    os << r.window_index << ',' << r.channel.index() << ',' << detail::format_double(r.noise_p95_dbm) << ','
       << detail::format_double(r.snr_p5_db) << ',' << detail::format_double(r.rssi_p5_dbm) << '\n';
  }
}

/// Replays recorded measurements. A query for a (channel, slot) without a
/// record returns the channel's most recent earlier record (or, before its
/// first record, the first one). Recorded values are returned unchanged.
///
/// Ground-truth SNR carries the last received SNR forward across gaps and
/// losses.
class TraceEnvironment {
 public:
  TraceEnvironment(std::vector<TraceRecord> records, TraceFormat format) : format_(format) {
    if (records.empty()) throw TraceFormatError("trace has no records");
    std::size_t n = 0;
    TimeSlot last_t = 0;
    for (const auto& r : records) {
      n = std::max(n, r.channel.index() + 1);
      last_t = std::max(last_t, r.t);
    }
    horizon_ = last_t + 1;
    per_channel_.resize(n);
    for (const auto& r : records) {
      auto& list = per_channel_[r.channel.index()];
      if (!list.empty() && r.t <= list.back().t) {
        throw TraceFormatError("channel " + std::to_string(r.channel.index()) + ": t must increase (t=" +
                               std::to_string(r.t) + " after t=" + std::to_string(list.back().t) + ")");
      }
      list.push_back(r);
    }
    for (std::size_t c = 0; c < n; ++c) {
      const auto& list = per_channel_[c];
      if (list.empty()) throw TraceFormatError("channel " + std::to_string(c) + " has no records");
      if (std::none_of(list.begin(), list.end(), [](const TraceRecord& r) { return r.snr_db.has_value(); })) {
        throw TraceFormatError("channel " + std::to_string(c) + " has no received record; ground-truth SNR undefined");
      }
    }
  }

  static TraceEnvironment from_aggregates(const std::vector<AggregateRecord>& aggs) {
    std::vector<TraceRecord> records;
    records.reserve(aggs.size());
    for (const auto& a : aggs) {
      records.push_back({a.window_index, a.channel, a.noise_p95_dbm, a.rssi_p5_dbm, a.snr_p5_db, true});
    }
    return TraceEnvironment(std::move(records), TraceFormat::Aggregate);
  }

  std::size_t n_channels() const { return per_channel_.size(); }
  TimeSlot horizon() const { return horizon_; }
  TraceFormat format() const { return format_; }

  /// The first n channels only.
  TraceEnvironment subset(std::size_t n) const {
    if (n == 0 || n > per_channel_.size()) throw std::invalid_argument("subset: n outside [1, N]");
    TraceEnvironment copy = *this;
    copy.per_channel_.resize(n);
    return copy;
  }

  const TraceRecord& record_at(ChannelId c, TimeSlot t) const {
    const auto& list = channel(c);
    auto it = std::upper_bound(list.begin(), list.end(), t, [](TimeSlot v, const TraceRecord& r) { return v < r.t; });
    return it == list.begin() ? list.front() : *std::prev(it);
  }

  PassiveSample sample_passive(ChannelId c, TimeSlot t) const { return {c, t, record_at(c, t).noise_dbm}; }

  /// Raw traces report the recorded outcome. Aggregate windows count as
  /// received iff their 5th-percentile SNR meets the SF minimum.
  ActiveOutcome sample_active(ChannelId c, TimeSlot t, SpreadingFactor sf) const {
    const auto& r = record_at(c, t);
    const bool ok = format_ == TraceFormat::Raw ? r.received : (*r.snr_db >= min_snr_for_sf(sf));
    return ok ? ActiveOutcome::success(c, t, *r.rssi_dbm, *r.snr_db) : ActiveOutcome::loss(c, t);
  }

  std::vector<double> ground_truth_snr(TimeSlot t) const {
    std::vector<double> out(per_channel_.size());
    for (std::size_t c = 0; c < per_channel_.size(); ++c) {
      const auto& list = per_channel_[c];
      auto it = std::upper_bound(list.begin(), list.end(), t, [](TimeSlot v, const TraceRecord& r) { return v < r.t; });
      std::optional<double> v;
      for (auto back = it; back != list.begin() && !v;) v = (--back)->snr_db;
      for (auto fwd = it; fwd != list.end() && !v; ++fwd) v = fwd->snr_db;
      out[c] = *v;
    }
    return out;
  }

 private:
  const std::vector<TraceRecord>& channel(ChannelId c) const {
    if (c.index() >= per_channel_.size()) throw ContractViolation("trace query: channel out of range");
    return per_channel_[c.index()];
  }

  TraceFormat format_;
  TimeSlot horizon_ = 0;
  std::vector<std::vector<TraceRecord>> per_channel_;
};

inline TraceEnvironment load_trace(const std::string& path, TraceFormat format) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError("cannot open trace file '" + path + "'");
  try {
    if (format == TraceFormat::Raw) return TraceEnvironment(parse_raw_trace(in), TraceFormat::Raw);
    return TraceEnvironment::from_aggregates(parse_aggregate_trace(in));
  } catch (const TraceFormatError& e) {
    throw TraceFormatError(path + ": " + e.what());
  }
}

/// Non-owning view, so Monte Carlo trials can share one large world.
template <ChannelEnvironment E>
class EnvironmentRef {
 public:
  explicit EnvironmentRef(const E& env) : env_(&env) {}
  std::size_t n_channels() const { return env_->n_channels(); }
  TimeSlot horizon() const { return env_->horizon(); }
  PassiveSample sample_passive(ChannelId c, TimeSlot t) const { return env_->sample_passive(c, t); }
  ActiveOutcome sample_active(ChannelId c, TimeSlot t, SpreadingFactor sf) const { return env_->sample_active(c, t, sf); }
  std::vector<double> ground_truth_snr(TimeSlot t) const { return env_->ground_truth_snr(t); }

 private:
  const E* env_;
};

static_assert(ChannelEnvironment<SyntheticEnvironment>);
static_assert(ChannelEnvironment<TraceEnvironment>);
static_assert(ChannelEnvironment<EnvironmentRef<TraceEnvironment>>);

}  // namespace pamlr
